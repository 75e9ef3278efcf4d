#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace phisigma {

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Requested work exceeds a memory or scan budget.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Query outside the range covered by a prebuilt table.
struct RangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct OverflowError : std::overflow_error {
    using std::overflow_error::overflow_error;
};

inline constexpr const char* kMemoryBudgetEnv = "PHISIGMA_MEMORY_BUDGET";
inline constexpr std::uint64_t kDefaultMemoryBudget = std::uint64_t{3} << 30;

/// Memory budget in bytes; overridable through PHISIGMA_MEMORY_BUDGET.
inline std::uint64_t memory_budget() {
    if (const char* env = std::getenv(kMemoryBudgetEnv); env && *env) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && v > 0) return static_cast<std::uint64_t>(v);
    }
    return kDefaultMemoryBudget;
}

inline void require_memory(std::uint64_t bytes, const std::string& what) {
    const std::uint64_t budget = memory_budget();
    if (bytes > budget) {
        throw ResourceError(what + " needs " + std::to_string(bytes) +
                            " bytes, budget is " + std::to_string(budget) +
                            " (set " + kMemoryBudgetEnv + ")");
    }
}

}  // namespace phisigma
