#pragma once

// Command-line front end. run() is the whole program minus main(), so tests
// can drive it in-process. Requires CLI11 and nlohmann/json.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phisigma/af_classifier.hpp"
#include "phisigma/anatomy.hpp"
#include "phisigma/constants.hpp"
#include "phisigma/errors.hpp"
#include "phisigma/sieve_core.hpp"
#include "phisigma/structure.hpp"
#include "phisigma/value_sets.hpp"

namespace phisigma::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitResource = 2;
inline constexpr int kExitUsage = 64;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Non-negative integer flag; accepts scientific notation such as 1e9.
inline u64 parse_count(const std::string& flag, const std::string& text) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw UsageError(flag + ": expected an integer, got '" + text + "'");
    }
    if (used != text.size() || !(v >= 0) || v != std::floor(v) || v > 9.007199254740992e15)
        throw UsageError(flag + ": expected a non-negative integer, got '" + text + "'");
    // plain digit strings keep full 64-bit precision
    if (text.find_first_not_of("0123456789") == std::string::npos) return std::stoull(text);
    return static_cast<u64>(v);
}

inline double parse_real(const std::string& flag, const std::string& text) {
    std::size_t used = 0;
    try {
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(flag + ": expected a number, got '" + text + "'");
}

inline Fn parse_fn(const std::string& text) {
    if (text == "phi") return Fn::phi;
    if (text == "sigma") return Fn::sigma;
    throw UsageError("--f: expected phi or sigma, got '" + text + "'");
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, sep);)
        if (!item.empty()) parts.push_back(item);
    return parts;
}

/// --xi: "1" (all ones), "default" (xi_i = 1 + 1/(10 (L0 - i)^3) with L0 = L)
/// or a comma list of L-1 values.
inline SimplexSpec parse_xi(const std::string& text, std::size_t L) {
    if (L < 2) throw UsageError("--L must be >= 2");
    if (text == "1" || text == "ones") return SimplexSpec::ones(L);
    if (text == "default") return SimplexSpec::xi_for(L, static_cast<long>(L));
    SimplexSpec s{L, {}};
    for (const auto& part : split(text, ',')) s.xi.push_back(parse_real("--xi", part));
    s.validate();
    return s;
}

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline std::string csv_cell(const Json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + csv_cell(v[i]);
        return s;
    }
    if (v.is_object()) return v.dump();
    return v.dump();
}

/// CSV for one flat object or an array of flat objects.
inline std::string to_csv(const Json& doc) {
    const Json rows = doc.is_array() ? doc : Json::array({doc});
    std::string out;
    if (rows.empty()) return out;
    bool first = true;
    for (const auto& [key, _] : rows[0].items()) {
        out += (first ? "" : ",") + key;
        first = false;
    }
    out += "\n";
    for (const auto& row : rows) {
        first = true;
        for (const auto& [_, val] : row.items()) {
            out += (first ? "" : ",") + csv_cell(val);
            first = false;
        }
        out += "\n";
    }
    return out;
}

inline void write_atomically(const std::filesystem::path& path, const std::string& body) {
    const std::filesystem::path tmp = path.string() + ".partial";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f << body;
        f.flush();
        if (!f) {
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline Json params_json(const AfParams& p) {
    return Json{{"x", p.x},
                {"epsilon", p.epsilon},
                {"S_formula", finite_or_null(p.S_formula)},
                {"log_S_formula", p.log_S_formula},
                {"S", p.S},
                {"S_overridden", p.S_overridden},
                {"delta", p.delta},
                {"omega", p.omega},
                {"L0_formula", p.L0_formula},
                {"L_formula", p.L_formula},
                {"L", p.L},
                {"L_overridden", p.L_overridden},
                {"L0_effective", p.L0_effective},
                {"xi", p.xi}};
}

namespace detail {

struct Options {
    // global
    unsigned threads = 0;
    std::string output;
    std::string format;
    // shared numeric flags, kept as text so scientific notation parses
    std::string x, y, n, S, L, alpha, samples, seed = "0", sample = "0", tol = "1e-15";
    std::string epsilon = "0.1", f = "phi", xi = "1", offset = "p0", limits, forms;
    std::string S_override, L_override, window, segment;
    bool streaming = false;
};

inline AfOverrides overrides_from(const Options& o) {
    AfOverrides ov;
    if (!o.S_override.empty()) ov.S = parse_real("--S-override", o.S_override);
    if (!o.L_override.empty()) ov.L = static_cast<long>(parse_count("--L-override", o.L_override));
    return ov;
}

inline std::string values_table_cmd(const Options& o, bool csv) {
    std::vector<u64> limits;
    for (const auto& part : split(o.limits, ',')) limits.push_back(parse_count("--limits", part));
    if (limits.empty()) throw UsageError("--limits: need at least one limit");
    TableOptions opt;
    opt.build.threads = o.threads;
    if (!o.segment.empty()) opt.build.segment = static_cast<std::size_t>(parse_count("--segment", o.segment));
    opt.streaming = o.streaming;
    if (!o.window.empty()) opt.streaming_window = parse_count("--window", o.window);
    const auto rows = values_table(limits, opt);
    if (csv) {
        std::ostringstream os;
        write_values_csv(os, rows);
        return os.str();
    }
    Json arr = Json::array();
    for (const auto& r : rows)
        arr.push_back({{"N", r.N},
                       {"V_phi", r.v_phi},
                       {"V_sigma", r.v_sigma},
                       {"V_common", r.v_common},
                       {"ratio_phi", r.ratio_phi},
                       {"ratio_sigma", r.ratio_sigma}});
    return arr.dump(2) + "\n";
}

inline Json constants_cmd(const Options& o) {
    const auto k = structure_constants(parse_real("--tol", o.tol));
    return {{"rho", k.rho}, {"f_prime_rho", k.f_prime_at_rho}, {"C", k.c_const}, {"D", k.d_const}, {"tol", k.tol}};
}

inline Json simplex_volume_cmd(const Options& o) {
    const auto L = static_cast<std::size_t>(parse_count("--L", o.L));
    const auto spec = parse_xi(o.xi, L);
    const u64 samples = parse_count("--samples", o.samples.empty() ? "1e6" : o.samples);
    const u64 seed = parse_count("--seed", o.seed);
    const auto est = simplex_volume_mc(spec, samples, seed, o.threads);
    Json j{{"L", L},
           {"xi", spec.xi},
           {"mean", est.mean},
           {"std_error", est.std_error},
           {"samples", est.samples},
           {"seed", est.seed},
           {"accepted", est.accepted}};
    if (L <= 3) j["exact"] = simplex_volume_exact(spec);
    return j;
}

inline Json normal_primes_cmd(const Options& o) {
    const u64 x = parse_count("--x", o.x);
    if (x < 2) throw DomainError("normal-primes: need x >= 2");
    const double xd = static_cast<double>(x);
    double S = 0;
    if (!o.S.empty()) {
        S = parse_real("--S", o.S);
    } else {
        if (!(xd > e_to_e())) throw DomainError("normal-primes: default S needs x > e^e; pass --S");
        S = default_S_override(xd, std::exp(std::pow(loglog(xd), 36.0)));
    }
    phisigma::detail::check_normality_S(S);
    const FactorSieve sieve(2, x + 2);
    std::vector<u64> primes;
    for (u64 p = 2; p <= x; ++p)
        if (sieve.is_prime(p)) primes.push_back(p);
    const u64 k = parse_count("--sample", o.sample);
    std::vector<u64> chosen;
    if (k == 0 || k >= primes.size()) {
        chosen = primes;
    } else {
        for (u64 i = 0; i < k; ++i) chosen.push_back(primes[i * primes.size() / k]);
    }
    std::vector<NormalityReport> reports(chosen.size());
    constexpr std::size_t kChunk = 4096;
    parallel_for_chunks((chosen.size() + kChunk - 1) / kChunk, o.threads, [&](std::size_t c) {
        for (std::size_t i = c * kChunk; i < std::min(chosen.size(), (c + 1) * kChunk); ++i)
            reports[i] = is_s_normal(chosen[i], S, sieve);
    });
    Json arr = Json::array();
    for (const auto& r : reports)
        arr.push_back({{"p", r.p},
                       {"passed_phi", r.passed(Fn::phi)},
                       {"passed_sigma", r.passed(Fn::sigma)},
                       {"worst_margin", finite_or_null(r.worst_margin())}});
    return arr;
}

inline Json smooth_count_cmd(const Options& o) {
    const auto s = psi_smooth_count(parse_count("--x", o.x), parse_count("--y", o.y));
    return {{"x", s.x}, {"y", s.y}, {"psi_exact", s.psi_exact}, {"u", s.u}, {"cep_estimate", s.cep_estimate}};
}

inline Json omega_census_cmd(const Options& o) {
    const auto c = omega_tail_census(parse_count("--x", o.x), parse_real("--alpha", o.alpha), o.threads);
    return {{"x", c.x},
            {"alpha", c.alpha},
            {"threshold", c.threshold},
            {"observed", c.observed},
            {"bound_shape", c.bound_shape},
            {"ratio", c.ratio}};
}

inline Json sieve_census_cmd(const Options& o) {
    std::vector<LinearForm> forms;
    for (const auto& part : split(o.forms, ';')) {
        const auto ab = split(part, ',');
        if (ab.size() != 2) throw UsageError("--forms: expected 'a,b;a,b;...'");
        forms.push_back({static_cast<std::int64_t>(parse_real("--forms", ab[0])),
                         static_cast<std::int64_t>(parse_real("--forms", ab[1]))});
    }
    const auto c = sieve_bound_census(forms, parse_count("--x", o.x));
    return {{"x", c.x}, {"observed", c.observed}, {"log_abs_E", c.log_abs_E}, {"shape", c.shape}, {"ratio", c.ratio}};
}

inline Json classify_cmd(const Options& o) {
    const u64 n = parse_count("--n", o.n);
    const Fn f = parse_fn(o.f);
    const double x = parse_real("--x", o.x);
    const auto params = af_params(x, parse_real("--epsilon", o.epsilon), overrides_from(o));
    const double hi = std::max(static_cast<double>(n), x) + 2;
    if (!(hi <= static_cast<double>(kMaxInput))) throw ResourceError("classify: n and x must stay below 1e12");
    const FactorSieve sieve(2, static_cast<u64>(hi));
    const auto r = classify(n, f, params, sieve);
    Json conds = Json::array();
    for (std::size_t i = 0; i < 9; ++i) conds.push_back({{"index", i}, {"holds", r.cond[i]}, {"detail", r.detail[i]}});
    return {{"n", r.n},
            {"f", to_string(r.f)},
            {"f_value", r.f_value},
            {"applicable", r.applicable},
            {"member", r.member},
            {"cond", conds},
            {"params", params_json(params)}};
}

inline Json capture_census_cmd(const Options& o) {
    const auto c = capture_census(parse_fn(o.f), parse_count("--x", o.x), parse_real("--epsilon", o.epsilon),
                                  overrides_from(o), o.threads);
    return {{"f", to_string(c.f)},
            {"x", c.x},
            {"total_values", c.total_values},
            {"values_with_outside_preimage", c.values_with_outside_preimage},
            {"fraction", c.fraction},
            {"preimages_scanned", c.preimages_scanned},
            {"params", params_json(c.params)}};
}

inline Json rl_sum_cmd(const Options& o) {
    const Fn f = parse_fn(o.f);
    const auto L = static_cast<std::size_t>(parse_count("--L", o.L));
    const auto spec = parse_xi(o.xi, L);
    Offset off;
    if (o.offset == "p0") off = Offset::from_p0;
    else if (o.offset == "p1") off = Offset::from_p1;
    else throw UsageError("--offset: expected p0 or p1");
    const u64 x = parse_count("--x", o.x);
    const double value = r_l_sum(f, spec, x, off, o.threads);
    return {{"f", to_string(f)}, {"x", x}, {"L", L}, {"xi", spec.xi}, {"offset", to_string(off)}, {"value", value}};
}

}  // namespace detail

/// Parses args (without the program name), runs one subcommand and writes
/// its output. Returns the process exit status.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Common values of Euler's phi and the sum-of-divisors sigma", "phisigma"};
    app.require_subcommand(1);
    app.fallthrough();
    detail::Options o;
    app.add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();
    app.add_option("--output", o.output, "write to this file (atomically) instead of stdout");
    app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    auto req = [](CLI::App* s, const char* name, std::string& dest, const char* help) {
        s->add_option(name, dest, help)->required();
    };
    auto opt = [](CLI::App* s, const char* name, std::string& dest, const char* help) {
        s->add_option(name, dest, help)->capture_default_str();
    };

    auto* vt = app.add_subcommand("values-table", "V_phi, V_sigma and their intersection at each limit");
    req(vt, "--limits", o.limits, "comma-separated ascending limits, e.g. 1e4,1e5");
    vt->add_flag("--streaming", o.streaming, "build value windows instead of full bitmaps");
    opt(vt, "--window", o.window, "streaming window length");
    opt(vt, "--segment", o.segment, "sieve segment length");

    auto* cs = app.add_subcommand("constants", "rho, F'(rho), C and D");
    opt(cs, "--tol", o.tol, "absolute tolerance (>= 1e-15)");

    auto* sv = app.add_subcommand("simplex-volume", "Monte Carlo volume of S_L(xi)");
    req(sv, "--L", o.L, "dimension L >= 2");
    opt(sv, "--xi", o.xi, "1, default, or a comma list of L-1 values");
    opt(sv, "--samples", o.samples, "sample count (default 1e6)");
    opt(sv, "--seed", o.seed, "64-bit seed");

    auto* np = app.add_subcommand("normal-primes", "S-normality of primes up to x");
    req(np, "--x", o.x, "upper limit for p");
    opt(np, "--S", o.S, "S >= e^e (default max(x^(1/10), e^e))");
    opt(np, "--sample", o.sample, "evenly spaced sample size (0 = all primes)");

    auto* sc = app.add_subcommand("smooth-count", "Psi(x, y) exactly, with the x u^-u comparator");
    req(sc, "--x", o.x, "x >= 1");
    req(sc, "--y", o.y, "y >= 2");

    auto* oc = app.add_subcommand("omega-census", "count of n <= x with Omega(n) >= alpha loglog x");
    req(oc, "--x", o.x, "x >= e^e");
    req(oc, "--alpha", o.alpha, "alpha > 1");

    auto* sb = app.add_subcommand("sieve-census", "n <= x with every a_i n + b_i prime");
    req(sb, "--forms", o.forms, "forms as 'a,b;a,b', at most four");
    req(sb, "--x", o.x, "x <= 1e8");

    auto* cl = app.add_subcommand("classify", "conditions (0)-(8) for one n");
    req(cl, "--n", o.n, "n >= 1");
    opt(cl, "--f", o.f, "phi or sigma");
    req(cl, "--x", o.x, "level x");
    opt(cl, "--epsilon", o.epsilon, "epsilon in (0, 1]");
    opt(cl, "--S-override", o.S_override, "use this S instead of the default");
    opt(cl, "--L-override", o.L_override, "use this L instead of the default");

    auto* cc = app.add_subcommand("capture-census", "values with a preimage outside A_f");
    opt(cc, "--f", o.f, "phi or sigma");
    req(cc, "--x", o.x, "x <= 1e7");
    opt(cc, "--epsilon", o.epsilon, "epsilon in (0, 1]");
    opt(cc, "--S-override", o.S_override, "use this S instead of the default");
    opt(cc, "--L-override", o.L_override, "use this L instead of the default");

    auto* rl = app.add_subcommand("rl-sum", "R_L: sum of 1/f(n) over n <= x in S_L(xi)");
    opt(rl, "--f", o.f, "phi or sigma");
    req(rl, "--x", o.x, "x <= 1e8");
    req(rl, "--L", o.L, "dimension L >= 2");
    opt(rl, "--xi", o.xi, "1, default, or a comma list of L-1 values");
    opt(rl, "--offset", o.offset, "p0 or p1: which prime starts the vector");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "phisigma: usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        std::string body;
        auto emit = [&](const Json& doc, bool csv_default) {
            const bool csv = o.format.empty() ? csv_default : o.format == "csv";
            body = csv ? to_csv(doc) : doc.dump(2) + "\n";
        };
        if (vt->parsed()) body = detail::values_table_cmd(o, o.format != "json");
        else if (cs->parsed()) emit(detail::constants_cmd(o), false);
        else if (sv->parsed()) emit(detail::simplex_volume_cmd(o), false);
        else if (np->parsed()) emit(detail::normal_primes_cmd(o), true);
        else if (sc->parsed()) emit(detail::smooth_count_cmd(o), false);
        else if (oc->parsed()) emit(detail::omega_census_cmd(o), false);
        else if (sb->parsed()) emit(detail::sieve_census_cmd(o), false);
        else if (cl->parsed()) emit(detail::classify_cmd(o), false);
        else if (cc->parsed()) emit(detail::capture_census_cmd(o), false);
        else if (rl->parsed()) emit(detail::rl_sum_cmd(o), false);

        if (o.output.empty()) {
            out << body;
        } else {
            write_atomically(o.output, body);
        }
        return kExitOk;
    } catch (const UsageError& e) {
        err << "phisigma: usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ResourceError& e) {
        err << "phisigma: resource error: " << e.what() << "\n";
        return kExitResource;
    } catch (const std::bad_alloc&) {
        err << "phisigma: resource error: out of memory\n";
        return kExitResource;
    } catch (const DomainError& e) {
        err << "phisigma: domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const RangeError& e) {
        err << "phisigma: range error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const OverflowError& e) {
        err << "phisigma: overflow: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        err << "phisigma: error: " << e.what() << "\n";
        return kExitDomain;
    }
}

}  // namespace phisigma::cli
