#pragma once

#include "phisigma/af_classifier.hpp"
#include "phisigma/anatomy.hpp"
#include "phisigma/constants.hpp"
#include "phisigma/errors.hpp"
#include "phisigma/parallel.hpp"
#include "phisigma/philox.hpp"
#include "phisigma/sieve_core.hpp"
#include "phisigma/structure.hpp"
#include "phisigma/value_sets.hpp"
