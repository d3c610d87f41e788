#pragma once

#include <stdexcept>
#include <string>

#include "sealpy/runtime/freelist.hpp"

namespace sealpy::runtime {

class non_finite_input : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Exact decimal expansion of a finite binary64 value, fixed notation, no
// rounding. Big-integer scratch comes from `scratch` via balloc/bfree.
std::string format_double_exact(double value, freelist_state& scratch);
std::string format_double_exact(double value);

// Size class used for a value: smallest k with 2^k >= limbs needed.
int scratch_exponent_for(double value);

} // namespace sealpy::runtime
