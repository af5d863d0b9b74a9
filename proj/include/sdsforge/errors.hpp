#pragma once

#include <stdexcept>
#include <string>

namespace sdsforge {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// zmod_group
struct NonUnitGenerator : Error { using Error::Error; };
struct UnknownLabel : Error { using Error::Error; };

// param_search
struct EvenModulus : Error { using Error::Error; };
struct NonPositiveLambda : Error { using Error::Error; };

// block_gen
struct MismatchedGroup : Error { using Error::Error; };
struct InfeasibleCardinality : Error { using Error::Error; };
struct SkewImpossible : Error { using Error::Error; };

// matcher
struct RangeOverflow : Error { using Error::Error; };
struct LineOutOfRange : Error { using Error::Error; };

// hadamard
struct ResidueOutOfRange : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

} // namespace sdsforge
