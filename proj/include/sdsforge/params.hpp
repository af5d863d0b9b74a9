#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sdsforge/errors.hpp"
#include "sdsforge/zmod.hpp"

namespace sdsforge {

// Decomposition 4v = n1^2 + n2^2 + n3^2 + n4^2 with all n_i odd, ordered
// n1 >= n2 >= n3 >= n4 > 0 and n1 < v/2 so that every derived block size
// stays strictly between v/4 and 3v/4.
struct FourSquares {
    uint32_t v = 0;
    std::array<uint32_t, 4> n{};

    // Validates oddness, ordering, positivity and the sum of squares, but not
    // the n1 bound so that out-of-bound quadruples remain constructible for
    // error-path checks downstream.
    static FourSquares create(uint32_t v, std::array<uint32_t, 4> n);
};

// signs[i] == true picks k_i = (v + n_i)/2, false picks k_i = (v - n_i)/2.
using SignChoice = std::array<bool, 4>;

struct ParameterSet {
    uint32_t v = 0;
    std::array<uint32_t, 4> k{};
    uint32_t lambda = 0;
    SignChoice signs{};
    FourSquares source;
};

// All admissible decompositions of an odd v, descending lexicographic by
// (n1, n2, n3, n4). Throws EvenModulus for even input.
std::vector<FourSquares> four_squares_decompositions(uint32_t v);

// Derives the block sizes and lambda = sum(k) - v for one sign choice and
// re-verifies both counting identities exactly before returning. Throws
// NonPositiveLambda when the choice would force lambda <= 0.
ParameterSet make_parameter_set(const FourSquares& d, SignChoice signs);

// True iff some union of nontrivial orbits of the table has exactly k
// elements (bounded subset-sum over orbit sizes).
bool cardinality_reachable(const OrbitTable& table, uint32_t k);

struct OrbitFeasibility {
    std::array<bool, 4> feasible{};
    bool all() const { return feasible[0] && feasible[1] && feasible[2] && feasible[3]; }
};

OrbitFeasibility orbit_feasible(const ParameterSet& p, const OrbitTable& table);

// "v;k1,k2,k3,k4;lambda;signs;n1,n2,n3,n4" with signs rendered as +/- flags.
std::string report_line(const ParameterSet& p);

} // namespace sdsforge
