#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdsforge/errors.hpp"

namespace sdsforge {

// Dense square matrix with entries in {+1, -1}, stored as int8 rows.
class SignMatrix {
public:
    explicit SignMatrix(uint32_t order);

    uint32_t order() const { return m_; }
    int8_t at(uint32_t r, uint32_t c) const { return a_[size_t(r) * m_ + c]; }
    void set(uint32_t r, uint32_t c, int8_t v);
    std::span<const int8_t> row(uint32_t r) const {
        return {a_.data() + size_t(r) * m_, m_};
    }

    friend bool operator==(const SignMatrix&, const SignMatrix&) = default;

private:
    uint32_t m_;
    std::vector<int8_t> a_;
};

// v x v circulant whose first row is -1 on the block residues and +1
// elsewhere; row r is the first row cyclically shifted right by r.
SignMatrix circulant_from_block(uint32_t v, std::span<const uint32_t> block);

// Plugs four order-v circulants into the 4v x 4v Goethals-Seidel array
// (R is the back-diagonal identity):
//   [  P1    P2R    P3R    P4R  ]
//   [ -P2R   P1    -P4tR   P3tR ]
//   [ -P3R   P4tR   P1    -P2tR ]
//   [ -P4R  -P3tR   P2tR   P1   ]
SignMatrix goethals_seidel(const SignMatrix& p1, const SignMatrix& p2,
                           const SignMatrix& p3, const SignMatrix& p4);

// H * H^T == order * I, exact integer test. Bit-packed rows with popcount;
// parallelized over row pairs.
bool verify_hadamard(const SignMatrix& h);
// Same predicate via naive int64 dot products, kept serial as the reference
// implementation for differential tests.
bool verify_hadamard_reference(const SignMatrix& h);
// Hadamard and H + H^T == 2I.
bool verify_skew_hadamard(const SignMatrix& h);

// True iff X contains exactly one of {i, v-i} for every nonzero i (forces
// |X| == (v-1)/2 and v odd).
bool is_skew_set(uint32_t v, std::span<const uint32_t> block);

struct SdsParams {
    uint32_t v = 0;
    std::array<uint32_t, 4> k{};
    uint32_t lambda = 0;
};

// A solution witness: subgroup generators plus four orbit-label index sets.
struct SdsCertificate {
    uint32_t v = 0;
    std::vector<uint32_t> generators;
    SdsParams params;
    std::array<std::vector<uint32_t>, 4> index_sets;
    std::optional<bool> skew; // declared expectation, checked when present
};

struct SdsReport {
    bool pass = false;
    bool cardinality_ok = false;
    bool lambda_consistent = false; // lambda == sum(k) - v
    bool difference_ok = false;     // every nonzero residue covered lambda times
    bool paf_ok = false;            // sum of periodic autocorrelations vanishes
    bool skew_ok = true;            // declared skew expectation, if any
    std::array<uint32_t, 4> cardinalities{};
    std::array<std::vector<uint32_t>, 4> blocks; // expanded member sets
    // residues whose difference count misses lambda, with the count (capped)
    std::vector<std::pair<uint32_t, uint64_t>> violations;
    std::optional<uint32_t> skew_block; // first skew block, if any

    std::string summary() const;
};

// Expands the index sets over the orbit table of (v, generators) and checks
// the difference-count property twice: directly, and through the periodic
// autocorrelation identity on the +-1 sequences.
SdsReport verify_sds(const SdsCertificate& cert);

// Index (0-based) of the first skew block among the expanded blocks.
std::optional<uint32_t> skew_block_index(uint32_t v,
                                         std::span<const std::vector<uint32_t>> blocks);

// Builds the four circulants (rotating the detected skew block into the P1
// slot when present) and assembles the Goethals-Seidel array.
SignMatrix assemble_goethals_seidel(const SdsCertificate& cert);
SignMatrix assemble_goethals_seidel(uint32_t v,
                                    std::span<const std::vector<uint32_t>> blocks);

} // namespace sdsforge
