#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "sdsforge/errors.hpp"
#include "sdsforge/zmod.hpp"

namespace sdsforge {

// A union of nontrivial orbits: canonical labels (sorted, never 0) plus the
// expanded member set (sorted residues).
struct BlockCandidate {
    std::vector<uint32_t> labels;
    std::vector<uint32_t> members;

    friend bool operator==(const BlockCandidate&, const BlockCandidate&) = default;
};

// Builds a candidate from orbit labels; canonicalizes residues to labels,
// sorts, and rejects duplicates and 0.
BlockCandidate make_candidate(const OrbitTable& table, std::span<const uint32_t> labels);

// Difference multiplicities of a candidate, one entry per symmetry class in
// class-label order: counts[c] = #{(a,b) in X*X : a != b, a-b in class c}
// divided by the class size (the count is constant across a class).
struct DiffVector {
    std::vector<uint32_t> counts;

    friend bool operator==(const DiffVector&, const DiffVector&) = default;
};

// Direct per-residue computation. Checks (debug builds) that the raw count is
// constant on every class. Throws MismatchedGroup when table and classes were
// built from different (v, H).
DiffVector diff_vector(const BlockCandidate& x, const OrbitTable& table,
                       const SymClassTable& classes);

// Precomputes per-orbit-pair difference tables when the orbit count is small,
// then evaluates candidates by summing rows instead of enumerating member
// pairs. Falls back to the direct computation for large tables.
class DiffAccumulator {
public:
    DiffAccumulator(const OrbitTable& table, const SymClassTable& classes);
    DiffVector compute(const BlockCandidate& x) const;
    bool fast() const { return !pair_table_.empty(); }

private:
    const OrbitTable& table_;
    const SymClassTable& classes_;
    uint32_t nu_ = 0;
    std::vector<uint32_t> pair_table_;  // [(i*nu + j)*nu + o], per-residue rates
    std::vector<uint32_t> class_slot_;  // class index -> nontrivial orbit index
};

struct GenOptions {
    uint32_t cardinality = 0;
    bool skew = false;        // exactly one of {i, v-i} in the union, all i
    uint64_t budget = 0;      // max number of candidates to emit
    uint64_t seed = 0;
};

// Deterministic stream of distinct orbit-union candidates with the requested
// cardinality. When the whole space fits within the budget it is enumerated
// exhaustively (lexicographic); otherwise candidates are sampled uniformly
// with rejection of repeats.
class CandidateStream {
public:
    CandidateStream(const OrbitTable& table, const GenOptions& opt);
    std::optional<BlockCandidate> next();
    // Marks a candidate as already seen so the stream never re-emits it.
    // Returns false if it was already reserved/emitted.
    bool reserve(const BlockCandidate& x);
    // Saturating count of the full space (before budget/reservations).
    uint64_t space_size() const { return space_; }
    bool exhaustive() const { return exhaustive_; }

private:
    struct SizeGroup {
        uint32_t size = 0;
        std::vector<uint32_t> labels;
    };

    std::optional<BlockCandidate> next_enum();
    std::optional<BlockCandidate> next_sample();
    bool advance_state();
    BlockCandidate current_enum_candidate() const;
    BlockCandidate sample_candidate();
    bool remember(const BlockCandidate& x);

    const OrbitTable& table_;
    GenOptions opt_;
    uint64_t emitted_ = 0;
    uint64_t space_ = 0; // saturating
    bool exhaustive_ = false;
    bool enum_done_ = false;
    std::mt19937_64 rng_;
    std::unordered_set<uint64_t> seen_;

    // non-skew state
    std::vector<SizeGroup> groups_;
    std::vector<std::vector<uint32_t>> compositions_; // orbits taken per group
    size_t comp_idx_ = 0;
    std::vector<std::vector<uint32_t>> combo_; // chosen indices per group
    std::vector<uint64_t> count_;              // saturating prefix-count DP
    std::vector<double> log_count_;            // same DP in log space
    std::vector<std::vector<uint32_t>> scratch_;

    // skew state
    std::vector<std::pair<uint32_t, uint32_t>> pairs_; // (label, negated label)
    uint64_t mask_ = 0;
};

// Convenience wrapper: collects up to opt.budget candidates.
std::vector<BlockCandidate> generate_candidates(const OrbitTable& table,
                                                const GenOptions& opt);

// Sidecar header describing one emitted file pair.
struct FilePairHeader {
    uint32_t v = 0;
    std::vector<uint32_t> generators;
    uint32_t cardinality = 0;
    bool skew = false;
    uint32_t n = 0;
    uint64_t seed = 0;
    uint64_t lines = 0;
    std::vector<uint32_t> class_labels;
};

std::string header_text(const FilePairHeader& h);
FilePairHeader parse_header(std::istream& in);

// Streams candidate/difference lines to an F / F' file pair.
class PairWriter {
public:
    PairWriter(std::ostream& blocks, std::ostream& diffs);
    void write(const BlockCandidate& x, const DiffVector& d);
    uint64_t lines() const { return lines_; }

private:
    std::ostream& blocks_;
    std::ostream& diffs_;
    uint64_t lines_ = 0;
};

// Parses one F file (orbit labels per line).
std::vector<std::vector<uint32_t>> read_label_lines(std::istream& in);

} // namespace sdsforge
