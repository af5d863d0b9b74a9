#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sdsforge/errors.hpp"

namespace sdsforge {

// Fixed-width rows of int32 multiplicities, stored flat. Rows are addressed
// 0-based internally; line numbers in files and reports are 1-based.
class TupleList {
public:
    explicit TupleList(uint32_t width);

    uint32_t width() const { return width_; }
    uint64_t size() const { return flat_.size() / width_; }
    std::span<const int32_t> row(uint64_t i) const {
        return {flat_.data() + i * width_, width_};
    }
    void push(std::span<const int32_t> row);

    // Parses multiplicity lines; every line must carry exactly `width` ints.
    static TupleList parse(std::istream& in, uint32_t width);

    friend bool operator==(const TupleList&, const TupleList&) = default;

private:
    uint32_t width_;
    std::vector<int32_t> flat_;
};

// The quadruple-sum instance: find one row from each list with
// row1 + row2 + row3 + row4 == target, coordinate-wise.
struct MatchProblem {
    std::array<std::shared_ptr<const TupleList>, 4> lists;
    std::vector<int32_t> target;

    uint32_t width() const { return uint32_t(target.size()); }
};

MatchProblem make_match_problem(std::array<std::shared_ptr<const TupleList>, 4> lists,
                                std::vector<int32_t> target);

// Meet-in-the-middle halving: b1 = floor(target/2) - a3, b2 = ceil(target/2) - a4,
// so a1 + a2 == b1 + b2 exactly when the quadruple hits the target.
struct HalvedProblem {
    TupleList b1;
    TupleList b2;
    bool nonnegative = true; // false when some derived entry went below zero
};

HalvedProblem halve_target(const MatchProblem& p);

// Additive hash over tuples: after subtracting per-coordinate offsets, packs
// entries into 64-bit words (eight per word when every offset entry fits in
// [0,127], else one per word) and takes a seeded odd-coefficient dot product
// mod 2^64. Packed mode is linear because byte lanes cannot carry; wide mode
// is linear unconditionally.
struct LinearHasher {
    uint32_t width = 0;
    bool packed = true;
    uint64_t seed = 0;
    std::vector<int32_t> offsets; // per coordinate
    std::vector<uint64_t> coeffs; // one per packed word

    uint64_t operator()(std::span<const int32_t> row) const;
};

// Builds the packed hasher over the union of the given lists; throws
// RangeOverflow when some coordinate spans more than 128 values.
LinearHasher build_hasher(std::span<const TupleList* const> lists, uint64_t seed);
// One-coordinate-per-word fallback; never throws for in-range int32 data.
LinearHasher build_hasher_wide(std::span<const TupleList* const> lists, uint64_t seed);

// Hash of a single row under the given hasher (RangeOverflow if the row
// leaves the packed byte range).
uint64_t pack_tuple(const LinearHasher& h, std::span<const int32_t> row);

struct MatchResult {
    uint64_t l1 = 0, l2 = 0, l3 = 0, l4 = 0; // 1-based line numbers
    bool verified = false;

    friend auto operator<=>(const MatchResult&, const MatchResult&) = default;
};

struct MatchOptions {
    uint64_t shards = 1;        // M, power of two
    uint64_t shard_lo = 0;      // first shard index to process
    uint64_t shard_hi = UINT64_MAX; // one past the last shard (clamped to M)
    uint64_t seed = 0;
    bool stop_on_first = false;
    int workers = 0; // 0 = all available
};

struct MatchCounters {
    uint64_t a_pairs = 0;             // pairs inserted into hash tables
    uint64_t b_pairs = 0;             // pairs probed against them
    uint64_t hash_hits = 0;           // key-equal candidates
    uint64_t rejected = 0;            // key-equal but not an exact match
    uint64_t max_table_entries = 0;   // peak entries in any one shard table
    uint64_t max_table_capacity = 0;  // peak slot count of any shard table
    uint64_t shards_processed = 0;
};

struct MatchOutcome {
    std::vector<MatchResult> results; // verified, sorted by (l1,l2,l3,l4)
    MatchCounters counters;
    LinearHasher hasher;
    bool wide_fallback = false;
    bool b_nonnegative = true;
};

// Runs the sharded meet-in-the-middle search. Results are independent of
// worker count and shard grouping; with stop_on_first the lowest-indexed
// shard containing a match contributes its smallest quadruple.
MatchOutcome run_match(const MatchProblem& p, const MatchOptions& opt);

// Re-checks one quadruple of 1-based line numbers against the target.
MatchResult verify_quadruple(const MatchProblem& p, uint64_t l1, uint64_t l2,
                             uint64_t l3, uint64_t l4);

// T. Wang's 64-bit avalanche mix; used to spread hash keys over table slots.
uint64_t wang_mix64(uint64_t key);

} // namespace sdsforge
