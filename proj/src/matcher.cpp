#include "sdsforge/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <istream>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdsforge {

namespace {

constexpr uint32_t kEmptySlot = UINT32_MAX;
constexpr uint64_t kMaxShards = 1ull << 26;

int resolve_workers(int requested) {
    if (requested > 0) return requested;
#ifdef _OPENMP
    return std::max(1, omp_get_max_threads());
#else
    return 1;
#endif
}

// Open-addressing set of (key, line1, line2), linear probing with step 1,
// power-of-two capacity, load factor kept at or below 1/2.
class PairHashSet {
public:
    void reset(uint64_t expected) {
        uint64_t cap = 16;
        while (cap < 2 * expected) cap <<= 1;
        slots_.assign(cap, Slot{0, kEmptySlot, 0});
        mask_ = cap - 1;
        count_ = 0;
    }

    void insert(uint64_t key, uint32_t l1, uint32_t l2) {
        uint64_t i = wang_mix64(key) & mask_;
        while (slots_[i].l1 != kEmptySlot) i = (i + 1) & mask_;
        slots_[i] = Slot{key, l1, l2};
        ++count_;
        assert(2 * count_ <= slots_.size());
    }

    template <typename F>
    void for_each_equal(uint64_t key, F&& fn) const {
        uint64_t i = wang_mix64(key) & mask_;
        while (slots_[i].l1 != kEmptySlot) {
            if (slots_[i].key == key) fn(slots_[i].l1, slots_[i].l2);
            i = (i + 1) & mask_;
        }
    }

    uint64_t capacity() const { return slots_.size(); }
    uint64_t count() const { return count_; }

private:
    struct Slot {
        uint64_t key;
        uint32_t l1;
        uint32_t l2;
    };
    std::vector<Slot> slots_;
    uint64_t mask_ = 0;
    uint64_t count_ = 0;
};

struct BucketedList {
    std::vector<uint64_t> hashes;
    std::vector<std::vector<uint32_t>> buckets; // residue -> line indices
    std::vector<uint32_t> nonempty;
};

BucketedList bucketize(const TupleList& list, const LinearHasher& h, uint64_t M) {
    BucketedList b;
    const uint64_t size = list.size();
    b.hashes.resize(size);
    b.buckets.resize(M);
    for (uint64_t i = 0; i < size; ++i) {
        const uint64_t hv = h(list.row(i));
        b.hashes[i] = hv;
        b.buckets[hv & (M - 1)].push_back(uint32_t(i));
    }
    for (uint64_t r = 0; r < M; ++r)
        if (!b.buckets[r].empty()) b.nonempty.push_back(uint32_t(r));
    return b;
}

bool exact_quad(const MatchProblem& p, uint64_t i1, uint64_t i2, uint64_t i3,
                uint64_t i4) {
    const auto r1 = p.lists[0]->row(i1);
    const auto r2 = p.lists[1]->row(i2);
    const auto r3 = p.lists[2]->row(i3);
    const auto r4 = p.lists[3]->row(i4);
    for (uint32_t c = 0; c < p.width(); ++c) {
        const int64_t sum =
            int64_t(r1[c]) + r2[c] + int64_t(r3[c]) + r4[c];
        if (sum != p.target[c]) return false;
    }
    return true;
}

void merge_counters(MatchCounters& into, const MatchCounters& from) {
    into.a_pairs += from.a_pairs;
    into.b_pairs += from.b_pairs;
    into.hash_hits += from.hash_hits;
    into.rejected += from.rejected;
    into.max_table_entries = std::max(into.max_table_entries, from.max_table_entries);
    into.max_table_capacity =
        std::max(into.max_table_capacity, from.max_table_capacity);
    into.shards_processed += from.shards_processed;
}

} // namespace

uint64_t wang_mix64(uint64_t key) {
    key = ~key + (key << 21);
    key ^= key >> 24;
    key = (key + (key << 3)) + (key << 8);
    key ^= key >> 14;
    key = (key + (key << 2)) + (key << 4);
    key ^= key >> 28;
    key += key << 31;
    return key;
}

TupleList::TupleList(uint32_t width) : width_(width) {
    if (width == 0) throw Error("tuple width must be positive");
}

void TupleList::push(std::span<const int32_t> row) {
    if (row.size() != width_)
        throw Error("row has " + std::to_string(row.size()) + " entries, expected " +
                    std::to_string(width_));
    flat_.insert(flat_.end(), row.begin(), row.end());
}

TupleList TupleList::parse(std::istream& in, uint32_t width) {
    TupleList list(width);
    std::string line;
    std::vector<int32_t> row;
    uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        row.clear();
        int64_t x;
        while (ls >> x) {
            if (x < INT32_MIN || x > INT32_MAX)
                throw Error("entry out of 32-bit range on line " +
                            std::to_string(lineno));
            row.push_back(int32_t(x));
        }
        if (row.size() != width)
            throw Error("line " + std::to_string(lineno) + " has " +
                        std::to_string(row.size()) + " entries, expected " +
                        std::to_string(width));
        list.push(row);
    }
    return list;
}

MatchProblem make_match_problem(std::array<std::shared_ptr<const TupleList>, 4> lists,
                                std::vector<int32_t> target) {
    if (target.empty()) throw Error("match target must have positive width");
    for (const auto& l : lists) {
        if (!l) throw Error("match problem needs four tuple lists");
        if (l->width() != target.size())
            throw Error("list width " + std::to_string(l->width()) +
                        " does not match target width " +
                        std::to_string(target.size()));
        if (l->size() >= kEmptySlot)
            throw Error("tuple list too long for 32-bit line indexing");
    }
    MatchProblem p;
    p.lists = std::move(lists);
    p.target = std::move(target);
    return p;
}

HalvedProblem halve_target(const MatchProblem& p) {
    const uint32_t n = p.width();
    HalvedProblem out{TupleList(n), TupleList(n), true};
    std::vector<int32_t> fl(n), ce(n);
    for (uint32_t c = 0; c < n; ++c) {
        fl[c] = p.target[c] >> 1; // arithmetic shift: floor for negatives too
        ce[c] = p.target[c] - fl[c];
    }
    std::vector<int32_t> row(n);
    const auto derive = [&](const TupleList& src, const std::vector<int32_t>& half,
                            TupleList& dst) {
        for (uint64_t i = 0; i < src.size(); ++i) {
            const auto r = src.row(i);
            for (uint32_t c = 0; c < n; ++c) {
                const int64_t d = int64_t(half[c]) - r[c];
                if (d < INT32_MIN || d > INT32_MAX)
                    throw RangeOverflow("derived entry overflows 32 bits");
                row[c] = int32_t(d);
                if (d < 0) out.nonnegative = false;
            }
            dst.push(row);
        }
    };
    derive(*p.lists[2], fl, out.b1);
    derive(*p.lists[3], ce, out.b2);
    return out;
}

uint64_t LinearHasher::operator()(std::span<const int32_t> row) const {
    uint64_t h = 0;
    if (packed) {
        const uint32_t words = uint32_t(coeffs.size());
        for (uint32_t w = 0; w < words; ++w) {
            uint64_t word = 0;
            const uint32_t base = w * 8;
            const uint32_t end = std::min(base + 8, width);
            for (uint32_t c = base; c < end; ++c) {
                const int64_t d = int64_t(row[c]) - offsets[c];
                // byte lanes hold [0, 255]; sums of two in-range tuples fit
                if (d < 0 || d > 255)
                    throw RangeOverflow("entry " + std::to_string(row[c]) +
                                        " at coordinate " + std::to_string(c) +
                                        " leaves the byte range after offset");
                word |= uint64_t(d) << (8 * (c - base));
            }
            h += coeffs[w] * word;
        }
    } else {
        for (uint32_t c = 0; c < width; ++c) {
            const uint64_t d = uint64_t(int64_t(row[c]) - offsets[c]);
            h += coeffs[c] * d; // linear mod 2^64 regardless of sign
        }
    }
    return h;
}

namespace {

LinearHasher build_common(std::span<const TupleList* const> lists, uint64_t seed,
                          bool packed) {
    if (lists.empty() || lists[0] == nullptr)
        throw Error("hasher needs at least one tuple list");
    const uint32_t n = lists[0]->width();
    LinearHasher h;
    h.width = n;
    h.packed = packed;
    h.seed = seed;
    h.offsets.assign(n, 0);

    std::vector<int32_t> lo(n, INT32_MAX), hi(n, INT32_MIN);
    bool any = false;
    for (const TupleList* list : lists) {
        if (list->width() != n) throw Error("hasher input widths differ");
        for (uint64_t i = 0; i < list->size(); ++i) {
            any = true;
            const auto row = list->row(i);
            for (uint32_t c = 0; c < n; ++c) {
                lo[c] = std::min(lo[c], row[c]);
                hi[c] = std::max(hi[c], row[c]);
            }
        }
    }
    if (any) {
        for (uint32_t c = 0; c < n; ++c) {
            h.offsets[c] = lo[c];
            if (packed && int64_t(hi[c]) - lo[c] > 127)
                throw RangeOverflow(
                    "coordinate " + std::to_string(c) + " spans [" +
                    std::to_string(lo[c]) + ", " + std::to_string(hi[c]) +
                    "], more than 128 values");
        }
    }
    const uint32_t words = packed ? (n + 7) / 8 : n;
    std::mt19937_64 rng(seed);
    h.coeffs.resize(words);
    for (uint32_t w = 0; w < words; ++w) h.coeffs[w] = rng() | 1;
    return h;
}

} // namespace

LinearHasher build_hasher(std::span<const TupleList* const> lists, uint64_t seed) {
    return build_common(lists, seed, true);
}

LinearHasher build_hasher_wide(std::span<const TupleList* const> lists,
                               uint64_t seed) {
    return build_common(lists, seed, false);
}

uint64_t pack_tuple(const LinearHasher& h, std::span<const int32_t> row) {
    if (row.size() != h.width)
        throw Error("tuple width " + std::to_string(row.size()) +
                    " does not match hasher width " + std::to_string(h.width));
    if (h.packed) {
        for (uint32_t c = 0; c < h.width; ++c) {
            const int64_t d = int64_t(row[c]) - h.offsets[c];
            if (d < 0 || d > 127)
                throw RangeOverflow("entry " + std::to_string(row[c]) +
                                    " at coordinate " + std::to_string(c) +
                                    " is outside [0,127] after offset");
        }
    }
    return h(row);
}

MatchOutcome run_match(const MatchProblem& p, const MatchOptions& opt) {
    if (opt.shards == 0 || (opt.shards & (opt.shards - 1)) != 0)
        throw Error("shard count must be a power of two, got " +
                    std::to_string(opt.shards));
    if (opt.shards > kMaxShards)
        throw Error("shard count exceeds " + std::to_string(kMaxShards));
    if (p.width() == 0 || !p.lists[0]) throw Error("uninitialized match problem");

    MatchOutcome out;
    HalvedProblem half = halve_target(p);
    out.b_nonnegative = half.nonnegative;

    const std::array<const TupleList*, 4> hash_inputs = {
        p.lists[0].get(), p.lists[1].get(), &half.b1, &half.b2};
    try {
        out.hasher = build_hasher({hash_inputs.data(), 4}, opt.seed);
    } catch (const RangeOverflow&) {
        out.hasher = build_hasher_wide({hash_inputs.data(), 4}, opt.seed);
        out.wide_fallback = true;
    }

    const uint64_t M = opt.shards;
    const uint64_t hi = std::min(opt.shard_hi, M);
    const uint64_t lo = std::min(opt.shard_lo, hi);
    const uint64_t range = hi - lo;
    if (range == 0) return out;
    for (const auto& l : p.lists)
        if (l->size() == 0) return out;

    const BucketedList A1 = bucketize(*p.lists[0], out.hasher, M);
    const BucketedList A2 = bucketize(*p.lists[1], out.hasher, M);
    const BucketedList B1 = bucketize(half.b1, out.hasher, M);
    const BucketedList B2 = bucketize(half.b2, out.hasher, M);

    std::vector<std::vector<MatchResult>> shard_results(range);
    std::atomic<uint64_t> first_shard{UINT64_MAX};

    auto process_shard = [&](uint64_t shard, PairHashSet& table,
                             MatchCounters& local) {
        uint64_t expected = 0;
        for (uint32_t r : A1.nonempty)
            expected += uint64_t(A1.buckets[r].size()) *
                        A2.buckets[(shard - r) & (M - 1)].size();
        table.reset(expected);
        local.max_table_capacity =
            std::max(local.max_table_capacity, table.capacity());
        for (uint32_t r : A1.nonempty) {
            const auto& L1 = A1.buckets[r];
            const auto& L2 = A2.buckets[(shard - r) & (M - 1)];
            if (L2.empty()) continue;
            for (uint32_t i1 : L1) {
                const uint64_t h1 = A1.hashes[i1];
                for (uint32_t i2 : L2) table.insert(h1 + A2.hashes[i2], i1, i2);
            }
        }
        local.a_pairs += expected;
        local.max_table_entries = std::max(local.max_table_entries, table.count());

        std::vector<MatchResult> found;
        for (uint32_t r : B1.nonempty) {
            const auto& L3 = B1.buckets[r];
            const auto& L4 = B2.buckets[(shard - r) & (M - 1)];
            if (L4.empty()) continue;
            for (uint32_t i3 : L3) {
                const uint64_t h3 = B1.hashes[i3];
                for (uint32_t i4 : L4) {
                    ++local.b_pairs;
                    table.for_each_equal(
                        h3 + B2.hashes[i4], [&](uint32_t i1, uint32_t i2) {
                            ++local.hash_hits;
                            if (exact_quad(p, i1, i2, i3, i4))
                                found.push_back(MatchResult{i1 + 1, i2 + 1,
                                                            uint64_t(i3) + 1,
                                                            uint64_t(i4) + 1, true});
                            else
                                ++local.rejected;
                        });
                }
            }
        }
        ++local.shards_processed;
        return found;
    };

    const int workers = resolve_workers(opt.workers);
#ifdef _OPENMP
    if (workers > 1) {
#pragma omp parallel num_threads(workers)
        {
            PairHashSet table;
            MatchCounters local;
#pragma omp for schedule(dynamic)
            for (int64_t s = 0; s < int64_t(range); ++s) {
                const uint64_t shard = lo + uint64_t(s);
                if (opt.stop_on_first &&
                    shard > first_shard.load(std::memory_order_relaxed))
                    continue;
                auto found = process_shard(shard, table, local);
                if (!found.empty()) {
                    shard_results[s] = std::move(found);
                    if (opt.stop_on_first) {
                        uint64_t cur = first_shard.load(std::memory_order_relaxed);
                        while (shard < cur &&
                               !first_shard.compare_exchange_weak(cur, shard)) {
                        }
                    }
                }
            }
#pragma omp critical(sdsforge_counters)
            merge_counters(out.counters, local);
        }
    } else
#endif
    {
        PairHashSet table;
        MatchCounters local;
        for (uint64_t s = 0; s < range; ++s) {
            auto found = process_shard(lo + s, table, local);
            if (!found.empty()) {
                shard_results[s] = std::move(found);
                if (opt.stop_on_first) break;
            }
        }
        merge_counters(out.counters, local);
    }

    if (opt.stop_on_first) {
        for (auto& sr : shard_results) {
            if (sr.empty()) continue;
            std::sort(sr.begin(), sr.end());
            out.results.push_back(sr.front());
            break;
        }
    } else {
        for (auto& sr : shard_results)
            out.results.insert(out.results.end(), sr.begin(), sr.end());
        std::sort(out.results.begin(), out.results.end());
    }
    return out;
}

MatchResult verify_quadruple(const MatchProblem& p, uint64_t l1, uint64_t l2,
                             uint64_t l3, uint64_t l4) {
    const std::array<uint64_t, 4> lines = {l1, l2, l3, l4};
    for (int i = 0; i < 4; ++i) {
        if (lines[i] == 0 || lines[i] > p.lists[i]->size())
            throw LineOutOfRange("line " + std::to_string(lines[i]) +
                                 " is outside list " + std::to_string(i + 1) +
                                 " (1.." + std::to_string(p.lists[i]->size()) + ")");
    }
    MatchResult r{l1, l2, l3, l4, false};
    r.verified = exact_quad(p, l1 - 1, l2 - 1, l3 - 1, l4 - 1);
    return r;
}

} // namespace sdsforge
