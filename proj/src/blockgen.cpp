#include "sdsforge/blockgen.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "sdsforge/rng.hpp"

namespace sdsforge {

namespace {

constexpr uint64_t kCountCap = UINT64_MAX / 2;
// largest orbit count for which the pairwise difference table is precomputed
constexpr uint32_t kFastOrbitCap = 128;
constexpr uint64_t kFastBuildCap = 200'000'000ull;
// cost ceiling for the composition DP (cells touched)
constexpr uint64_t kDpCostCap = 200'000'000ull;

uint64_t sat_add(uint64_t a, uint64_t b) {
    return (a > kCountCap - std::min(b, kCountCap)) ? kCountCap
                                                    : std::min(a + b, kCountCap);
}

uint64_t sat_mul(uint64_t a, uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a >= kCountCap || b >= kCountCap || a > kCountCap / b) return kCountCap;
    return a * b;
}

// C(n, m), saturating at kCountCap.
uint64_t sat_binom(uint64_t n, uint64_t m) {
    if (m > n) return 0;
    m = std::min(m, n - m);
    unsigned __int128 acc = 1;
    for (uint64_t i = 0; i < m; ++i) {
        acc = acc * (n - i) / (i + 1);
        if (acc > kCountCap) return kCountCap;
    }
    return static_cast<uint64_t>(acc);
}

double log_binom(uint64_t n, uint64_t m) {
    if (m > n) return -HUGE_VAL;
    return std::lgamma(double(n) + 1) - std::lgamma(double(m) + 1) -
           std::lgamma(double(n - m) + 1);
}

uint64_t mix64_local(uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

uint64_t label_key(const std::vector<uint32_t>& labels) {
    uint64_t h = 0x9E3779B97F4A7C15ull ^ labels.size();
    for (uint32_t l : labels) h = mix64_local(h ^ l);
    return h;
}

std::vector<uint32_t> expand_members(const OrbitTable& table,
                                     const std::vector<uint32_t>& labels) {
    std::vector<uint32_t> members;
    for (uint32_t l : labels) {
        const auto& orbit = table.orbit_of(l).members;
        members.insert(members.end(), orbit.begin(), orbit.end());
    }
    std::sort(members.begin(), members.end());
    return members;
}

// Draw in [0,1) with 53 random bits; avoids platform-dependent distributions.
double unit_double(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

} // namespace

BlockCandidate make_candidate(const OrbitTable& table,
                              std::span<const uint32_t> labels) {
    BlockCandidate x;
    x.labels.reserve(labels.size());
    for (uint32_t r : labels) {
        if (r >= table.modulus().value())
            throw UnknownLabel(std::to_string(r) + " is not a residue mod " +
                               std::to_string(table.modulus().value()));
        const uint32_t l = table.label_of(r);
        if (l == 0)
            throw Error("the trivial orbit {0} cannot join a block");
        x.labels.push_back(l);
    }
    std::sort(x.labels.begin(), x.labels.end());
    if (std::adjacent_find(x.labels.begin(), x.labels.end()) != x.labels.end())
        throw Error("duplicate orbit in block candidate");
    x.members = expand_members(table, x.labels);
    return x;
}

DiffVector diff_vector(const BlockCandidate& x, const OrbitTable& table,
                       const SymClassTable& classes) {
    if (!classes.same_group(table))
        throw MismatchedGroup("orbit table and class table built from different groups");
    const uint32_t v = table.modulus().value();
    std::vector<uint32_t> raw(v, 0);
    for (uint32_t a : x.members)
        for (uint32_t b : x.members)
            if (a != b) ++raw[table.modulus().sub(a, b)];

    DiffVector d;
    d.counts.reserve(classes.class_count());
    for (const Orbit& cls : classes.classes()) {
        const uint32_t val = raw[cls.label];
#ifndef NDEBUG
        for (uint32_t m : cls.members) assert(raw[m] == val);
#endif
        d.counts.push_back(val);
    }
    return d;
}

DiffAccumulator::DiffAccumulator(const OrbitTable& table, const SymClassTable& classes)
    : table_(table), classes_(classes) {
    if (!classes.same_group(table))
        throw MismatchedGroup("orbit table and class table built from different groups");
    nu_ = table.nontrivial_count();
    const uint64_t v = table.modulus().value();
    const uint64_t build_cost = (v - 1) * (v - 1);
    if (nu_ == 0 || nu_ > kFastOrbitCap || build_cost > kFastBuildCap) return;

    pair_table_.assign(size_t(nu_) * nu_ * nu_, 0);
    const auto& orbits = table.orbits();
    std::vector<uint32_t> raw(nu_);
    for (uint32_t i = 0; i < nu_; ++i) {
        for (uint32_t j = 0; j < nu_; ++j) {
            std::fill(raw.begin(), raw.end(), 0u);
            for (uint32_t a : orbits[i + 1].members)
                for (uint32_t b : orbits[j + 1].members)
                    if (a != b) ++raw[table.nontrivial_index(table.modulus().sub(a, b))];
            uint32_t* row = &pair_table_[(size_t(i) * nu_ + j) * nu_];
            for (uint32_t o = 0; o < nu_; ++o) {
                const uint32_t size = uint32_t(orbits[o + 1].members.size());
                assert(raw[o] % size == 0);
                row[o] = raw[o] / size; // per-residue rate
            }
        }
    }
    class_slot_.reserve(classes.class_count());
    for (const Orbit& cls : classes.classes())
        class_slot_.push_back(table.nontrivial_index(cls.label));
}

DiffVector DiffAccumulator::compute(const BlockCandidate& x) const {
    if (pair_table_.empty()) return diff_vector(x, table_, classes_);
    std::vector<uint32_t> acc(nu_, 0);
    std::vector<uint32_t> idx;
    idx.reserve(x.labels.size());
    for (uint32_t l : x.labels) idx.push_back(table_.nontrivial_index(l));
    for (uint32_t i : idx) {
        for (uint32_t j : idx) {
            const uint32_t* row = &pair_table_[(size_t(i) * nu_ + j) * nu_];
            for (uint32_t o = 0; o < nu_; ++o) acc[o] += row[o];
        }
    }
    DiffVector d;
    d.counts.reserve(class_slot_.size());
    for (uint32_t slot : class_slot_) d.counts.push_back(acc[slot]);
    return d;
}

CandidateStream::CandidateStream(const OrbitTable& table, const GenOptions& opt)
    : table_(table), opt_(opt), rng_(opt.seed) {
    const uint32_t v = table.modulus().value();
    const auto& orbits = table.orbits();

    if (opt_.skew) {
        if (v % 2 == 0)
            throw SkewImpossible("skew blocks need odd v, got " + std::to_string(v));
        if (table.subgroup().contains_negation())
            throw SkewImpossible("-1 lies in H, so orbits are negation-closed");
        for (size_t i = 1; i < orbits.size(); ++i) {
            const uint32_t l = orbits[i].label;
            const uint32_t nl = negate_orbit(table, l);
            if (nl == l)
                throw SkewImpossible("orbit of " + std::to_string(l) +
                                     " is negation-closed");
            if (l < nl) pairs_.emplace_back(l, nl);
        }
        uint64_t total = 0;
        for (auto [l, nl] : pairs_) total += table.orbit_of(l).members.size();
        assert(total == (uint64_t(v) - 1) / 2);
        if (opt_.cardinality != total)
            throw InfeasibleCardinality(
                "skew blocks mod " + std::to_string(v) + " have exactly " +
                std::to_string(total) + " elements, requested " +
                std::to_string(opt_.cardinality));
        const size_t P = pairs_.size();
        space_ = P < 63 ? (1ull << P) : kCountCap;
        exhaustive_ = space_ <= opt_.budget;
        return;
    }

    // group nontrivial orbits by size, ascending
    std::map<uint32_t, std::vector<uint32_t>> by_size;
    for (size_t i = 1; i < orbits.size(); ++i)
        by_size[uint32_t(orbits[i].members.size())].push_back(orbits[i].label);
    for (auto& [size, labels] : by_size)
        groups_.push_back(SizeGroup{size, std::move(labels)});

    // prefix-count DP: count_[g*(k+1)+t] = #unions from groups 0..g-1 of size t
    const uint32_t k = opt_.cardinality;
    const size_t G = groups_.size();
    uint64_t cost = 0;
    for (const auto& g : groups_)
        cost += uint64_t(k / g.size + 1) * (k + 1);
    if (cost > kDpCostCap)
        throw Error("candidate space too large to enumerate or weight; "
                    "use a larger subgroup");
    count_.assign((G + 1) * (k + 1), 0);
    log_count_.assign((G + 1) * (k + 1), -HUGE_VAL);
    count_[0] = 1;
    log_count_[0] = 0.0;
    for (size_t g = 0; g < G; ++g) {
        const uint32_t s = groups_[g].size;
        const uint64_t c = groups_[g].labels.size();
        for (uint32_t t = 0; t <= k; ++t) {
            uint64_t acc = 0;
            double best = -HUGE_VAL;
            std::vector<double> terms;
            for (uint64_t m = 0; m * s <= t && m <= c; ++m) {
                const uint64_t prev = count_[g * (k + 1) + (t - m * s)];
                if (prev == 0) continue;
                acc = sat_add(acc, sat_mul(prev, sat_binom(c, m)));
                const double lg =
                    log_count_[g * (k + 1) + (t - m * s)] + log_binom(c, m);
                terms.push_back(lg);
                best = std::max(best, lg);
            }
            count_[(g + 1) * (k + 1) + t] = acc;
            if (!terms.empty()) {
                double sum = 0;
                for (double lg : terms) sum += std::exp(lg - best);
                log_count_[(g + 1) * (k + 1) + t] = best + std::log(sum);
            }
        }
    }
    space_ = count_[G * (k + 1) + k];
    if (space_ == 0)
        throw InfeasibleCardinality("no union of orbits mod " + std::to_string(v) +
                                    " has " + std::to_string(k) + " elements");
    exhaustive_ = space_ <= opt_.budget;

    if (exhaustive_) {
        // depth-first over per-group multiplicities, pruned by the DP
        std::vector<uint32_t> comp(G, 0);
        auto dfs = [&](auto&& self, size_t g, uint32_t t) -> void {
            if (g == 0) {
                if (t == 0) compositions_.push_back(comp);
                return;
            }
            const uint32_t s = groups_[g - 1].size;
            const uint64_t c = groups_[g - 1].labels.size();
            for (uint64_t m = 0; m * s <= t && m <= c; ++m) {
                if (count_[(g - 1) * (k + 1) + (t - m * s)] == 0) continue;
                comp[g - 1] = uint32_t(m);
                self(self, g - 1, uint32_t(t - m * s));
            }
            comp[g - 1] = 0;
        };
        dfs(dfs, G, k);
        comp_idx_ = 0;
        if (!compositions_.empty()) {
            combo_.assign(G, {});
            for (size_t g = 0; g < G; ++g) {
                combo_[g].resize(compositions_[0][g]);
                for (uint32_t i = 0; i < compositions_[0][g]; ++i) combo_[g][i] = i;
            }
        } else {
            enum_done_ = true;
        }
    }
    scratch_.assign(G, {});
}

bool CandidateStream::remember(const BlockCandidate& x) {
    return seen_.insert(label_key(x.labels)).second;
}

bool CandidateStream::reserve(const BlockCandidate& x) { return remember(x); }

BlockCandidate CandidateStream::current_enum_candidate() const {
    std::vector<uint32_t> labels;
    for (size_t g = 0; g < groups_.size(); ++g)
        for (uint32_t i : combo_[g]) labels.push_back(groups_[g].labels[i]);
    std::sort(labels.begin(), labels.end());
    BlockCandidate x;
    x.labels = std::move(labels);
    x.members = expand_members(table_, x.labels);
    return x;
}

// Advances the per-group combination odometer; rolls over to the next
// composition when exhausted. Returns false when everything is spent.
bool CandidateStream::advance_state() {
    auto next_comb = [](std::vector<uint32_t>& c, uint32_t n) -> bool {
        const int m = int(c.size());
        for (int i = m - 1; i >= 0; --i) {
            if (c[i] < n - uint32_t(m - i)) {
                ++c[i];
                for (int j = i + 1; j < m; ++j) c[j] = c[j - 1] + 1;
                return true;
            }
        }
        return false;
    };
    for (size_t g = combo_.size(); g-- > 0;) {
        if (next_comb(combo_[g], uint32_t(groups_[g].labels.size()))) {
            for (size_t h = g + 1; h < combo_.size(); ++h) {
                const uint32_t m = compositions_[comp_idx_][h];
                combo_[h].resize(m);
                for (uint32_t i = 0; i < m; ++i) combo_[h][i] = i;
            }
            return true;
        }
    }
    if (++comp_idx_ >= compositions_.size()) return false;
    for (size_t g = 0; g < combo_.size(); ++g) {
        const uint32_t m = compositions_[comp_idx_][g];
        combo_[g].resize(m);
        for (uint32_t i = 0; i < m; ++i) combo_[g][i] = i;
    }
    return true;
}

std::optional<BlockCandidate> CandidateStream::next_enum() {
    if (opt_.skew) {
        const uint64_t lim = space_;
        while (mask_ < lim) {
            std::vector<uint32_t> labels;
            labels.reserve(pairs_.size());
            for (size_t b = 0; b < pairs_.size(); ++b)
                labels.push_back((mask_ >> b) & 1 ? pairs_[b].second : pairs_[b].first);
            ++mask_;
            std::sort(labels.begin(), labels.end());
            BlockCandidate x;
            x.labels = std::move(labels);
            if (!remember(x)) continue;
            x.members = expand_members(table_, x.labels);
            return x;
        }
        return std::nullopt;
    }
    while (!enum_done_) {
        BlockCandidate x = current_enum_candidate();
        if (!advance_state()) enum_done_ = true;
        if (!seen_.insert(label_key(x.labels)).second) continue;
        return x;
    }
    return std::nullopt;
}

BlockCandidate CandidateStream::sample_candidate() {
    std::vector<uint32_t> labels;
    if (opt_.skew) {
        labels.reserve(pairs_.size());
        uint64_t word = 0;
        for (size_t b = 0; b < pairs_.size(); ++b) {
            if (b % 64 == 0) word = rng_();
            labels.push_back((word >> (b % 64)) & 1 ? pairs_[b].second
                                                    : pairs_[b].first);
        }
    } else {
        const uint32_t k = opt_.cardinality;
        uint32_t t = k;
        // draw the composition backwards through the log DP, then labels
        for (size_t g = groups_.size(); g-- > 0;) {
            const uint32_t s = groups_[g].size;
            const uint64_t c = groups_[g].labels.size();
            double best = -HUGE_VAL;
            std::vector<double> w;
            std::vector<uint32_t> ms;
            for (uint64_t m = 0; m * s <= t && m <= c; ++m) {
                const double lg = log_count_[g * (k + 1) + (t - m * s)] + log_binom(c, m);
                if (lg == -HUGE_VAL) continue;
                w.push_back(lg);
                ms.push_back(uint32_t(m));
                best = std::max(best, lg);
            }
            double total = 0;
            for (double& lw : w) {
                lw = std::exp(lw - best);
                total += lw;
            }
            const double u = unit_double(rng_) * total;
            double run = 0;
            uint32_t chosen = ms.back();
            for (size_t i = 0; i < w.size(); ++i) {
                run += w[i];
                if (u < run) {
                    chosen = ms[i];
                    break;
                }
            }
            // partial Fisher-Yates for `chosen` labels without replacement
            auto& pool = scratch_[g];
            pool = groups_[g].labels;
            for (uint32_t i = 0; i < chosen; ++i) {
                const uint64_t j = i + uniform_below(rng_, pool.size() - i);
                std::swap(pool[i], pool[j]);
                labels.push_back(pool[i]);
            }
            t -= chosen * s;
        }
        assert(t == 0);
    }
    std::sort(labels.begin(), labels.end());
    BlockCandidate x;
    x.labels = std::move(labels);
    x.members = expand_members(table_, x.labels);
    return x;
}

std::optional<BlockCandidate> CandidateStream::next_sample() {
    // seen_ can never swallow the whole space here: sampling is only used
    // when space_ > budget, and at most `budget` keys are ever recorded.
    for (;;) {
        BlockCandidate x = sample_candidate();
        if (remember(x)) return x;
    }
}

std::optional<BlockCandidate> CandidateStream::next() {
    if (emitted_ >= opt_.budget) return std::nullopt;
    std::optional<BlockCandidate> x =
        exhaustive_ ? next_enum() : next_sample();
    if (x) ++emitted_;
    return x;
}

std::vector<BlockCandidate> generate_candidates(const OrbitTable& table,
                                                const GenOptions& opt) {
    CandidateStream stream(table, opt);
    std::vector<BlockCandidate> out;
    while (auto x = stream.next()) out.push_back(std::move(*x));
    return out;
}

std::string header_text(const FilePairHeader& h) {
    std::ostringstream out;
    out << "v=" << h.v << '\n';
    out << "H=";
    for (size_t i = 0; i < h.generators.size(); ++i)
        out << (i ? " " : "") << h.generators[i];
    out << '\n';
    out << "k=" << h.cardinality << '\n';
    out << "skew=" << (h.skew ? 1 : 0) << '\n';
    out << "n=" << h.n << '\n';
    out << "seed=" << h.seed << '\n';
    out << "lines=" << h.lines << '\n';
    out << "classes=";
    for (size_t i = 0; i < h.class_labels.size(); ++i)
        out << (i ? " " : "") << h.class_labels[i];
    out << '\n';
    return out.str();
}

FilePairHeader parse_header(std::istream& in) {
    FilePairHeader h;
    bool have_v = false, have_k = false, have_n = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("malformed header line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        std::istringstream vs(val);
        if (key == "v") {
            vs >> h.v;
            have_v = true;
        } else if (key == "H") {
            uint32_t g;
            while (vs >> g) h.generators.push_back(g);
        } else if (key == "k") {
            vs >> h.cardinality;
            have_k = true;
        } else if (key == "skew") {
            int s = 0;
            vs >> s;
            h.skew = s != 0;
        } else if (key == "n") {
            vs >> h.n;
            have_n = true;
        } else if (key == "seed") {
            vs >> h.seed;
        } else if (key == "lines") {
            vs >> h.lines;
        } else if (key == "classes") {
            uint32_t c;
            while (vs >> c) h.class_labels.push_back(c);
        } else {
            throw Error("unknown header key: " + key);
        }
        if (vs.fail() && key != "H" && key != "classes")
            throw Error("malformed header value: " + line);
    }
    if (!have_v || !have_k || !have_n)
        throw Error("header missing required keys (v, k, n)");
    if (h.class_labels.size() != h.n)
        throw Error("header lists " + std::to_string(h.class_labels.size()) +
                    " class labels, expected " + std::to_string(h.n));
    return h;
}

PairWriter::PairWriter(std::ostream& blocks, std::ostream& diffs)
    : blocks_(blocks), diffs_(diffs) {}

void PairWriter::write(const BlockCandidate& x, const DiffVector& d) {
    for (size_t i = 0; i < x.labels.size(); ++i)
        blocks_ << (i ? " " : "") << x.labels[i];
    blocks_ << '\n';
    for (size_t i = 0; i < d.counts.size(); ++i)
        diffs_ << (i ? " " : "") << d.counts[i];
    diffs_ << '\n';
    ++lines_;
}

std::vector<std::vector<uint32_t>> read_label_lines(std::istream& in) {
    std::vector<std::vector<uint32_t>> out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<uint32_t> labels;
        uint32_t l;
        while (ls >> l) labels.push_back(l);
        out.push_back(std::move(labels));
    }
    return out;
}

} // namespace sdsforge
