#include "sdsforge/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdsforge {

namespace {

uint64_t isqrt64(uint64_t x) {
    if (x == 0) return 0;
    uint64_t r = static_cast<uint64_t>(std::sqrt(static_cast<double>(x)));
    while (r * r > x) --r;
    while ((r + 1) * (r + 1) <= x) ++r;
    return r;
}

int64_t odd_floor(uint64_t x) {
    if (x == 0) return 0;
    return static_cast<int64_t>(x % 2 ? x : x - 1);
}

} // namespace

FourSquares FourSquares::create(uint32_t v, std::array<uint32_t, 4> n) {
    uint64_t sum = 0;
    for (int i = 0; i < 4; ++i) {
        if (n[i] == 0 || n[i] % 2 == 0)
            throw Error("decomposition parts must be positive odd, got " +
                        std::to_string(n[i]));
        if (i > 0 && n[i] > n[i - 1])
            throw Error("decomposition parts must be non-increasing");
        sum += static_cast<uint64_t>(n[i]) * n[i];
    }
    if (sum != 4ull * v)
        throw Error("squares sum to " + std::to_string(sum) + ", expected " +
                    std::to_string(4ull * v));
    FourSquares d;
    d.v = v;
    d.n = n;
    return d;
}

std::vector<FourSquares> four_squares_decompositions(uint32_t v) {
    if (v % 2 == 0)
        throw EvenModulus("four odd squares require odd v, got " + std::to_string(v));
    const uint64_t target = 4ull * v;
    std::vector<FourSquares> out;
    // Parts are enumerated descending so the output is already in descending
    // lexicographic order. n1 < v/2 keeps every block size in (v/4, 3v/4).
    const int64_t hi1 =
        odd_floor(std::min<uint64_t>(isqrt64(target - 3), (uint64_t(v) - 1) / 2));
    for (int64_t n1 = hi1; n1 >= 1; n1 -= 2) {
        const uint64_t r1 = target - uint64_t(n1) * n1; // >= 3 by choice of hi1
        const int64_t hi2 = odd_floor(std::min<uint64_t>(uint64_t(n1), isqrt64(r1 - 2)));
        for (int64_t n2 = hi2; n2 >= 1; n2 -= 2) {
            const uint64_t r2 = r1 - uint64_t(n2) * n2; // >= 2
            const int64_t hi3 =
                odd_floor(std::min<uint64_t>(uint64_t(n2), isqrt64(r2 - 1)));
            for (int64_t n3 = hi3; n3 >= 1; n3 -= 2) {
                const uint64_t r3 = r2 - uint64_t(n3) * n3; // >= 1
                const uint64_t n4 = isqrt64(r3);
                if (n4 * n4 != r3 || n4 % 2 == 0 || n4 > uint64_t(n3)) continue;
                out.push_back(FourSquares::create(
                    v, {static_cast<uint32_t>(n1), static_cast<uint32_t>(n2),
                        static_cast<uint32_t>(n3), static_cast<uint32_t>(n4)}));
            }
        }
    }
    return out;
}

ParameterSet make_parameter_set(const FourSquares& d, SignChoice signs) {
    ParameterSet p;
    p.v = d.v;
    p.signs = signs;
    p.source = d;
    std::array<int64_t, 4> twice{};
    int64_t twice_sum = 0;
    for (int i = 0; i < 4; ++i) {
        // v odd, n_i odd => v +- n_i even, so the halves are exact.
        twice[i] = signs[i] ? int64_t(d.v) + d.n[i] : int64_t(d.v) - d.n[i];
        twice_sum += twice[i];
    }
    const int64_t lambda = twice_sum / 2 - int64_t(d.v);
    if (lambda <= 0)
        throw NonPositiveLambda("sum(k) - v = " + std::to_string(lambda) +
                                " for v=" + std::to_string(d.v));
    p.lambda = static_cast<uint32_t>(lambda);
    for (int i = 0; i < 4; ++i) {
        if (twice[i] <= 0 || twice[i] % 2 != 0)
            throw Error("block size is not a positive integer for n=" +
                        std::to_string(d.n[i]));
        p.k[i] = static_cast<uint32_t>(twice[i] / 2);
    }

    // Both counting identities must hold exactly; any failure here is a logic
    // error, not bad input.
    int64_t pair_sum = 0;
    for (int i = 0; i < 4; ++i)
        pair_sum += int64_t(p.k[i]) * (int64_t(p.k[i]) - 1);
    if (pair_sum != lambda * (int64_t(d.v) - 1))
        throw Error("internal: pair-count identity violated");
    int64_t sq = 0;
    for (int i = 0; i < 4; ++i) {
        const int64_t n = 2 * int64_t(p.k[i]) - int64_t(d.v); // = +-n_i
        sq += n * n;
    }
    if (sq != 4ll * d.v)
        throw Error("internal: square identity violated");
    return p;
}

bool cardinality_reachable(const OrbitTable& table, uint32_t k) {
    // Bounded subset-sum over nontrivial orbit sizes, grouped by size.
    std::vector<std::pair<uint32_t, uint32_t>> groups; // (size, count)
    {
        std::vector<uint32_t> sizes;
        const auto& orbits = table.orbits();
        for (size_t i = 1; i < orbits.size(); ++i)
            sizes.push_back(static_cast<uint32_t>(orbits[i].members.size()));
        std::sort(sizes.begin(), sizes.end());
        for (size_t i = 0; i < sizes.size();) {
            size_t j = i;
            while (j < sizes.size() && sizes[j] == sizes[i]) ++j;
            groups.emplace_back(sizes[i], static_cast<uint32_t>(j - i));
            i = j;
        }
    }
    std::vector<bool> reach(k + 1, false);
    reach[0] = true;
    std::vector<int64_t> left(k + 1);
    for (auto [s, c] : groups) {
        for (uint32_t t = 0; t <= k; ++t) {
            if (reach[t]) {
                left[t] = c;
            } else if (t >= s && left[t - s] > 0) {
                reach[t] = true;
                left[t] = left[t - s] - 1;
            } else {
                left[t] = 0;
            }
        }
    }
    return reach[k];
}

OrbitFeasibility orbit_feasible(const ParameterSet& p, const OrbitTable& table) {
    if (table.modulus().value() != p.v)
        throw MismatchedGroup("orbit table is mod " +
                              std::to_string(table.modulus().value()) +
                              ", parameters need mod " + std::to_string(p.v));
    OrbitFeasibility f;
    for (int i = 0; i < 4; ++i)
        f.feasible[i] = cardinality_reachable(table, p.k[i]);
    return f;
}

std::string report_line(const ParameterSet& p) {
    std::ostringstream out;
    out << p.v << ';';
    for (int i = 0; i < 4; ++i) out << (i ? "," : "") << p.k[i];
    out << ';' << p.lambda << ';';
    for (int i = 0; i < 4; ++i) out << (p.signs[i] ? '+' : '-');
    out << ';';
    for (int i = 0; i < 4; ++i) out << (i ? "," : "") << p.source.n[i];
    return out.str();
}

} // namespace sdsforge
