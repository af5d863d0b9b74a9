#include "sdsforge/hadamard.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cassert>
#include <sstream>

#include "sdsforge/zmod.hpp"

namespace sdsforge {

SignMatrix::SignMatrix(uint32_t order) : m_(order) {
    if (order == 0) throw Error("matrix order must be positive");
    a_.assign(size_t(m_) * m_, int8_t{1});
}

void SignMatrix::set(uint32_t r, uint32_t c, int8_t v) {
    assert(v == 1 || v == -1);
    a_[size_t(r) * m_ + c] = v;
}

SignMatrix circulant_from_block(uint32_t v, std::span<const uint32_t> block) {
    SignMatrix m(v);
    std::vector<int8_t> first(v, int8_t{1});
    for (uint32_t r : block) {
        if (r >= v)
            throw ResidueOutOfRange("residue " + std::to_string(r) +
                                    " is not in [0, " + std::to_string(v) + ")");
        first[r] = -1;
    }
    for (uint32_t r = 0; r < v; ++r)
        for (uint32_t c = 0; c < v; ++c)
            m.set(r, c, first[(c + v - r) % v]); // right shift by r
    return m;
}

SignMatrix goethals_seidel(const SignMatrix& p1, const SignMatrix& p2,
                           const SignMatrix& p3, const SignMatrix& p4) {
    const uint32_t v = p1.order();
    if (p2.order() != v || p3.order() != v || p4.order() != v)
        throw DimensionMismatch("all four circulants must share one order");
    SignMatrix h(4 * v);

    // transform flags: (transpose after mirroring?) each cell is
    // sign * B       when plain
    // sign * (B R)   : entry (r,c) -> B[r][v-1-c]
    // sign * (B^T R) : entry (r,c) -> B[v-1-c][r]
    enum class Form { Plain, MirR, TransR };
    struct Cell {
        const SignMatrix* b;
        Form form;
        int8_t sign;
    };
    const Cell grid[4][4] = {
        {{&p1, Form::Plain, 1},
         {&p2, Form::MirR, 1},
         {&p3, Form::MirR, 1},
         {&p4, Form::MirR, 1}},
        {{&p2, Form::MirR, -1},
         {&p1, Form::Plain, 1},
         {&p4, Form::TransR, -1},
         {&p3, Form::TransR, 1}},
        {{&p3, Form::MirR, -1},
         {&p4, Form::TransR, 1},
         {&p1, Form::Plain, 1},
         {&p2, Form::TransR, -1}},
        {{&p4, Form::MirR, -1},
         {&p3, Form::TransR, -1},
         {&p2, Form::TransR, 1},
         {&p1, Form::Plain, 1}}};

    for (uint32_t br = 0; br < 4; ++br) {
        for (uint32_t bc = 0; bc < 4; ++bc) {
            const Cell& cell = grid[br][bc];
            for (uint32_t r = 0; r < v; ++r) {
                for (uint32_t c = 0; c < v; ++c) {
                    int8_t val;
                    switch (cell.form) {
                        case Form::Plain: val = cell.b->at(r, c); break;
                        case Form::MirR: val = cell.b->at(r, v - 1 - c); break;
                        default: val = cell.b->at(v - 1 - c, r); break;
                    }
                    h.set(br * v + r, bc * v + c, int8_t(cell.sign * val));
                }
            }
        }
    }
    return h;
}

namespace {

std::vector<uint64_t> pack_rows(const SignMatrix& h, size_t& words) {
    const uint32_t m = h.order();
    words = (m + 63) / 64;
    std::vector<uint64_t> bits(size_t(m) * words, 0);
    for (uint32_t r = 0; r < m; ++r) {
        uint64_t* row = &bits[size_t(r) * words];
        for (uint32_t c = 0; c < m; ++c)
            if (h.at(r, c) < 0) row[c >> 6] |= 1ull << (c & 63);
    }
    return bits;
}

} // namespace

bool verify_hadamard(const SignMatrix& h) {
    const uint32_t m = h.order();
    if (m == 1) return true;
    if (m % 2 != 0) return false; // off-diagonal dot m - 2p is odd, never 0
    size_t words = 0;
    const std::vector<uint64_t> bits = pack_rows(h, words);

    std::atomic<bool> ok{true};
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8)
#endif
    for (int64_t i = 0; i < int64_t(m); ++i) {
        if (!ok.load(std::memory_order_relaxed)) continue;
        const uint64_t* ri = &bits[size_t(i) * words];
        for (uint32_t j = uint32_t(i) + 1; j < m; ++j) {
            const uint64_t* rj = &bits[size_t(j) * words];
            uint64_t diff = 0;
            for (size_t w = 0; w < words; ++w)
                diff += uint64_t(std::popcount(ri[w] ^ rj[w]));
            if (2 * diff != m) { // dot = m - 2*diff must vanish
                ok.store(false, std::memory_order_relaxed);
                break;
            }
        }
    }
    return ok.load();
}

bool verify_hadamard_reference(const SignMatrix& h) {
    const uint32_t m = h.order();
    for (uint32_t i = 0; i < m; ++i) {
        for (uint32_t j = i; j < m; ++j) {
            int64_t dot = 0;
            for (uint32_t c = 0; c < m; ++c)
                dot += int64_t(h.at(i, c)) * h.at(j, c);
            if (dot != (i == j ? int64_t(m) : 0)) return false;
        }
    }
    return true;
}

bool verify_skew_hadamard(const SignMatrix& h) {
    const uint32_t m = h.order();
    for (uint32_t i = 0; i < m; ++i) {
        if (h.at(i, i) != 1) return false;
        for (uint32_t j = i + 1; j < m; ++j)
            if (h.at(i, j) + h.at(j, i) != 0) return false;
    }
    return verify_hadamard(h);
}

bool is_skew_set(uint32_t v, std::span<const uint32_t> block) {
    if (v % 2 == 0) return false;
    std::vector<bool> in(v, false);
    for (uint32_t r : block) {
        if (r >= v)
            throw ResidueOutOfRange("residue " + std::to_string(r) +
                                    " is not in [0, " + std::to_string(v) + ")");
        if (r == 0) return false;
        in[r] = true;
    }
    for (uint32_t i = 1; 2 * i <= v; ++i)
        if (in[i] == in[v - i]) return false;
    return true;
}

std::optional<uint32_t> skew_block_index(
    uint32_t v, std::span<const std::vector<uint32_t>> blocks) {
    for (size_t i = 0; i < blocks.size(); ++i)
        if (is_skew_set(v, blocks[i])) return uint32_t(i);
    return std::nullopt;
}

SdsReport verify_sds(const SdsCertificate& cert) {
    SdsReport rep;
    const Modulus mod(cert.v);
    const UnitSubgroup H = subgroup_closure(mod, cert.generators);
    const OrbitTable table = orbit_table(mod, H);

    // expand index sets; residues are canonicalized to their orbit labels
    uint64_t ksum = 0;
    rep.cardinality_ok = true;
    for (int i = 0; i < 4; ++i) {
        std::vector<bool> taken(cert.v, false);
        for (uint32_t r : cert.index_sets[i]) {
            if (r >= cert.v)
                throw ResidueOutOfRange("index " + std::to_string(r) +
                                        " is not a residue mod " +
                                        std::to_string(cert.v));
            const uint32_t label = table.label_of(r);
            if (label == 0)
                throw ResidueOutOfRange("index 0 expands to the trivial orbit");
            if (!taken[label]) {
                taken[label] = true;
                const auto& members = table.orbit_of(label).members;
                rep.blocks[i].insert(rep.blocks[i].end(), members.begin(),
                                     members.end());
            }
        }
        std::sort(rep.blocks[i].begin(), rep.blocks[i].end());
        rep.cardinalities[i] = uint32_t(rep.blocks[i].size());
        ksum += rep.cardinalities[i];
        if (rep.cardinalities[i] != cert.params.k[i]) rep.cardinality_ok = false;
    }
    rep.lambda_consistent =
        ksum == uint64_t(cert.params.lambda) + cert.v && cert.params.v == cert.v;

    // route 1: direct difference counting
    const uint32_t lambda = cert.params.lambda;
    std::vector<uint64_t> count(cert.v, 0);
    for (int i = 0; i < 4; ++i)
        for (uint32_t a : rep.blocks[i])
            for (uint32_t b : rep.blocks[i])
                if (a != b) ++count[mod.sub(a, b)];
    rep.difference_ok = true;
    for (uint32_t c = 1; c < cert.v; ++c) {
        if (count[c] != lambda) {
            rep.difference_ok = false;
            if (rep.violations.size() < 16) rep.violations.emplace_back(c, count[c]);
        }
    }

    // route 2: periodic autocorrelations of the +-1 first rows must sum to
    // 4v at shift 0 and vanish elsewhere
    rep.paf_ok = true;
    std::array<std::vector<int8_t>, 4> rows;
    for (int i = 0; i < 4; ++i) {
        rows[i].assign(cert.v, int8_t{1});
        for (uint32_t r : rep.blocks[i]) rows[i][r] = -1;
    }
    for (uint32_t s = 0; s < cert.v; ++s) {
        int64_t paf = 0;
        for (int i = 0; i < 4; ++i) {
            const auto& a = rows[i];
            int64_t acc = 0;
            for (uint32_t t = 0; t < cert.v; ++t) {
                uint32_t u = t + s;
                if (u >= cert.v) u -= cert.v;
                acc += int64_t(a[t]) * a[u];
            }
            paf += acc;
        }
        if (paf != (s == 0 ? 4ll * cert.v : 0ll)) {
            rep.paf_ok = false;
            break;
        }
    }

    rep.skew_block = skew_block_index(
        cert.v, std::span<const std::vector<uint32_t>>(rep.blocks.data(), 4));
    if (cert.skew.has_value())
        rep.skew_ok = *cert.skew == rep.skew_block.has_value();

    rep.pass = rep.cardinality_ok && rep.lambda_consistent && rep.difference_ok &&
               rep.paf_ok && rep.skew_ok;
    return rep;
}

std::string SdsReport::summary() const {
    std::ostringstream out;
    out << (pass ? "PASS" : "FAIL");
    out << " cardinality=" << (cardinality_ok ? "ok" : "bad");
    out << " lambda=" << (lambda_consistent ? "ok" : "bad");
    out << " differences=" << (difference_ok ? "ok" : "bad");
    out << " autocorrelation=" << (paf_ok ? "ok" : "bad");
    out << " skew=";
    if (skew_block)
        out << "block" << (*skew_block + 1);
    else
        out << "none";
    if (!skew_ok) out << "(mismatch)";
    for (const auto& [res, cnt] : violations)
        out << "\n  residue " << res << " covered " << cnt << " times";
    return out.str();
}

SignMatrix assemble_goethals_seidel(uint32_t v,
                                    std::span<const std::vector<uint32_t>> blocks) {
    if (blocks.size() != 4)
        throw DimensionMismatch("exactly four blocks are required");
    std::array<const std::vector<uint32_t>*, 4> order = {
        &blocks[0], &blocks[1], &blocks[2], &blocks[3]};
    if (const auto skew = skew_block_index(v, blocks); skew && *skew != 0) {
        // rotate so the skew block provides the diagonal circulant
        for (int i = 0; i < 4; ++i) order[i] = &blocks[(*skew + i) % 4];
    }
    const SignMatrix p1 = circulant_from_block(v, *order[0]);
    const SignMatrix p2 = circulant_from_block(v, *order[1]);
    const SignMatrix p3 = circulant_from_block(v, *order[2]);
    const SignMatrix p4 = circulant_from_block(v, *order[3]);
    return goethals_seidel(p1, p2, p3, p4);
}

SignMatrix assemble_goethals_seidel(const SdsCertificate& cert) {
    const SdsReport rep = verify_sds(cert);
    return assemble_goethals_seidel(
        cert.v, std::span<const std::vector<uint32_t>>(rep.blocks.data(), 4));
}

} // namespace sdsforge
