#include "sdsforge/zmod.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <sstream>

namespace sdsforge {

Modulus::Modulus(uint32_t v) : v_(v) {
    if (v == 0 || v > kMaxModulus)
        throw Error("modulus must lie in [1, 2^20], got " + std::to_string(v));
}

uint64_t euler_phi(uint32_t v) {
    uint64_t result = v;
    uint32_t m = v;
    for (uint32_t p = 2; static_cast<uint64_t>(p) * p <= m; ++p) {
        if (m % p != 0) continue;
        while (m % p == 0) m /= p;
        result -= result / p;
    }
    if (m > 1) result -= result / m;
    return result;
}

bool UnitSubgroup::contains(uint32_t r) const {
    return std::binary_search(elems_.begin(), elems_.end(), r % mod_.value());
}

bool UnitSubgroup::contains_negation() const {
    return contains(mod_.negate(1 % mod_.value()));
}

UnitSubgroup subgroup_closure(Modulus v, const std::vector<uint32_t>& generators) {
    const uint32_t m = v.value();
    std::vector<uint32_t> gens;
    gens.reserve(generators.size());
    for (uint32_t g : generators) {
        const uint32_t r = g % m;
        if (std::gcd(static_cast<uint64_t>(r), static_cast<uint64_t>(m)) != 1)
            throw NonUnitGenerator("generator " + std::to_string(g) +
                                   " is not a unit mod " + std::to_string(m));
        gens.push_back(r);
    }

    std::vector<bool> seen(m, false);
    std::vector<uint32_t> elems;
    std::vector<uint32_t> work;
    const uint32_t one = 1 % m;
    seen[one] = true;
    elems.push_back(one);
    work.push_back(one);
    while (!work.empty()) {
        const uint32_t x = work.back();
        work.pop_back();
        for (uint32_t g : gens) {
            const uint32_t y = v.mul(x, g);
            if (!seen[y]) {
                seen[y] = true;
                elems.push_back(y);
                work.push_back(y);
            }
        }
    }
    std::sort(elems.begin(), elems.end());

    if (euler_phi(m) % elems.size() != 0)
        throw Error("internal: closure order does not divide phi(v)");
    return UnitSubgroup(v, std::move(elems));
}

const Orbit& OrbitTable::orbit_of(uint32_t residue) const {
    if (residue >= mod_.value())
        throw Error("residue " + std::to_string(residue) + " out of range mod " +
                    std::to_string(mod_.value()));
    return orbits_[orbit_index_[residue]];
}

bool OrbitTable::is_label(uint32_t r) const {
    return r < mod_.value() && orbits_[orbit_index_[r]].label == r;
}

uint32_t OrbitTable::nontrivial_index(uint32_t residue) const {
    const uint32_t idx = orbit_index_[residue];
    if (idx == 0)
        throw Error("residue 0 has no nontrivial orbit index");
    return idx - 1;
}

OrbitTable orbit_table(Modulus v, const UnitSubgroup& H) {
    if (!(H.modulus() == v))
        throw MismatchedGroup("subgroup modulus " +
                              std::to_string(H.modulus().value()) +
                              " does not match " + std::to_string(v.value()));
    const uint32_t m = v.value();
    OrbitTable table(v, H);
    table.orbit_index_.assign(m, UINT32_MAX);
    for (uint32_t x = 0; x < m; ++x) {
        if (table.orbit_index_[x] != UINT32_MAX) continue;
        const uint32_t id = static_cast<uint32_t>(table.orbits_.size());
        Orbit orbit;
        orbit.label = x; // first unseen residue is the orbit minimum
        for (uint32_t g : H.elements()) {
            const uint32_t y = v.mul(g, x);
            if (table.orbit_index_[y] == UINT32_MAX) {
                table.orbit_index_[y] = id;
                orbit.members.push_back(y);
            }
        }
        std::sort(orbit.members.begin(), orbit.members.end());
        assert(orbit.members.front() == x);
        table.orbits_.push_back(std::move(orbit));
    }
    assert(!table.orbits_.empty() && table.orbits_[0].label == 0);
    return table;
}

uint32_t negate_orbit(const OrbitTable& table, uint32_t label) {
    if (!table.is_label(label))
        throw UnknownLabel(std::to_string(label) + " is not an orbit label mod " +
                           std::to_string(table.modulus().value()));
    if (label == 0) return 0;
    return table.label_of(table.modulus().negate(label));
}

uint32_t SymClassTable::class_index_of(uint32_t residue) const {
    if (residue == 0 || residue >= mod_.value())
        throw Error("symmetry classes cover nonzero residues only, got " +
                    std::to_string(residue));
    return class_index_[residue];
}

std::vector<uint32_t> SymClassTable::class_labels() const {
    std::vector<uint32_t> out;
    out.reserve(classes_.size());
    for (const Orbit& c : classes_) out.push_back(c.label);
    return out;
}

bool SymClassTable::same_group(const OrbitTable& table) const {
    return mod_ == table.modulus() &&
           subgroup_elems_ == table.subgroup().elements();
}

SymClassTable sym_class_table(Modulus v, const UnitSubgroup& H) {
    if (!(H.modulus() == v))
        throw MismatchedGroup("subgroup modulus " +
                              std::to_string(H.modulus().value()) +
                              " does not match " + std::to_string(v.value()));
    const uint32_t m = v.value();
    // H u -H is itself a group since -1 is central and squares to 1.
    std::vector<uint32_t> full = H.elements();
    for (uint32_t g : H.elements()) full.push_back(v.negate(g));
    std::sort(full.begin(), full.end());
    full.erase(std::unique(full.begin(), full.end()), full.end());

    SymClassTable table(v, H.elements());
    table.class_index_.assign(m, UINT32_MAX);
    for (uint32_t x = 1; x < m; ++x) {
        if (table.class_index_[x] != UINT32_MAX) continue;
        const uint32_t id = static_cast<uint32_t>(table.classes_.size());
        Orbit cls;
        cls.label = x;
        for (uint32_t g : full) {
            const uint32_t y = v.mul(g, x);
            if (table.class_index_[y] == UINT32_MAX) {
                table.class_index_[y] = id;
                cls.members.push_back(y);
            }
        }
        std::sort(cls.members.begin(), cls.members.end());
        assert(cls.members.front() == x);
        table.classes_.push_back(std::move(cls));
    }
    return table;
}

namespace {

std::string orbits_to_text(const std::vector<Orbit>& orbits) {
    std::ostringstream out;
    for (const Orbit& o : orbits) {
        out << o.label << ':';
        for (uint32_t mbr : o.members) out << ' ' << mbr;
        out << '\n';
    }
    return out.str();
}

} // namespace

std::string to_text(const OrbitTable& table) { return orbits_to_text(table.orbits()); }

std::string to_text(const SymClassTable& table) {
    return orbits_to_text(table.classes());
}

} // namespace sdsforge
