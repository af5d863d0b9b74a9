#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdsforge/errors.hpp"

namespace sdsforge {

// Hard cap on the cyclic group order. Keeps every residue in 32 bits and all
// products in 64 bits, and bounds the dense lookup tables we build per group.
inline constexpr uint32_t kMaxModulus = 1u << 20;

// Odd or even modulus v of the ambient cyclic group Z_v. Mostly a typed
// wrapper so residue arithmetic never mixes moduli by accident.
class Modulus {
public:
    explicit Modulus(uint32_t v);

    uint32_t value() const { return v_; }
    uint32_t reduce(uint64_t x) const { return static_cast<uint32_t>(x % v_); }
    uint32_t mul(uint32_t a, uint32_t b) const {
        return reduce(static_cast<uint64_t>(a) * b);
    }
    uint32_t sub(uint32_t a, uint32_t b) const {
        return a >= b ? a - b : a + v_ - b;
    }
    uint32_t negate(uint32_t a) const { return a == 0 ? 0 : v_ - a; }

    friend bool operator==(const Modulus&, const Modulus&) = default;

private:
    uint32_t v_;
};

uint64_t euler_phi(uint32_t v);

// Multiplicative subgroup H <= Z_v^*, stored as the sorted element list.
class UnitSubgroup {
public:
    const Modulus& modulus() const { return mod_; }
    const std::vector<uint32_t>& elements() const { return elems_; }
    uint32_t order() const { return static_cast<uint32_t>(elems_.size()); }
    bool contains(uint32_t r) const;
    // true iff v-1 (i.e. -1) lies in H; decides whether skew splits can exist
    bool contains_negation() const;

    friend bool operator==(const UnitSubgroup&, const UnitSubgroup&) = default;

private:
    UnitSubgroup(Modulus mod, std::vector<uint32_t> elems)
        : mod_(mod), elems_(std::move(elems)) {}
    friend UnitSubgroup subgroup_closure(Modulus v,
                                         const std::vector<uint32_t>& generators);

    Modulus mod_;
    std::vector<uint32_t> elems_;
};

// Closure of {1} u generators under multiplication mod v. Rejects generators
// that share a factor with v (they are not units).
UnitSubgroup subgroup_closure(Modulus v, const std::vector<uint32_t>& generators);

// One orbit H*x. label is the smallest member; members are sorted ascending.
struct Orbit {
    uint32_t label = 0;
    std::vector<uint32_t> members;
};

// All orbits of H acting on Z_v by multiplication. orbits()[0] is always the
// trivial orbit {0}; the rest are sorted ascending by label.
class OrbitTable {
public:
    const Modulus& modulus() const { return mod_; }
    const UnitSubgroup& subgroup() const { return subgroup_; }
    const std::vector<Orbit>& orbits() const { return orbits_; }
    // orbit count excluding {0}
    uint32_t nontrivial_count() const {
        return static_cast<uint32_t>(orbits_.size()) - 1;
    }

    const Orbit& orbit_of(uint32_t residue) const;
    uint32_t label_of(uint32_t residue) const { return orbit_of(residue).label; }
    bool is_label(uint32_t r) const;
    // dense index of a nontrivial orbit in 0..nontrivial_count()-1
    uint32_t nontrivial_index(uint32_t residue) const;

private:
    OrbitTable(Modulus mod, UnitSubgroup subgroup)
        : mod_(mod), subgroup_(std::move(subgroup)) {}
    friend OrbitTable orbit_table(Modulus v, const UnitSubgroup& H);

    Modulus mod_;
    UnitSubgroup subgroup_;
    std::vector<Orbit> orbits_;
    std::vector<uint32_t> orbit_index_; // residue -> index into orbits_
};

OrbitTable orbit_table(Modulus v, const UnitSubgroup& H);

// Label of the orbit containing -label. Requires label to be a canonical
// orbit label of the table (UnknownLabel otherwise). Involution; fixes 0.
uint32_t negate_orbit(const OrbitTable& table, uint32_t label);

// Orbits of <H, -1> on the nonzero residues: the symmetry classes on which
// difference multiplicities are constant. classes() sorted ascending by label.
class SymClassTable {
public:
    const Modulus& modulus() const { return mod_; }
    const std::vector<Orbit>& classes() const { return classes_; }
    uint32_t class_count() const { return static_cast<uint32_t>(classes_.size()); }
    // residue must be nonzero
    uint32_t class_index_of(uint32_t residue) const;
    std::vector<uint32_t> class_labels() const;
    // true iff built from the same (v, H) as the orbit table
    bool same_group(const OrbitTable& table) const;

private:
    SymClassTable(Modulus mod, std::vector<uint32_t> subgroup_elems)
        : mod_(mod), subgroup_elems_(std::move(subgroup_elems)) {}
    friend SymClassTable sym_class_table(Modulus v, const UnitSubgroup& H);

    Modulus mod_;
    std::vector<uint32_t> subgroup_elems_;
    std::vector<Orbit> classes_;
    std::vector<uint32_t> class_index_; // residue -> class index, ~0u for 0
};

SymClassTable sym_class_table(Modulus v, const UnitSubgroup& H);

// Text form, one line per orbit/class: "label: m1 m2 ...".
std::string to_text(const OrbitTable& table);
std::string to_text(const SymClassTable& table);

} // namespace sdsforge
