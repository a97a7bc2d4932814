#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "contact/errors.hpp"

namespace contact {

/// A group element: integer coordinates for lattices and tori, a reduced
/// word over generators for free groups. Words use 'a'..'k' for generators
/// and 'A'..'K' for their inverses.
struct Site {
    std::variant<std::vector<std::int64_t>, std::string> rep;

    Site() = default;
    explicit Site(std::vector<std::int64_t> coords) : rep(std::move(coords)) {}
    Site(std::initializer_list<std::int64_t> coords) : rep(std::vector<std::int64_t>(coords)) {}
    explicit Site(std::string word) : rep(std::move(word)) {}

    bool is_word() const { return rep.index() == 1; }
    const std::vector<std::int64_t>& coords() const { return std::get<0>(rep); }
    const std::string& word() const { return std::get<1>(rep); }

    bool operator==(const Site&) const = default;
    std::string to_string() const;
};

struct SiteHash {
    std::size_t operator()(const Site& s) const noexcept;
};

/// The site group Lambda. Three variants: the integer lattice Z^d, the
/// discrete torus (Z/n)^d, and the free group on k generators (whose Cayley
/// graph is the 2k-regular tree).
class GroupSpec {
public:
    enum class Kind { IntegerLattice, Torus, FreeGroup };

    static GroupSpec integer_lattice(int dim);
    static GroupSpec torus(int side, int dim);
    static GroupSpec free_group(int generators);

    /// Parses "z:D", "torus:NxD", "free:K".
    static GroupSpec parse(const std::string& text);
    std::string to_string() const;

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    int side() const { return side_; }
    int generators() const { return generators_; }

    bool finite() const { return kind_ == Kind::Torus; }
    /// Number of sites; valid for finite groups only.
    std::uint64_t size() const;

    Site identity() const;
    /// Group law, with canonicalization (mod-n wrap, word reduction).
    Site multiply(const Site& a, const Site& b) const;
    Site inverse(const Site& a) const;
    /// i^{-1} j, the displacement carrying i to j.
    Site displacement(const Site& i, const Site& j) const;

    /// True iff s is a canonical site of this group.
    bool contains(const Site& s) const;
    /// Throws UsageError unless contains(s).
    void require_site(const Site& s, const char* what) const;

    /// Accepts any well-formed representation (out-of-range torus coords,
    /// unreduced words) and returns the canonical site; throws UsageError on
    /// the wrong variant, dimension, or alphabet.
    Site canonicalize(const Site& s) const;

    bool operator==(const GroupSpec&) const = default;

private:
    Kind kind_ = Kind::IntegerLattice;
    int dim_ = 1;        // lattice/torus
    int side_ = 0;       // torus
    int generators_ = 0; // free group
};

/// Deterministic enumeration of a finite group: origin at index 0, then
/// odometer order on coordinates. Capacity-capped so bitmask state spaces
/// stay within 2^20.
class SiteIndex {
public:
    static constexpr std::uint64_t kMaxSites = 20;

    explicit SiteIndex(const GroupSpec& group);

    const GroupSpec& group() const { return group_; }
    std::uint32_t count() const { return static_cast<std::uint32_t>(sites_.size()); }
    const std::vector<Site>& sites() const { return sites_; }
    const Site& site(std::uint32_t idx) const { return sites_[idx]; }
    std::uint32_t index_of(const Site& s) const;

    /// Permutation induced by left multiplication: perm[i] = index of k*site_i.
    std::vector<std::uint32_t> left_translation(const Site& k) const;
    /// One permutation table per group element, in enumeration order.
    std::vector<std::vector<std::uint32_t>> translation_permutations() const;

private:
    GroupSpec group_;
    std::vector<Site> sites_;
};

} // namespace contact
