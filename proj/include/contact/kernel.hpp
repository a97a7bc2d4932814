#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "contact/group.hpp"

namespace contact {

/// Translation-invariant infection rates with finite support, stored as the
/// base map i -> a(0,i). The full kernel is a(i,j) = a(0, i^{-1} j).
class InfectionKernel {
public:
    /// The kernel with empty support (no infections ever).
    static InfectionKernel zero(const GroupSpec& group);

    /// Rate `rate` to each distinct nearest neighbor of the origin: the
    /// canonicalized offsets +-e_d on lattices and tori (deduplicated, so on
    /// a side-2 torus +e_d and -e_d collapse to one entry), the generators
    /// and their inverses on free groups.
    static InfectionKernel nearest_neighbor(const GroupSpec& group, double rate);

    /// Explicit base map. Offsets are canonicalized; the origin, negative
    /// rates, and duplicate canonical offsets are rejected.
    static InfectionKernel from_pairs(const GroupSpec& group,
                                      std::vector<std::pair<Site, double>> base);

    const GroupSpec& group() const { return group_; }
    const std::vector<std::pair<Site, double>>& base() const { return base_; }
    /// |a| = sum of base rates.
    double total() const { return total_; }
    bool is_zero() const { return total_ == 0.0; }

    /// a(0,i); zero off the support.
    double base_rate(const Site& offset) const;
    /// a(i,j) = a(0, i^{-1} j). Both sites must belong to this kernel's group.
    double rate(const Site& i, const Site& j) const;

    /// Reversed rates a^dagger(i,j) = a(j,i); base offsets are inverted.
    InfectionKernel reversed() const;

    bool operator==(const InfectionKernel& other) const {
        return group_ == other.group_ && base_ == other.base_;
    }

private:
    InfectionKernel(GroupSpec group, std::vector<std::pair<Site, double>> base);

    GroupSpec group_;
    std::vector<std::pair<Site, double>> base_; // sorted canonical offsets
    std::unordered_map<Site, double, SiteHash> lookup_;
    double total_ = 0.0;
};

} // namespace contact
