#include "contact/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace contact {

namespace {

// Stable ordering for base entries: by string form of the canonical offset.
bool site_less(const Site& a, const Site& b) {
    if (a.is_word() != b.is_word()) return !a.is_word();
    if (a.is_word()) {
        if (a.word().size() != b.word().size()) return a.word().size() < b.word().size();
        return a.word() < b.word();
    }
    return a.coords() < b.coords();
}

} // namespace

InfectionKernel::InfectionKernel(GroupSpec group, std::vector<std::pair<Site, double>> base)
    : group_(std::move(group)), base_(std::move(base)) {
    std::sort(base_.begin(), base_.end(),
              [](const auto& x, const auto& y) { return site_less(x.first, y.first); });
    total_ = 0.0;
    for (const auto& [site, rate] : base_) {
        lookup_.emplace(site, rate);
        total_ += rate;
    }
}

InfectionKernel InfectionKernel::zero(const GroupSpec& group) {
    return InfectionKernel(group, {});
}

InfectionKernel InfectionKernel::nearest_neighbor(const GroupSpec& group, double rate) {
    if (rate < 0.0 || !std::isfinite(rate)) throw UsageError("nearest-neighbor rate must be finite and >= 0");
    std::vector<std::pair<Site, double>> base;
    if (group.kind() == GroupSpec::Kind::FreeGroup) {
        for (int g = 0; g < group.generators(); ++g) {
            base.emplace_back(Site(std::string(1, static_cast<char>('a' + g))), rate);
            base.emplace_back(Site(std::string(1, static_cast<char>('A' + g))), rate);
        }
        return from_pairs(group, std::move(base));
    }
    std::vector<Site> offsets;
    for (int d = 0; d < group.dim(); ++d) {
        for (int sign : {+1, -1}) {
            std::vector<std::int64_t> c(static_cast<std::size_t>(group.dim()), 0);
            c[d] = sign;
            Site s = group.multiply(group.identity(), Site(std::move(c))); // canonicalize
            if (s == group.identity()) continue; // side-1 torus: no neighbors
            if (std::find(offsets.begin(), offsets.end(), s) == offsets.end()) offsets.push_back(s);
        }
    }
    for (const Site& s : offsets) base.emplace_back(s, rate);
    return from_pairs(group, std::move(base));
}

InfectionKernel InfectionKernel::from_pairs(const GroupSpec& group,
                                            std::vector<std::pair<Site, double>> raw) {
    std::vector<std::pair<Site, double>> base;
    base.reserve(raw.size());
    for (auto& [site, rate] : raw) {
        Site canon = group.canonicalize(site);
        if (canon == group.identity())
            throw UsageError("kernel offset " + site.to_string() +
                             " is the origin: a(0,0) must be 0");
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw UsageError("kernel rate for " + site.to_string() + " must be finite and >= 0");
        for (const auto& [prev, prev_rate] : base)
            if (prev == canon)
                throw UsageError("duplicate kernel offset " + canon.to_string() +
                                 " after canonicalization");
        base.emplace_back(std::move(canon), rate);
    }
    return InfectionKernel(group, std::move(base));
}

double InfectionKernel::base_rate(const Site& offset) const {
    auto it = lookup_.find(offset);
    return it == lookup_.end() ? 0.0 : it->second;
}

double InfectionKernel::rate(const Site& i, const Site& j) const {
    group_.require_site(i, "rate");
    group_.require_site(j, "rate");
    return base_rate(group_.displacement(i, j));
}

InfectionKernel InfectionKernel::reversed() const {
    std::vector<std::pair<Site, double>> base;
    base.reserve(base_.size());
    for (const auto& [site, rate] : base_) base.emplace_back(group_.inverse(site), rate);
    return InfectionKernel(group_, std::move(base));
}

} // namespace contact
