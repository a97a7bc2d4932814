#include "contact/group.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace contact {

namespace {

std::int64_t mod_floor(std::int64_t x, std::int64_t n) {
    std::int64_t m = x % n;
    return m < 0 ? m + n : m;
}

bool is_generator_char(char c, int k) {
    if (c >= 'a' && c < 'a' + k) return true;
    if (c >= 'A' && c < 'A' + k) return true;
    return false;
}

char flip_case(char c) {
    return std::isupper(static_cast<unsigned char>(c))
               ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
               : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

// Appends c to a word kept in reduced form, cancelling inverse pairs.
void push_reduced(std::string& w, char c) {
    if (!w.empty() && w.back() == flip_case(c)) {
        w.pop_back();
    } else {
        w.push_back(c);
    }
}

} // namespace

std::string Site::to_string() const {
    if (is_word()) return word().empty() ? "e" : word();
    std::ostringstream os;
    os << '(';
    const auto& c = coords();
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) os << ',';
        os << c[i];
    }
    os << ')';
    return os.str();
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
    std::size_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    if (s.is_word()) {
        mix(1);
        for (char c : s.word()) mix(static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    } else {
        mix(2);
        for (std::int64_t v : s.coords()) mix(static_cast<std::uint64_t>(v));
    }
    return h;
}

GroupSpec GroupSpec::integer_lattice(int dim) {
    if (dim < 1 || dim > 8) throw UsageError("lattice dimension must be in [1,8]");
    GroupSpec g;
    g.kind_ = Kind::IntegerLattice;
    g.dim_ = dim;
    return g;
}

GroupSpec GroupSpec::torus(int side, int dim) {
    if (dim < 1 || dim > 8) throw UsageError("torus dimension must be in [1,8]");
    if (side < 1) throw UsageError("torus side length must be >= 1");
    GroupSpec g;
    g.kind_ = Kind::Torus;
    g.dim_ = dim;
    g.side_ = side;
    return g;
}

GroupSpec GroupSpec::free_group(int generators) {
    if (generators < 1 || generators > 11) throw UsageError("free group supports 1..11 generators");
    GroupSpec g;
    g.kind_ = Kind::FreeGroup;
    g.generators_ = generators;
    return g;
}

GroupSpec GroupSpec::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (head == "z") return integer_lattice(tail.empty() ? 1 : std::stoi(tail));
        if (head == "free") return free_group(tail.empty() ? 2 : std::stoi(tail));
        if (head == "torus") {
            auto x = tail.find('x');
            if (x == std::string::npos) return torus(std::stoi(tail), 1);
            return torus(std::stoi(tail.substr(0, x)), std::stoi(tail.substr(x + 1)));
        }
    } catch (const std::logic_error&) {
        throw UsageError("malformed group spec: " + text);
    }
    throw UsageError("unknown group spec: " + text + " (expected z:D, torus:NxD, free:K)");
}

std::string GroupSpec::to_string() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::IntegerLattice: os << "z:" << dim_; break;
        case Kind::Torus: os << "torus:" << side_ << "x" << dim_; break;
        case Kind::FreeGroup: os << "free:" << generators_; break;
    }
    return os.str();
}

std::uint64_t GroupSpec::size() const {
    if (!finite()) throw UsageError("group is infinite");
    std::uint64_t n = 1;
    for (int i = 0; i < dim_; ++i) n *= static_cast<std::uint64_t>(side_);
    return n;
}

Site GroupSpec::identity() const {
    if (kind_ == Kind::FreeGroup) return Site(std::string());
    return Site(std::vector<std::int64_t>(static_cast<std::size_t>(dim_), 0));
}

Site GroupSpec::multiply(const Site& a, const Site& b) const {
    if (kind_ == Kind::FreeGroup) {
        std::string w = a.word();
        for (char c : b.word()) push_reduced(w, c);
        return Site(std::move(w));
    }
    std::vector<std::int64_t> c(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) {
        c[i] = a.coords()[i] + b.coords()[i];
        if (kind_ == Kind::Torus) c[i] = mod_floor(c[i], side_);
    }
    return Site(std::move(c));
}

Site GroupSpec::inverse(const Site& a) const {
    if (kind_ == Kind::FreeGroup) {
        std::string w;
        w.reserve(a.word().size());
        for (auto it = a.word().rbegin(); it != a.word().rend(); ++it) w.push_back(flip_case(*it));
        return Site(std::move(w));
    }
    std::vector<std::int64_t> c(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) {
        c[i] = -a.coords()[i];
        if (kind_ == Kind::Torus) c[i] = mod_floor(c[i], side_);
    }
    return Site(std::move(c));
}

Site GroupSpec::displacement(const Site& i, const Site& j) const {
    return multiply(inverse(i), j);
}

bool GroupSpec::contains(const Site& s) const {
    if (kind_ == Kind::FreeGroup) {
        if (!s.is_word()) return false;
        const std::string& w = s.word();
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!is_generator_char(w[i], generators_)) return false;
            if (i + 1 < w.size() && w[i + 1] == flip_case(w[i])) return false; // not reduced
        }
        return true;
    }
    if (s.is_word()) return false;
    if (s.coords().size() != static_cast<std::size_t>(dim_)) return false;
    if (kind_ == Kind::Torus) {
        for (std::int64_t v : s.coords())
            if (v < 0 || v >= side_) return false;
    }
    return true;
}

void GroupSpec::require_site(const Site& s, const char* what) const {
    if (!contains(s))
        throw UsageError(std::string(what) + ": " + s.to_string() + " is not a site of " + to_string());
}

Site GroupSpec::canonicalize(const Site& s) const {
    if (kind_ == Kind::FreeGroup) {
        if (!s.is_word()) throw UsageError("expected a word for " + to_string());
        std::string w;
        for (char c : s.word()) {
            if (!is_generator_char(c, generators_))
                throw UsageError("invalid generator '" + std::string(1, c) + "' for " + to_string());
            push_reduced(w, c);
        }
        return Site(std::move(w));
    }
    if (s.is_word() || s.coords().size() != static_cast<std::size_t>(dim_))
        throw UsageError(s.to_string() + " does not fit " + to_string());
    return multiply(identity(), s);
}

SiteIndex::SiteIndex(const GroupSpec& group) : group_(group) {
    if (!group.finite()) throw UsageError("site enumeration requires a finite group");
    std::uint64_t n = group.size();
    if (n > kMaxSites)
        throw CapacityError("group has " + std::to_string(n) + " sites, capacity is " +
                            std::to_string(kMaxSites));
    // Odometer order; the zero tuple comes first, so the origin has index 0.
    sites_.reserve(n);
    std::vector<std::int64_t> c(static_cast<std::size_t>(group.dim()), 0);
    for (std::uint64_t idx = 0; idx < n; ++idx) {
        sites_.push_back(Site(c));
        for (int d = group.dim() - 1; d >= 0; --d) {
            if (++c[d] < group.side()) break;
            c[d] = 0;
        }
    }
}

std::uint32_t SiteIndex::index_of(const Site& s) const {
    group_.require_site(s, "index_of");
    std::uint64_t idx = 0;
    for (int d = 0; d < group_.dim(); ++d)
        idx = idx * static_cast<std::uint64_t>(group_.side()) +
              static_cast<std::uint64_t>(s.coords()[d]);
    return static_cast<std::uint32_t>(idx);
}

std::vector<std::uint32_t> SiteIndex::left_translation(const Site& k) const {
    std::vector<std::uint32_t> perm(count());
    for (std::uint32_t i = 0; i < count(); ++i) perm[i] = index_of(group_.multiply(k, sites_[i]));
    return perm;
}

std::vector<std::vector<std::uint32_t>> SiteIndex::translation_permutations() const {
    std::vector<std::vector<std::uint32_t>> perms;
    perms.reserve(count());
    for (const Site& k : sites_) perms.push_back(left_translation(k));
    return perms;
}

} // namespace contact
