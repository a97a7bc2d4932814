#include "contact/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

#include "contact/bounds.hpp"
#include "contact/errors.hpp"
#include "contact/rng.hpp"
#include "contact/stats.hpp"

namespace contact {
namespace mc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Infected sites with O(1) membership test, insert, swap-remove, and
/// uniform sampling by index.
class ActiveSet {
public:
    bool contains(const Site& s) const { return index_.count(s) != 0; }
    std::size_t size() const { return items_.size(); }
    const Site& at(std::size_t i) const { return items_[i]; }
    const std::vector<Site>& items() const { return items_; }

    bool insert(const Site& s) {
        if (contains(s)) return false;
        index_.emplace(s, static_cast<std::uint32_t>(items_.size()));
        items_.push_back(s);
        return true;
    }

    void remove_at(std::size_t i) {
        index_.erase(items_[i]);
        if (i + 1 != items_.size()) {
            items_[i] = std::move(items_.back());
            index_[items_[i]] = static_cast<std::uint32_t>(i);
        }
        items_.pop_back();
    }

private:
    std::vector<Site> items_;
    std::unordered_map<Site, std::uint32_t, SiteHash> index_;
};

struct KernelSampler {
    std::vector<Site> offsets;
    std::vector<double> cumulative; // of positive rates
    double total = 0.0;

    explicit KernelSampler(const InfectionKernel& kernel) {
        double acc = 0.0;
        for (const auto& [site, rate] : kernel.base()) {
            if (rate <= 0.0) continue;
            acc += rate;
            offsets.push_back(site);
            cumulative.push_back(acc);
        }
        total = kernel.total();
    }

    const Site& sample(Rng& rng) const {
        const double u = rng.next_double() * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        const std::size_t i = std::min<std::size_t>(it - cumulative.begin(), offsets.size() - 1);
        return offsets[i];
    }
};

/// Runs fn(i) for every replica index, split over config.threads in blocks.
/// fn must only write to per-index slots.
template <typename Fn>
void for_each_replica(std::uint32_t replicas, int threads, Fn&& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned k = threads <= 0 ? hw : static_cast<unsigned>(threads);
    if (k <= 1 || replicas < 2) {
        for (std::uint32_t i = 0; i < replicas; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::uint32_t block = (replicas + k - 1) / k;
    for (unsigned w = 0; w < k; ++w) {
        const std::uint32_t lo = w * block;
        const std::uint32_t hi = std::min(replicas, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::uint32_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t step) {
    return Rng::mix(seed) ^ Rng::mix(purpose * 0x9e3779b97f4a7c15ull + step + 1);
}

} // namespace

SimConfig::SimConfig(GroupSpec g, InfectionKernel k, double d, double t, std::uint32_t n,
                     std::uint64_t s)
    : group(std::move(g)), kernel(std::move(k)), delta(d), initial{group.identity()},
      horizon(t), replicas(n), seed(s) {}

void SimConfig::validate() const {
    if (!(kernel.group() == group)) throw UsageError("kernel group does not match sim group");
    if (delta < 0.0 || !std::isfinite(delta)) throw UsageError("delta must be finite and >= 0");
    if (!(horizon > 0.0)) throw UsageError("horizon must be > 0");
    if (replicas < 1) throw UsageError("replica count must be >= 1");
    if (size_cap < 1) throw UsageError("size cap must be >= 1");
    for (const Site& s : initial) group.require_site(s, "initial site");
    for (std::size_t i = 0; i < record_grid.size(); ++i) {
        if (record_grid[i] < 0.0 || record_grid[i] > horizon)
            throw UsageError("record grid must lie within [0, horizon]");
        if (i > 0 && record_grid[i] < record_grid[i - 1])
            throw UsageError("record grid must be sorted");
    }
}

SimConfig SimConfig::with_delta(double new_delta) const {
    SimConfig c = *this;
    c.delta = new_delta;
    return c;
}

TrajectoryRecord simulate(const SimConfig& config, std::uint32_t replica_index) {
    config.validate();
    Rng rng = Rng::stream(config.seed, replica_index);
    const KernelSampler sampler(config.kernel);
    const double infection_total = sampler.total;
    const double per_site_rate = infection_total + config.delta;

    TrajectoryRecord rec;
    rec.replica = replica_index;
    rec.extinction_time = kNaN;
    rec.sizes.assign(config.record_grid.size(), 0);

    ActiveSet active;
    for (const Site& s : config.initial) active.insert(s);

    double t = 0.0;
    std::size_t gp = 0;
    const auto record_before = [&](double up_to) {
        while (gp < config.record_grid.size() && config.record_grid[gp] < up_to)
            rec.sizes[gp++] = active.size();
    };
    const auto record_rest = [&](std::uint64_t value) {
        while (gp < config.record_grid.size()) rec.sizes[gp++] = value;
    };

    while (true) {
        const std::size_t sz = active.size();
        if (sz == 0) {
            rec.outcome = Outcome::Extinct;
            rec.extinction_time = t;
            rec.end_time = t;
            record_rest(0);
            break;
        }
        if (sz >= config.size_cap) {
            rec.outcome = Outcome::Capped;
            rec.end_time = t;
            record_rest(sz);
            break;
        }
        const double total_rate = per_site_rate * static_cast<double>(sz);
        if (total_rate == 0.0) {
            rec.outcome = Outcome::Alive;
            rec.end_time = config.horizon;
            record_rest(sz);
            break;
        }
        const double t_next = t + rng.next_exponential(total_rate);
        if (t_next > config.horizon) {
            rec.outcome = Outcome::Alive;
            rec.end_time = config.horizon;
            record_rest(sz);
            break;
        }
        record_before(t_next);
        t = t_next;
        ++rec.events;

        if (rng.next_double() * per_site_rate < config.delta) {
            active.remove_at(static_cast<std::size_t>(rng.next_below(sz)));
        } else {
            const Site& source = active.at(static_cast<std::size_t>(rng.next_below(sz)));
            const Site target = config.group.multiply(source, sampler.sample(rng));
            active.insert(target); // no-op when already infected (thinning)
        }
    }
    rec.final_size = active.size();
    rec.final_sites = active.items();
    return rec;
}

SurvivalStats estimate_survival(const SimConfig& config) {
    config.validate();
    if (config.replicas < 100) throw UsageError("estimate_survival requires >= 100 replicas");
    std::vector<TrajectoryRecord> records(config.replicas);
    for_each_replica(config.replicas, config.threads,
                     [&](std::uint32_t i) { records[i] = simulate(config, i); });

    SurvivalStats st;
    st.horizon = config.horizon;
    st.replicas = config.replicas;
    st.extinction_times.reserve(config.replicas);
    for (const TrajectoryRecord& r : records) {
        switch (r.outcome) {
            case Outcome::Alive: ++st.survived; break;
            case Outcome::Extinct: ++st.extinct; break;
            case Outcome::Capped: ++st.capped; break;
        }
        st.extinction_times.push_back(r.extinction_time);
    }
    const std::uint64_t hits = st.survived + st.capped;
    st.theta_hat = static_cast<double>(hits) / static_cast<double>(config.replicas);
    const auto ci = wilson_interval(hits, config.replicas);
    st.ci_lo = ci.lo;
    st.ci_hi = ci.hi;
    st.se = binomial_se(hits, config.replicas);
    return st;
}

GrowthFit estimate_growth_rate(const SimConfig& config, double window_lo, double window_hi) {
    config.validate();
    if (config.replicas < 100) throw UsageError("estimate_growth_rate requires >= 100 replicas");
    if (config.record_grid.empty())
        throw UsageError("estimate_growth_rate requires a record grid");
    if (window_lo < 0.0) window_lo = config.horizon / 3.0;
    if (window_hi < 0.0) window_hi = config.horizon;

    std::vector<TrajectoryRecord> records(config.replicas);
    for_each_replica(config.replicas, config.threads,
                     [&](std::uint32_t i) { records[i] = simulate(config, i); });

    const std::size_t g = config.record_grid.size();
    GrowthFit fit;
    fit.grid = config.record_grid;
    fit.window_lo = window_lo;
    fit.window_hi = window_hi;
    fit.mean_size.assign(g, 0.0);
    fit.log_mean.assign(g, kNaN);

    // Integer size sums are exact, so means never depend on summation order.
    std::vector<std::uint64_t> sums(g, 0);
    for (const TrajectoryRecord& r : records) {
        if (r.outcome == Outcome::Capped) ++fit.capped_replicas;
        for (std::size_t k = 0; k < g; ++k) sums[k] += r.sizes[k];
    }
    for (std::size_t k = 0; k < g; ++k) {
        fit.mean_size[k] = static_cast<double>(sums[k]) / static_cast<double>(config.replicas);
        if (fit.mean_size[k] > 0.0) fit.log_mean[k] = std::log(fit.mean_size[k]);
    }

    const double tol = 1e-12;
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < g; ++k) {
        if (fit.grid[k] < window_lo - tol || fit.grid[k] > window_hi + tol) continue;
        if (!(fit.mean_size[k] > 0.0)) continue;
        xs.push_back(fit.grid[k]);
        ys.push_back(fit.log_mean[k]);
    }
    if (xs.size() < 2)
        throw NumericalError("growth fit starved: fewer than 2 grid points with positive mean "
                             "inside the fit window (all replicas extinct too early?)");
    fit.r_hat = fit_line(xs, ys).slope;
    fit.points_used = xs.size();

    // Batch the replicas into 10 contiguous blocks for the standard error.
    const std::uint32_t batches = 10;
    const std::uint32_t block = (config.replicas + batches - 1) / batches;
    for (std::uint32_t bidx = 0; bidx < batches; ++bidx) {
        const std::uint32_t lo = bidx * block;
        const std::uint32_t hi = std::min(config.replicas, lo + block);
        if (lo >= hi) break;
        std::vector<std::uint64_t> bsums(g, 0);
        for (std::uint32_t i = lo; i < hi; ++i)
            for (std::size_t k = 0; k < g; ++k) bsums[k] += records[i].sizes[k];
        std::vector<double> bx, by;
        for (std::size_t k = 0; k < g; ++k) {
            if (fit.grid[k] < window_lo - tol || fit.grid[k] > window_hi + tol) continue;
            if (bsums[k] == 0) continue;
            bx.push_back(fit.grid[k]);
            by.push_back(std::log(static_cast<double>(bsums[k]) / static_cast<double>(hi - lo)));
        }
        if (bx.size() >= 2) fit.batch_slopes.push_back(fit_line(bx, by).slope);
    }
    if (fit.batch_slopes.size() >= 2) {
        double mean = 0.0;
        for (double s : fit.batch_slopes) mean += s;
        mean /= static_cast<double>(fit.batch_slopes.size());
        double var = 0.0;
        for (double s : fit.batch_slopes) var += (s - mean) * (s - mean);
        var /= static_cast<double>(fit.batch_slopes.size() - 1);
        fit.se = std::sqrt(var / static_cast<double>(fit.batch_slopes.size()));
    } else {
        fit.se = kNaN;
    }
    return fit;
}

CriticalEstimate bisect_critical(const SimConfig& config, double delta_lo, double delta_hi,
                                 int iterations, double p_star) {
    config.validate();
    if (!(delta_lo >= 0.0) || !(delta_hi > delta_lo))
        throw UsageError("bisect_critical requires 0 <= delta_lo < delta_hi");
    if (iterations < 1) throw UsageError("bisect_critical requires >= 1 iteration");
    if (!(p_star > 0.0) || !(p_star < 1.0)) throw UsageError("p_star must lie in (0,1)");

    CriticalEstimate est;
    est.horizon = config.horizon;
    est.replicas = config.replicas;
    est.p_star = p_star;

    std::uint64_t step = 0;
    const auto decide = [&](double delta) {
        SimConfig c = config.with_delta(delta);
        c.seed = derived_seed(config.seed, 0xb15ec7, step++);
        const SurvivalStats st = estimate_survival(c);
        DecisionPoint p{delta, st.theta_hat, st.theta_hat > p_star};
        est.path.push_back(p);
        return p.survives;
    };

    if (!decide(delta_lo))
        throw UsageError("bisect_critical: no survival at delta_lo; widen the bracket");
    if (decide(delta_hi))
        throw UsageError("bisect_critical: survival at delta_hi; widen the bracket");

    double lo = delta_lo, hi = delta_hi;
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (decide(mid))
            lo = mid;
        else
            hi = mid;
    }
    est.lo = lo;
    est.hi = hi;
    est.delta_c_hat = 0.5 * (lo + hi);
    return est;
}

PathwiseDualityResult pathwise_duality_check(const GroupSpec& torus,
                                             const InfectionKernel& kernel, double delta,
                                             exact::StateMask a, exact::StateMask b, double t,
                                             std::uint64_t seed) {
    if (!(kernel.group() == torus)) throw UsageError("kernel group does not match torus");
    if (!(t > 0.0)) throw UsageError("pathwise duality needs t > 0");
    SiteIndex sites(torus);
    const std::uint32_t n = sites.count();
    const std::size_t states = std::size_t{1} << n;
    if (a == 0 || b == 0 || a >= states || b >= states)
        throw UsageError("pathwise duality: bad state masks");

    struct Event {
        double time;
        bool is_mark;
        std::uint32_t src, dst;
    };
    std::vector<Event> events;
    Rng rng = Rng::stream(seed, 0);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (const auto& [offset, rate] : kernel.base()) {
            if (rate <= 0.0) continue;
            const std::uint32_t j = sites.index_of(torus.multiply(sites.site(i), offset));
            const std::uint64_t count = rng.next_poisson(rate * t);
            for (std::uint64_t k = 0; k < count; ++k)
                events.push_back({rng.next_double() * t, false, i, j});
        }
        const std::uint64_t marks = delta > 0.0 ? rng.next_poisson(delta * t) : 0;
        for (std::uint64_t k = 0; k < marks; ++k)
            events.push_back({rng.next_double() * t, true, i, i});
    }
    std::sort(events.begin(), events.end(), [](const Event& x, const Event& y) {
        if (x.time != y.time) return x.time < y.time;
        if (x.is_mark != y.is_mark) return x.is_mark;
        if (x.src != y.src) return x.src < y.src;
        return x.dst < y.dst;
    });

    exact::StateMask forward = a;
    for (const Event& ev : events) {
        if (ev.is_mark)
            forward &= ~(exact::StateMask{1} << ev.src);
        else if (forward & (exact::StateMask{1} << ev.src))
            forward |= exact::StateMask{1} << ev.dst;
    }
    exact::StateMask backward = b;
    for (auto it = events.rbegin(); it != events.rend(); ++it) {
        if (it->is_mark)
            backward &= ~(exact::StateMask{1} << it->src);
        else if (backward & (exact::StateMask{1} << it->dst))
            backward |= exact::StateMask{1} << it->src;
    }

    PathwiseDualityResult res;
    res.forward_hit = (forward & b) != 0;
    res.backward_hit = (backward & a) != 0;
    res.events = events.size();
    return res;
}

std::vector<BoundRow> verify_lower_bound(const SimConfig& config, double delta_c_hat,
                                         const std::vector<double>& gammas) {
    if (!(delta_c_hat > 0.0)) throw UsageError("verify_lower_bound needs delta_c_hat > 0");
    std::vector<BoundRow> rows;
    std::uint64_t step = 0;
    for (double gamma : gammas) {
        if (!(gamma > 0.0) || !(gamma < 1.0))
            throw UsageError("verify_lower_bound: gamma must lie in (0,1)");
        SimConfig c = config.with_delta((1.0 - gamma) * delta_c_hat);
        c.seed = derived_seed(config.seed, 0xb0c4d, step++);
        const SurvivalStats st = estimate_survival(c);
        BoundRow row;
        row.gamma = gamma;
        row.delta = c.delta;
        row.phi_gamma = bounds::phi_of_gamma(gamma);
        row.theta_hat = st.theta_hat;
        row.ci_lo = st.ci_lo;
        row.ci_hi = st.ci_hi;
        row.se = st.se;
        row.pass = st.theta_hat + 2.0 * st.se >= row.phi_gamma;
        rows.push_back(row);
    }
    return rows;
}

} // namespace mc
} // namespace contact
