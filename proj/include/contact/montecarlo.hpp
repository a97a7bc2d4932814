#pragma once

#include <cstdint>
#include <vector>

#include "contact/exact.hpp"
#include "contact/group.hpp"
#include "contact/kernel.hpp"

namespace contact {
namespace mc {

/// One simulation workload: process parameters plus replication, seeding,
/// and recording choices. Replica i always draws from the stream derived
/// from (seed, i), so results are independent of the thread count.
struct SimConfig {
    SimConfig(GroupSpec group, InfectionKernel kernel, double delta, double horizon,
              std::uint32_t replicas, std::uint64_t seed);

    GroupSpec group;
    InfectionKernel kernel;
    double delta;
    std::vector<Site> initial; // defaults to {origin}
    double horizon;
    std::uint32_t replicas;
    std::uint64_t seed;
    std::uint64_t size_cap = 10000;
    std::vector<double> record_grid; // sorted, within [0, horizon]
    int threads = 1;

    void validate() const;
    SimConfig with_delta(double new_delta) const;
};

enum class Outcome : std::uint8_t { Alive, Extinct, Capped };

struct TrajectoryRecord {
    std::uint32_t replica = 0;
    Outcome outcome = Outcome::Alive;
    double extinction_time = 0.0; // NaN unless extinct
    double end_time = 0.0;
    std::uint64_t final_size = 0;
    std::uint64_t events = 0;
    std::vector<std::uint64_t> sizes; // |eta| at each record-grid time
    std::vector<Site> final_sites;    // the configuration when the run stopped
};

/// Event-driven (Gillespie) simulation of one replica: exponential waiting
/// times at total rate (|a|+delta)|eta|, recovery of a uniform infected site
/// with probability delta/(|a|+delta), otherwise an attempted infection from
/// a uniform source along a kernel-distributed displacement, thinned when
/// the target is already infected.
TrajectoryRecord simulate(const SimConfig& config, std::uint32_t replica_index);

struct SurvivalStats {
    std::uint64_t survived = 0; // alive at the horizon
    std::uint64_t extinct = 0;
    std::uint64_t capped = 0; // hit the size cap; counted as survival
    double theta_hat = 0.0;
    double ci_lo = 0.0, ci_hi = 1.0; // Wilson 95%
    double se = 0.0;                 // binomial standard error
    double horizon = 0.0;
    std::uint32_t replicas = 0;
    std::vector<double> extinction_times; // per replica, NaN for survivors
};
SurvivalStats estimate_survival(const SimConfig& config);

struct GrowthFit {
    std::vector<double> grid;
    std::vector<double> mean_size;
    std::vector<double> log_mean; // NaN where the mean vanishes
    double r_hat = 0.0;
    double se = 0.0;
    double window_lo = 0.0, window_hi = 0.0;
    std::size_t points_used = 0;
    std::vector<double> batch_slopes;
    std::uint64_t capped_replicas = 0;
};

/// Least-squares slope of log E|eta_t| over the fit window (default
/// [T/3, T]); extinct replicas contribute zero to the means. Standard error
/// from 10 contiguous replica batches.
GrowthFit estimate_growth_rate(const SimConfig& config, double window_lo = -1.0,
                               double window_hi = -1.0);

struct DecisionPoint {
    double delta = 0.0;
    double theta_hat = 0.0;
    bool survives = false;
};

struct CriticalEstimate {
    double delta_c_hat = 0.0;
    double lo = 0.0, hi = 0.0;
    std::vector<DecisionPoint> path;
    double horizon = 0.0;
    std::uint32_t replicas = 0;
    double p_star = 0.0;
};

/// Bisects the survival decision theta_hat > p_star between delta_lo
/// (must survive) and delta_hi (must die). Each step reruns
/// estimate_survival with a seed derived from (config.seed, step).
CriticalEstimate bisect_critical(const SimConfig& config, double delta_lo, double delta_hi,
                                 int iterations, double p_star = 0.01);

struct PathwiseDualityResult {
    bool forward_hit = false;
    bool backward_hit = false;
    std::uint64_t events = 0;
};

/// Builds one graphical representation on a finite torus over [0,t]
/// (Poisson arrows per ordered site pair, recovery marks per site) and
/// answers both hitting questions on the same realization. The two answers
/// agree pathwise, realization by realization.
PathwiseDualityResult pathwise_duality_check(const GroupSpec& torus,
                                             const InfectionKernel& kernel, double delta,
                                             exact::StateMask a, exact::StateMask b, double t,
                                             std::uint64_t seed);

struct BoundRow {
    double gamma = 0.0;
    double delta = 0.0;
    double phi_gamma = 0.0;
    double theta_hat = 0.0;
    double ci_lo = 0.0, ci_hi = 1.0;
    double se = 0.0;
    bool pass = false;
};

/// For each gamma, estimates survival at delta = (1-gamma) delta_c_hat and
/// compares against the explicit bound phi(gamma).
std::vector<BoundRow> verify_lower_bound(const SimConfig& config, double delta_c_hat,
                                         const std::vector<double>& gammas);

} // namespace mc
} // namespace contact
