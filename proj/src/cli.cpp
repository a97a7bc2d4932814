#include "contact/cli.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "contact/drift.hpp"
#include "contact/errors.hpp"
#include "contact/io.hpp"
#include "contact/montecarlo.hpp"
#include "contact/rng.hpp"
#include "contact/stats.hpp"
#include "contact/version.hpp"

namespace contact {
namespace cli {

namespace {

using nlohmann::json;

enum class FieldType { Str, Num, Int, Bool, NumArr, Kernel };

struct Field {
    const char* name;
    FieldType type;
    bool required;
    json def; // null when there is no default
    const char* help;
};

// Shared field bundles.
const Field kGroup{"group", FieldType::Str, true, nullptr, "group spec: z:D, torus:NxD, free:K"};
const Field kKernel{"kernel", FieldType::Kernel, true, nullptr,
                    "kernel spec: nn:RATE, zero, or JSON list of [offset-or-word, rate]"};
const Field kDelta{"delta", FieldType::Num, true, nullptr, "recovery rate"};
const Field kSeed{"seed", FieldType::Int, true, nullptr, "master seed (mandatory for MC runs)"};
const Field kOut{"out", FieldType::Str, false, nullptr, "output directory for CSV/JSON artifacts"};
const Field kHorizon{"horizon", FieldType::Num, true, nullptr, "time horizon T"};
const Field kReplicas{"replicas", FieldType::Int, true, nullptr, "replica count N"};
const Field kCap{"size_cap", FieldType::Int, false, json(10000), "active-set size cap"};
const Field kThreads{"threads", FieldType::Int, false, json(1), "worker threads (0 = hardware)"};

const std::map<std::string, std::vector<Field>>& schema() {
    static const std::map<std::string, std::vector<Field>> s = {
        {"exact-r", {kGroup, kKernel, kDelta, kOut}},
        {"exact-duality",
         {kGroup, kKernel, kDelta, kSeed, kOut,
          {"cases", FieldType::Int, false, json(100), "number of random (A,B,t) cases"},
          {"t_max", FieldType::Num, false, json(2.0), "times drawn uniformly from (0, t_max]"},
          {"tolerance", FieldType::Num, false, json(1e-9), "max allowed |lhs - rhs|"}}},
        {"eigenmeasure",
         {kGroup, kKernel, kDelta, kOut,
          {"ladder", FieldType::NumArr, false, json::array({0.5, 0.2, 0.1, 0.05, 0.02}),
           "resolvent offsets above r, decreasing"},
          {"times", FieldType::NumArr, false, json::array({0.5, 1.0, 2.0}),
           "semigroup consistency check times"}}},
        {"submult",
         {kGroup, kKernel, kDelta, kSeed, kOut,
          {"pairs", FieldType::Int, false, json(50), "number of random (s,t) pairs"},
          {"t_max", FieldType::Num, false, json(2.0), "s,t drawn uniformly from (0, t_max]"}}},
        {"mc-growth",
         {kGroup, kKernel, kDelta, kSeed, kOut, kHorizon, kReplicas, kCap, kThreads,
          {"grid_step", FieldType::Num, false, json(1.0), "record-grid spacing"},
          {"window", FieldType::Str, false, nullptr, "fit window lo:hi (default T/3:T)"}}},
        {"mc-survival",
         {kGroup, kKernel, kSeed, kOut, kHorizon, kReplicas, kCap, kThreads,
          {"delta", FieldType::Num, false, nullptr, "recovery rate (single run)"},
          {"delta_grid", FieldType::Str, false, nullptr, "recovery-rate grid lo:hi:step"}}},
        {"find-critical",
         {kGroup, kKernel, kSeed, kOut, kHorizon, kReplicas, kCap, kThreads,
          {"delta_lo", FieldType::Num, true, nullptr, "bracket low end (must survive)"},
          {"delta_hi", FieldType::Num, true, nullptr, "bracket high end (must die)"},
          {"iterations", FieldType::Int, false, json(12), "bisection steps"},
          {"p_star", FieldType::Num, false, json(0.01), "survival decision threshold"}}},
        {"verify-bound",
         {kGroup, kKernel, kSeed, kOut, kHorizon, kReplicas, kCap, kThreads,
          {"delta_c", FieldType::Num, true, nullptr, "critical-rate estimate delta_c"},
          {"gammas", FieldType::NumArr, true, nullptr, "gamma values in (0,1)"}}},
        {"bound-table",
         {kOut,
          {"gamma_grid", FieldType::Str, false, json("0.01:0.99:0.01"), "gamma grid lo:hi:step"}}},
        {"submartingale-fuzz",
         {kSeed, kOut,
          {"cases", FieldType::Int, false, json(1000), "number of random (Q,h,eps) cases"},
          {"max_states", FieldType::Int, false, json(8), "max Q-matrix size"},
          {"tolerance", FieldType::Num, false, json(1e-10), "identity tolerance"}}},
        {"drift-report",
         {kGroup, kKernel, kDelta, kOut,
          {"eps", FieldType::Num, true, nullptr, "transformation parameter in (0,2)"},
          {"eps1", FieldType::Num, false, nullptr, "override for eps1"},
          {"eps2", FieldType::Num, false, nullptr, "override for eps2"},
          {"compensate_r", FieldType::Bool, false, json(false),
           "also report the drift with the r h term removed"}}},
    };
    return s;
}

bool type_matches(const Field& f, const json& v) {
    switch (f.type) {
        case FieldType::Str: return v.is_string();
        case FieldType::Num: return v.is_number();
        case FieldType::Int: return v.is_number_integer() || v.is_number_unsigned();
        case FieldType::Bool: return v.is_boolean();
        case FieldType::NumArr:
            return v.is_array() &&
                   std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
        case FieldType::Kernel: return v.is_string() || v.is_array();
    }
    return false;
}

GroupSpec group_from(const json& cfg) { return GroupSpec::parse(cfg.at("group").get<std::string>()); }

Site site_from_json(const json& offset) {
    if (offset.is_string()) return Site(offset.get<std::string>());
    if (offset.is_array()) {
        std::vector<std::int64_t> coords;
        for (const json& c : offset) {
            if (!c.is_number_integer() && !c.is_number_unsigned())
                throw UsageError("kernel offset coordinates must be integers");
            coords.push_back(c.get<std::int64_t>());
        }
        return Site(std::move(coords));
    }
    throw UsageError("kernel offset must be an integer array or a word string");
}

InfectionKernel kernel_from(const GroupSpec& group, const json& cfg) {
    const json& spec = cfg.at("kernel");
    if (spec.is_string()) {
        const std::string text = spec.get<std::string>();
        if (text == "zero") return InfectionKernel::zero(group);
        if (text.rfind("nn:", 0) == 0) {
            try {
                return InfectionKernel::nearest_neighbor(group, std::stod(text.substr(3)));
            } catch (const std::logic_error&) {
                throw UsageError("malformed kernel spec: " + text);
            }
        }
        throw UsageError("unknown kernel spec: " + text + " (expected nn:RATE, zero, or a JSON list)");
    }
    std::vector<std::pair<Site, double>> base;
    for (const json& entry : spec) {
        if (!entry.is_array() || entry.size() != 2 || !entry[1].is_number())
            throw UsageError("kernel entries must be [offset-or-word, rate] pairs");
        base.emplace_back(site_from_json(entry[0]), entry[1].get<double>());
    }
    return InfectionKernel::from_pairs(group, std::move(base));
}

std::string mask_to_cell(exact::StateMask mask) {
    std::string out;
    for (std::uint32_t i = 0; mask; ++i, mask >>= 1)
        if (mask & 1u) {
            if (!out.empty()) out += ';';
            out += std::to_string(i);
        }
    return out;
}

std::string out_path(const json& cfg, const std::string& file) {
    const std::string dir = cfg.at("out").get<std::string>();
    return dir + "/" + file;
}

bool has_out(const json& cfg) { return cfg.contains("out") && !cfg["out"].is_null(); }

mc::SimConfig sim_config_from(const json& cfg, double delta) {
    const GroupSpec group = group_from(cfg);
    mc::SimConfig sim(group, kernel_from(group, cfg), delta, cfg.at("horizon").get<double>(),
                      cfg.at("replicas").get<std::uint32_t>(), cfg.at("seed").get<std::uint64_t>());
    sim.size_cap = cfg.at("size_cap").get<std::uint64_t>();
    sim.threads = cfg.at("threads").get<int>();
    return sim;
}

exact::StateMask random_nonempty_mask(Rng& rng, std::uint32_t sites) {
    const std::uint64_t states = std::uint64_t{1} << sites;
    return static_cast<exact::StateMask>(1 + rng.next_below(states - 1));
}

// ---------------------------------------------------------------- commands

int run_exact_r(const json& cfg) {
    const GroupSpec group = group_from(cfg);
    const exact::RestrictedGenerator gen(group, kernel_from(group, cfg),
                                         cfg.at("delta").get<double>());
    const exact::EigenResult eig = exact::exact_growth_rate(gen);
    json result;
    result["group"] = cfg.at("group");
    result["kernel"] = cfg.at("kernel");
    result["delta"] = cfg.at("delta");
    result["r"] = eig.r;
    result["residuals"] = {{"nu", eig.residual_nu}, {"h", eig.residual_h}};
    result["normalization"] = eig.normalization;
    result["iterations"] = eig.iterations;
    std::cout << result.dump(2) << '\n';
    if (has_out(cfg)) {
        const std::string path = out_path(cfg, "exact_r.json");
        std::ofstream f(path, std::ios::binary);
        f << result.dump(2) << '\n';
        io::write_manifest(path, "exact-r", cfg);
    }
    return 0;
}

int run_exact_duality(const json& cfg) {
    const GroupSpec group = group_from(cfg);
    const InfectionKernel kernel = kernel_from(group, cfg);
    const double delta = cfg.at("delta").get<double>();
    const double t_max = cfg.at("t_max").get<double>();
    const double tolerance = cfg.at("tolerance").get<double>();
    const std::uint64_t cases = cfg.at("cases").get<std::uint64_t>();
    SiteIndex sites(group);

    Rng rng(cfg.at("seed").get<std::uint64_t>());
    double max_diff = 0.0;
    std::optional<io::CsvWriter> csv;
    if (has_out(cfg))
        csv.emplace(out_path(cfg, "duality.csv"),
                    std::vector<std::string>{"A", "B", "t", "lhs", "rhs", "diff"});
    for (std::uint64_t k = 0; k < cases; ++k) {
        const exact::StateMask a = random_nonempty_mask(rng, sites.count());
        const exact::StateMask b = random_nonempty_mask(rng, sites.count());
        const double t = t_max * (1.0 - rng.next_double());
        const auto res = exact::duality_check(group, kernel, delta, a, b, t);
        const double diff = std::fabs(res.lhs - res.rhs);
        max_diff = std::max(max_diff, diff);
        if (csv)
            csv->write_row({mask_to_cell(a), mask_to_cell(b), io::cell(t), io::cell(res.lhs),
                            io::cell(res.rhs), io::cell(diff)});
    }
    if (csv) io::write_manifest(csv->path(), "exact-duality", cfg);
    json summary{{"cases", cases}, {"max_diff", max_diff}, {"tolerance", tolerance}};
    summary["pass"] = max_diff <= tolerance;
    std::cout << summary.dump(2) << '\n';
    if (max_diff > tolerance)
        throw NumericalError("duality violated: max diff " + io::format_double(max_diff));
    return 0;
}

int run_eigenmeasure(const json& cfg) {
    const GroupSpec group = group_from(cfg);
    const InfectionKernel kernel = kernel_from(group, cfg);
    const double delta = cfg.at("delta").get<double>();
    const exact::RestrictedGenerator gen(group, kernel, delta);
    const exact::EigenResult eig = exact::exact_growth_rate(gen);
    const std::size_t size = gen.state_count();

    // nu P_t = e^{rt} nu consistency.
    double semigroup_defect = 0.0;
    for (const json& jt : cfg.at("times")) {
        const double t = jt.get<double>();
        const std::vector<double> evolved = gen.semigroup_row(eig.nu, t);
        const double scale = std::exp(eig.r * t);
        for (std::size_t bm = 1; bm < size; ++bm)
            semigroup_defect = std::max(semigroup_defect,
                                        std::fabs(evolved[bm] - scale * eig.nu[bm]));
    }

    const double homogeneity = exact::homogeneity_defect(gen.sites(), eig.nu);

    // Resolvent ladder: lambda = r + offset, offsets decreasing toward 0.
    json ladder = json::array();
    std::optional<io::CsvWriter> csv;
    if (has_out(cfg))
        csv.emplace(out_path(cfg, "resolvent_ladder.csv"),
                    std::vector<std::string>{"lambda", "pi_lambda", "residual", "dist_to_nu"});
    double prev_pi = 0.0;
    bool pi_increasing = true;
    std::vector<double> dists;
    for (const json& joff : cfg.at("ladder")) {
        const double lambda = eig.r + joff.get<double>();
        const exact::ResolventMeasure rm = exact::resolvent_eigenmeasure(gen, lambda, eig.r);
        double dist = 0.0;
        for (std::size_t bm = 1; bm < size; ++bm)
            dist = std::max(dist, std::fabs(rm.nu[bm] / rm.pi - eig.nu[bm]));
        if (!ladder.empty() && rm.pi <= prev_pi) pi_increasing = false;
        prev_pi = rm.pi;
        dists.push_back(dist);
        ladder.push_back(
            {{"lambda", lambda}, {"pi", rm.pi}, {"residual", rm.residual}, {"dist", dist}});
        if (csv)
            csv->write_row({io::cell(lambda), io::cell(rm.pi), io::cell(rm.residual),
                            io::cell(dist)});
    }
    if (csv) io::write_manifest(csv->path(), "eigenmeasure", cfg);
    const bool dist_improves = std::is_sorted(dists.rbegin(), dists.rend());

    json result;
    result["r"] = eig.r;
    result["residual_nu"] = eig.residual_nu;
    result["residual_h"] = eig.residual_h;
    result["semigroup_defect"] = semigroup_defect;
    result["homogeneity_defect"] = homogeneity;
    result["pi_increasing"] = pi_increasing;
    result["dist_improves"] = dist_improves;
    result["ladder"] = ladder;
    std::cout << result.dump(2) << '\n';
    return 0;
}

int run_submult(const json& cfg) {
    const GroupSpec group = group_from(cfg);
    const exact::RestrictedGenerator gen(group, kernel_from(group, cfg),
                                         cfg.at("delta").get<double>());
    const double t_max = cfg.at("t_max").get<double>();
    const std::uint64_t pairs = cfg.at("pairs").get<std::uint64_t>();
    Rng rng(cfg.at("seed").get<std::uint64_t>());
    std::optional<io::CsvWriter> csv;
    if (has_out(cfg))
        csv.emplace(out_path(cfg, "submultiplicativity.csv"),
                    std::vector<std::string>{"s", "t", "lhs", "rhs", "slack"});
    double worst = -std::numeric_limits<double>::infinity();
    for (std::uint64_t k = 0; k < pairs; ++k) {
        const double s = t_max * (1.0 - rng.next_double());
        const double t = t_max * (1.0 - rng.next_double());
        const auto res = exact::submultiplicativity_check(gen, s, t);
        const double slack = res.lhs - res.rhs;
        worst = std::max(worst, slack);
        if (csv)
            csv->write_row({io::cell(s), io::cell(t), io::cell(res.lhs), io::cell(res.rhs),
                            io::cell(slack)});
    }
    if (csv) io::write_manifest(csv->path(), "submult", cfg);
    json summary{{"pairs", pairs}, {"max_slack", worst}, {"pass", worst <= 1e-9}};
    std::cout << summary.dump(2) << '\n';
    if (worst > 1e-9)
        throw NumericalError("submultiplicativity violated by " + io::format_double(worst));
    return 0;
}

int run_mc_growth(const json& cfg) {
    mc::SimConfig sim = sim_config_from(cfg, cfg.at("delta").get<double>());
    const double step = cfg.at("grid_step").get<double>();
    if (!(step > 0.0)) throw UsageError("grid_step must be > 0");
    for (double t = 0.0; t <= sim.horizon + 1e-12; t += step)
        sim.record_grid.push_back(std::min(t, sim.horizon));
    double wlo = -1.0, whi = -1.0;
    if (cfg.contains("window") && !cfg["window"].is_null()) {
        const std::string w = cfg["window"].get<std::string>();
        const auto colon = w.find(':');
        if (colon == std::string::npos) throw UsageError("window must look like lo:hi");
        try {
            wlo = std::stod(w.substr(0, colon));
            whi = std::stod(w.substr(colon + 1));
        } catch (const std::logic_error&) {
            throw UsageError("malformed window: " + w);
        }
    }
    const mc::GrowthFit fit = mc::estimate_growth_rate(sim, wlo, whi);
    if (has_out(cfg)) {
        io::CsvWriter csv(out_path(cfg, "growth.csv"), {"t", "mean_size", "log_mean"});
        for (std::size_t k = 0; k < fit.grid.size(); ++k)
            csv.write_row({io::cell(fit.grid[k]), io::cell(fit.mean_size[k]),
                           io::cell(fit.log_mean[k])});
        io::write_manifest(csv.path(), "mc-growth", cfg);
    }
    json summary{{"r_hat", fit.r_hat},
                 {"se", fit.se},
                 {"points_used", fit.points_used},
                 {"window", {fit.window_lo, fit.window_hi}},
                 {"capped_replicas", fit.capped_replicas}};
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int run_mc_survival(const json& cfg) {
    const bool has_delta = cfg.contains("delta") && !cfg["delta"].is_null();
    const bool has_grid = cfg.contains("delta_grid") && !cfg["delta_grid"].is_null();
    if (has_delta == has_grid)
        throw UsageError("mc-survival needs exactly one of delta, delta_grid");
    std::vector<double> deltas;
    if (has_delta)
        deltas.push_back(cfg.at("delta").get<double>());
    else
        deltas = io::parse_range(cfg.at("delta_grid").get<std::string>());

    std::optional<io::CsvWriter> csv;
    if (has_out(cfg))
        csv.emplace(out_path(cfg, "survival.csv"),
                    std::vector<std::string>{"delta", "theta_hat", "ci_lo", "ci_hi", "n",
                                             "t_horizon"});
    json rows = json::array();
    for (double delta : deltas) {
        const mc::SurvivalStats st = mc::estimate_survival(sim_config_from(cfg, delta));
        if (csv)
            csv->write_row({io::cell(delta), io::cell(st.theta_hat), io::cell(st.ci_lo),
                            io::cell(st.ci_hi), io::cell(std::uint64_t{st.replicas}),
                            io::cell(st.horizon)});
        rows.push_back({{"delta", delta},
                        {"theta_hat", st.theta_hat},
                        {"ci_lo", st.ci_lo},
                        {"ci_hi", st.ci_hi},
                        {"capped", st.capped}});
    }
    if (csv) io::write_manifest(csv->path(), "mc-survival", cfg);
    std::cout << rows.dump(2) << '\n';
    return 0;
}

int run_find_critical(const json& cfg) {
    const mc::SimConfig sim = sim_config_from(cfg, 0.0);
    const mc::CriticalEstimate est =
        mc::bisect_critical(sim, cfg.at("delta_lo").get<double>(),
                            cfg.at("delta_hi").get<double>(), cfg.at("iterations").get<int>(),
                            cfg.at("p_star").get<double>());
    if (has_out(cfg)) {
        io::CsvWriter csv(out_path(cfg, "critical_path.csv"),
                          {"step", "delta", "theta_hat", "decision"});
        for (std::size_t i = 0; i < est.path.size(); ++i)
            csv.write_row({io::cell(std::uint64_t{i}), io::cell(est.path[i].delta),
                           io::cell(est.path[i].theta_hat),
                           io::cell(est.path[i].survives ? std::string("survive")
                                                         : std::string("die"))});
        io::write_manifest(csv.path(), "find-critical", cfg);
    }
    json summary{{"delta_c_hat", est.delta_c_hat}, {"lo", est.lo},     {"hi", est.hi},
                 {"horizon", est.horizon},         {"n", est.replicas}, {"p_star", est.p_star}};
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int run_verify_bound(const json& cfg) {
    const mc::SimConfig sim = sim_config_from(cfg, 0.0);
    std::vector<double> gammas;
    for (const json& g : cfg.at("gammas")) gammas.push_back(g.get<double>());
    const auto rows = mc::verify_lower_bound(sim, cfg.at("delta_c").get<double>(), gammas);
    std::optional<io::CsvWriter> csv;
    if (has_out(cfg))
        csv.emplace(out_path(cfg, "bound_check.csv"),
                    std::vector<std::string>{"gamma", "delta", "phi_gamma", "theta_hat", "ci_lo",
                                             "pass"});
    json out = json::array();
    for (const mc::BoundRow& row : rows) {
        if (csv)
            csv->write_row({io::cell(row.gamma), io::cell(row.delta), io::cell(row.phi_gamma),
                            io::cell(row.theta_hat), io::cell(row.ci_lo), io::cell(row.pass)});
        out.push_back({{"gamma", row.gamma},
                       {"delta", row.delta},
                       {"phi_gamma", row.phi_gamma},
                       {"theta_hat", row.theta_hat},
                       {"pass", row.pass}});
    }
    if (csv) io::write_manifest(csv->path(), "verify-bound", cfg);
    std::cout << out.dump(2) << '\n';
    return 0;
}

int run_bound_table(const json& cfg) {
    const std::vector<double> gammas = io::parse_range(cfg.at("gamma_grid").get<std::string>());
    std::optional<io::CsvWriter> csv;
    if (has_out(cfg))
        csv.emplace(out_path(cfg, "bound_table.csv"),
                    std::vector<std::string>{"gamma", "eps", "eps1", "eps2", "phi_gamma",
                                             "taylor_approx", "diff"});
    double prev_phi = -1.0;
    bool increasing = true;
    for (double gamma : gammas) {
        const double eps = bounds::eps_of_gamma(gamma);
        const bounds::EpsParams p = bounds::eps_params(eps);
        const double phi = bounds::phi_of_gamma(gamma);
        const double taylor = gamma - 0.5 * gamma * gamma;
        if (phi <= prev_phi) increasing = false;
        prev_phi = phi;
        if (csv)
            csv->write_row({io::cell(gamma), io::cell(eps), io::cell(p.eps1), io::cell(p.eps2),
                            io::cell(phi), io::cell(taylor), io::cell(phi - taylor)});
    }
    if (csv) io::write_manifest(csv->path(), "bound-table", cfg);
    json summary{{"rows", gammas.size()}, {"strictly_increasing", increasing}};
    std::cout << summary.dump(2) << '\n';
    if (!increasing) throw NumericalError("phi(gamma) failed to increase along the grid");
    return 0;
}

int run_submartingale_fuzz(const json& cfg) {
    const std::uint64_t cases = cfg.at("cases").get<std::uint64_t>();
    const std::size_t max_states = cfg.at("max_states").get<std::size_t>();
    const double tolerance = cfg.at("tolerance").get<double>();
    if (max_states < 2) throw UsageError("max_states must be >= 2");
    Rng rng(cfg.at("seed").get<std::uint64_t>());
    double worst = 0.0;
    std::uint64_t sign_checked = 0;
    for (std::uint64_t k = 0; k < cases; ++k) {
        const std::size_t n = 2 + rng.next_below(max_states - 1);
        std::vector<double> off(n * n, 0.0);
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) {
                if (x == y) continue;
                if (rng.next_double() < 0.3) continue; // keep some structural zeros
                off[x * n + y] = 5.0 * rng.next_double();
            }
        const bounds::QMatrix q = bounds::QMatrix::from_off_diagonal(n, std::move(off));
        std::vector<double> h(n);
        for (double& v : h) v = -2.0 + 4.0 * rng.next_double();
        const double eps = 0.01 + 1.98 * rng.next_double();
        const auto rep = bounds::submartingale_check(q, h, eps);
        worst = std::max(worst, rep.max_rel_error);
        if (!rep.sign_equivalent)
            throw NumericalError("sign equivalence violated at case " + std::to_string(k));
        ++sign_checked;
    }
    json summary{{"cases", cases}, {"max_rel_error", worst}, {"pass", worst <= tolerance},
                 {"sign_checked", sign_checked}};
    std::cout << summary.dump(2) << '\n';
    if (worst > tolerance)
        throw NumericalError("identity violated: max rel error " + io::format_double(worst));
    return 0;
}

int run_drift_report(const json& cfg) {
    const GroupSpec group = group_from(cfg);
    std::optional<double> e1, e2;
    if (cfg.contains("eps1") && !cfg["eps1"].is_null()) e1 = cfg["eps1"].get<double>();
    if (cfg.contains("eps2") && !cfg["eps2"].is_null()) e2 = cfg["eps2"].get<double>();
    const bounds::DriftCertificate cert = bounds::drift_certificate(
        group, kernel_from(group, cfg), cfg.at("delta").get<double>(),
        cfg.at("eps").get<double>(), cfg.at("compensate_r").get<bool>(), e1, e2);
    json result{{"r", cert.growth_rate},
                {"eps", cert.eps},
                {"eps1", cert.eps1},
                {"eps2", cert.eps2},
                {"coeff_infection", cert.coeff_infection},
                {"coeff_recovery", cert.coeff_recovery},
                {"min_drift", cert.min_drift},
                {"identity_max_rel_error", cert.identity_max_rel_error},
                {"max_increment", cert.max_increment}};
    if (cert.compensated) result["min_drift_compensated"] = cert.min_drift_compensated;
    std::cout << result.dump(2) << '\n';
    if (has_out(cfg)) {
        const std::string path = out_path(cfg, "drift_report.json");
        std::ofstream f(path, std::ios::binary);
        f << result.dump(2) << '\n';
        io::write_manifest(path, "drift-report", cfg);
    }
    return 0;
}

int dispatch(const std::string& command, const json& cfg) {
    if (command == "exact-r") return run_exact_r(cfg);
    if (command == "exact-duality") return run_exact_duality(cfg);
    if (command == "eigenmeasure") return run_eigenmeasure(cfg);
    if (command == "submult") return run_submult(cfg);
    if (command == "mc-growth") return run_mc_growth(cfg);
    if (command == "mc-survival") return run_mc_survival(cfg);
    if (command == "find-critical") return run_find_critical(cfg);
    if (command == "verify-bound") return run_verify_bound(cfg);
    if (command == "bound-table") return run_bound_table(cfg);
    if (command == "submartingale-fuzz") return run_submartingale_fuzz(cfg);
    if (command == "drift-report") return run_drift_report(cfg);
    throw UsageError("unknown subcommand: " + command);
}

} // namespace

json canonicalize(const std::string& command, const json& raw) {
    const auto it = schema().find(command);
    if (it == schema().end()) throw UsageError("unknown subcommand: " + command);
    if (!raw.is_object()) throw UsageError("config must be a JSON object");

    json canon;
    canon["command"] = command;
    for (const auto& [key, value] : raw.items()) {
        if (key == "command") {
            if (!value.is_string() || value.get<std::string>() != command)
                throw UsageError("config command '" + value.dump() +
                                 "' does not match subcommand '" + command + "'");
            continue;
        }
        const auto field = std::find_if(it->second.begin(), it->second.end(),
                                        [&](const Field& f) { return key == f.name; });
        if (field == it->second.end())
            throw UsageError("unknown config key '" + key + "' for subcommand " + command);
        if (!type_matches(*field, value))
            throw UsageError("config key '" + key + "' has the wrong type");
        canon[key] = value;
    }
    for (const Field& f : it->second) {
        if (canon.contains(f.name)) continue;
        if (!f.def.is_null())
            canon[f.name] = f.def;
        else if (f.required)
            throw UsageError("missing required config key '" + std::string(f.name) +
                             "' for subcommand " + command);
    }
    return canon;
}

std::string config_to_string(const json& canonical) { return canonical.dump(2) + "\n"; }

json load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file: " + path);
    json raw;
    try {
        raw = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config parse error in " + path + ": " + e.what());
    }
    if (!raw.is_object() || !raw.contains("command") || !raw["command"].is_string())
        throw UsageError("config file must be an object with a string 'command' key");
    return canonicalize(raw["command"].get<std::string>(), raw);
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"contactsim: exact and Monte Carlo analysis of contact processes"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    struct PendingOption {
        std::string key;
        FieldType type;
        std::string value;
        bool flag_set = false;
    };
    std::map<std::string, std::string> config_paths;
    std::map<std::string, std::vector<PendingOption>> pending;

    static const std::map<std::string, const char*> descriptions = {
        {"exact-r", "Perron growth rate / eigenmeasure summary (JSON to stdout)"},
        {"exact-duality", "exact two-sided duality checks; CSV: A,B,t,lhs,rhs,diff"},
        {"eigenmeasure", "eigenmeasure suite with resolvent ladder; CSV: "
                         "lambda,pi_lambda,residual,dist_to_nu"},
        {"submult", "expected-size submultiplicativity; CSV: s,t,lhs,rhs,slack"},
        {"mc-growth", "Monte Carlo growth-rate fit; CSV: t,mean_size,log_mean"},
        {"mc-survival", "Monte Carlo survival estimate; CSV: "
                        "delta,theta_hat,ci_lo,ci_hi,n,t_horizon"},
        {"find-critical", "bisection for the critical recovery rate; CSV: "
                          "step,delta,theta_hat,decision"},
        {"verify-bound", "survival lower bound check; CSV: "
                         "gamma,delta,phi_gamma,theta_hat,ci_lo,pass"},
        {"bound-table", "analytic bound table; CSV: "
                        "gamma,eps,eps1,eps2,phi_gamma,taylor_approx,diff"},
        {"submartingale-fuzz", "randomized submartingale-identity checks (JSON to stdout)"},
        {"drift-report", "transformed-drift report for the modified generator (JSON)"},
    };

    for (const auto& [command, fields] : schema()) {
        CLI::App* sub = app.add_subcommand(command, descriptions.at(command));
        auto& slots = pending[command];
        slots.reserve(fields.size() + 1);
        sub->add_option_function<std::string>(
               "--config",
               [&config_paths, command = command](const std::string& v) {
                   config_paths[command] = v;
               },
               "JSON config file; explicit flags override its keys")
            ->type_name("FILE");
        for (const Field& f : fields) {
            slots.push_back({f.name, f.type, "", false});
            PendingOption& slot = slots.back();
            // Underscored keys also get a dashed spelling (--t_max / --t-max).
            std::string names = "--" + std::string(f.name);
            if (names.find('_') != std::string::npos) {
                std::string dashed = names;
                std::replace(dashed.begin(), dashed.end(), '_', '-');
                names += "," + dashed;
            }
            if (f.type == FieldType::Bool) {
                sub->add_flag_function(
                    names, [&slot](std::int64_t count) { slot.flag_set = count > 0; }, f.help);
            } else {
                sub->add_option_function<std::string>(
                       names,
                       [&slot](const std::string& v) {
                           slot.value = v;
                           slot.flag_set = true;
                       },
                       f.help)
                    ->type_name(f.type == FieldType::Num ? "NUM"
                                : f.type == FieldType::Int ? "INT"
                                : f.type == FieldType::NumArr ? "LIST"
                                                              : "TEXT");
            }
        }
    }

    try {
        std::vector<std::string> argv_like(args.rbegin(), args.rend());
        app.parse(argv_like); // CLI11 consumes in reverse order
        CLI::App* sub = app.get_subcommands().at(0);
        const std::string command = sub->get_name();

        json raw = json::object();
        if (config_paths.count(command)) {
            raw = load_config(config_paths[command]);
            raw.erase("command");
        }
        for (const PendingOption& opt : pending[command]) {
            if (!opt.flag_set) continue;
            switch (opt.type) {
                case FieldType::Str: raw[opt.key] = opt.value; break;
                case FieldType::Bool: raw[opt.key] = true; break;
                case FieldType::Num:
                    try {
                        raw[opt.key] = std::stod(opt.value);
                    } catch (const std::logic_error&) {
                        throw UsageError("flag --" + opt.key + " expects a number");
                    }
                    break;
                case FieldType::Int:
                    try {
                        raw[opt.key] = std::stoull(opt.value);
                    } catch (const std::logic_error&) {
                        throw UsageError("flag --" + opt.key + " expects an integer");
                    }
                    break;
                case FieldType::NumArr: {
                    json arr = json::array();
                    std::stringstream ss(opt.value);
                    std::string part;
                    while (std::getline(ss, part, ',')) {
                        try {
                            arr.push_back(std::stod(part));
                        } catch (const std::logic_error&) {
                            throw UsageError("flag --" + opt.key + " expects numbers");
                        }
                    }
                    raw[opt.key] = arr;
                    break;
                }
                case FieldType::Kernel:
                    if (!opt.value.empty() && opt.value.front() == '[') {
                        try {
                            raw[opt.key] = json::parse(opt.value);
                        } catch (const json::parse_error& e) {
                            throw UsageError(std::string("bad kernel JSON: ") + e.what());
                        }
                    } else {
                        raw[opt.key] = opt.value;
                    }
                    break;
            }
        }
        const json cfg = canonicalize(command, raw);
        return dispatch(command, cfg);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}

} // namespace cli
} // namespace contact
