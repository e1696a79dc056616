#include "rmpa/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rmpa/compiled.hpp"

namespace rmpa {

namespace {

std::vector<std::string> spec_names(const UncertaintySet& set) {
    std::vector<std::string> names;
    names.reserve(set.dimension());
    for (const auto& s : set.specs()) names.push_back(s.symbol.name);
    return names;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

McReport monte_carlo_check(const UncertainProblem& problem, const UncertaintySet& set,
                           const Binding& x_star, int n, double tol, uint64_t seed) {
    if (n < 1) throw Error("monte_carlo_check: n must be >= 1");
    const std::vector<std::string> names = spec_names(set);

    std::vector<CompiledExpr> tapes;
    tapes.reserve(problem.constraints.size());
    for (const auto& c : problem.constraints)
        tapes.emplace_back(substitute(c.expr, x_star), names);

    const auto& specs = set.specs();
    const size_t m = specs.size();
    Rng rng(seed);
    EvalScratch scratch;
    std::vector<double> z, u(m), best_z(m, 0.0);

    McReport report;
    report.samples = n;
    report.max_violation = -std::numeric_limits<double>::infinity();
    int violated_draws = 0;
    for (int draw = 0; draw < n; ++draw) {
        set.sample_normalized(rng, z);
        for (size_t k = 0; k < m; ++k) u[k] = specs[k].nominal + specs[k].halfwidth() * z[k];
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& tape : tapes) {
            double v;
            try {
                v = tape.eval(u, scratch);
            } catch (const DomainError&) {
                v = std::numeric_limits<double>::infinity();
            }
            worst = std::max(worst, v);
        }
        if (worst > tol) ++violated_draws;
        if (worst > report.max_violation) {
            report.max_violation = worst;
            best_z = z;
        }
    }
    report.violation_rate = static_cast<double>(violated_draws) / n;
    report.worst_u = set.to_physical(best_z);
    return report;
}

std::pair<Binding, double> grid_pessimize(const Expr& constraint, const Binding& x,
                                          const UncertaintySet& set, int points_per_dim) {
    const size_t m = set.dimension();
    if (m > 3)
        throw Error("grid_pessimize: set dimension " + std::to_string(m) + " exceeds 3");
    if (points_per_dim < 2) throw Error("grid_pessimize: need at least 2 points per dimension");

    Expr g_u = substitute(constraint, x);
    const std::vector<std::string> names = spec_names(set);
    CompiledExpr tape(g_u, names);
    EvalScratch scratch;
    const auto& specs = set.specs();

    if (m == 0) return {Binding{}, tape.eval({}, scratch)};

    const double span = set.kind() == UncertaintySet::Kind::Box ? 1.0 : set.omega();
    const int P = points_per_dim;
    std::vector<double> z(m), u(m), best_z(m, 0.0);
    double best = -std::numeric_limits<double>::infinity();

    auto eval_point = [&](std::vector<double>& zz) {
        if (set.kind() == UncertaintySet::Kind::Ellipsoid) {
            double nrm2 = 0.0;
            for (double v : zz) nrm2 += v * v;
            double nrm = std::sqrt(nrm2);
            if (nrm > set.omega() && nrm > 0.0)
                for (double& v : zz) v *= set.omega() / nrm;  // project onto the sphere
        }
        for (size_t k = 0; k < m; ++k) u[k] = specs[k].nominal + specs[k].halfwidth() * zz[k];
        double v = tape.eval(u, scratch);
        if (v > best) {
            best = v;
            best_z = zz;
        }
    };

    std::vector<int> idx(m, 0);
    for (;;) {
        for (size_t k = 0; k < m; ++k) z[k] = span * (-1.0 + 2.0 * idx[k] / (P - 1));
        std::vector<double> zz = z;
        eval_point(zz);
        size_t k = 0;
        while (k < m && ++idx[k] == P) {
            idx[k] = 0;
            ++k;
        }
        if (k == m) break;
    }
    return {set.to_physical(best_z), best};
}

namespace {

SweepRow make_row(double param, const UncertainProblem& problem, RobustStatus status,
                  double objective, const Binding& x, int iterations, double wall_s) {
    SweepRow row;
    row.param = param;
    row.status = to_string(status);
    row.objective = objective;
    row.iterations = iterations;
    row.wall_s = wall_s;

    if (!problem.policy_names.empty()) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, total = 0.0;
        for (const auto& name : problem.policy_names) {
            auto it = x.find(name);
            double v = it != x.end() ? it->second : 0.0;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            total += v;
        }
        row.policy_min = lo;
        row.policy_max = hi;
        row.policy_mean = total / static_cast<double>(problem.policy_names.size());
    }
    for (const auto& name : problem.share_names) {
        auto it = x.find(name);
        if (it != x.end()) row.total_share += it->second;
    }
    if (problem.reduction_expr) {
        Binding merged = problem.nominal_binding();
        for (const auto& [k, v] : x) merged[k] = v;
        try {
            row.reduction = evaluate(*problem.reduction_expr, merged);
        } catch (const Error&) {
            row.reduction = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return row;
}

void set_pct(SweepRow& row, double baseline) {
    row.pct_increase =
        baseline != 0.0 && std::isfinite(baseline)
            ? 100.0 * (row.objective - baseline) / std::abs(baseline)
            : 0.0;
}

}  // namespace

CutSet rescale_cuts(const CutSet& cuts, const UncertaintySet& from, const UncertaintySet& to) {
    CutSet out(cuts.size());
    for (size_t i = 0; i < cuts.size(); ++i) {
        for (const Cut& c : cuts[i]) {
            if (c.iteration < 0) continue;  // nominal/seed cuts are re-created by the solver
            std::vector<double> z = from.to_normalized(c.u);
            bool ok = true;
            for (double v : z)
                if (!std::isfinite(v)) ok = false;
            if (!ok) continue;
            if (to.kind() == UncertaintySet::Kind::Box) {
                for (double& v : z) v = std::clamp(v, -1.0, 1.0);
            } else {
                double nrm2 = 0.0;
                for (double v : z) nrm2 += v * v;
                double nrm = std::sqrt(nrm2);
                if (nrm > to.omega() && nrm > 0.0)
                    for (double& v : z) v *= to.omega() / nrm;
            }
            out[i].push_back({to.to_physical(z), c.violation_at_add, c.iteration});
        }
    }
    return out;
}

std::vector<SweepRow> sweep_level(const UncertainProblem& problem,
                                  const std::vector<double>& levels, const std::string& family,
                                  const RobustOptions& options) {
    if (levels.empty()) throw Error("sweep_level: no levels given");
    if (levels.front() != 0.0) throw Error("sweep_level: levels must include 0 first");
    for (size_t i = 1; i < levels.size(); ++i)
        if (levels[i] < levels[i - 1]) throw Error("sweep_level: levels must be ascending");

    std::vector<SweepRow> rows;
    std::optional<UncertaintySet> prev_set;
    CutSet prev_cuts;
    std::optional<Binding> prev_x;
    double baseline = std::numeric_limits<double>::quiet_NaN();

    for (double level : levels) {
        SetConfig cfg;
        cfg.kind = UncertaintySet::Kind::Box;
        if (family.empty()) {
            cfg.level = level;
        } else {
            cfg.level = 0.0;
            cfg.family_levels[family] = level;
        }
        UncertaintySet set = make_set(problem.uncertain, cfg);

        RobustOptions opts = options;
        CutSet warm;
        if (prev_set) {
            warm = rescale_cuts(prev_cuts, *prev_set, set);
            opts.warm_cuts = &warm;
        }
        if (prev_x) opts.warm_x0 = prev_x;

        auto t0 = std::chrono::steady_clock::now();
        RobustResult rr = solve_robust(problem, set, opts);
        SweepRow row = make_row(level, problem, rr.status, rr.objective_value, rr.x,
                                rr.iterations, seconds_since(t0));
        if (std::isnan(baseline) && rr.status == RobustStatus::RobustOptimal)
            baseline = rr.objective_value;
        set_pct(row, baseline);
        rows.push_back(std::move(row));

        if (rr.status == RobustStatus::RobustOptimal) {
            prev_set = set;
            prev_cuts = rr.cuts;
            prev_x = rr.x;
        }
    }
    return rows;
}

std::vector<SweepRow> sweep_omega(const UncertainProblem& problem, double level,
                                  const std::vector<double>& omegas,
                                  const RobustOptions& options) {
    if (omegas.empty()) throw Error("sweep_omega: no omega values given");
    for (double w : omegas)
        if (!(w >= 0.0)) throw Error("sweep_omega: omega values must be >= 0");

    auto build_set = [&](double omega) {
        SetConfig cfg;
        cfg.kind = UncertaintySet::Kind::Ellipsoid;
        cfg.level = level;
        cfg.omega = omega;
        return make_set(problem.uncertain, cfg);
    };

    double baseline = std::numeric_limits<double>::quiet_NaN();
    if (omegas.front() != 0.0) {
        RobustResult ref = solve_robust(problem, build_set(0.0), options);
        if (ref.status == RobustStatus::RobustOptimal) baseline = ref.objective_value;
    }

    std::vector<SweepRow> rows;
    std::optional<UncertaintySet> prev_set;
    CutSet prev_cuts;
    std::optional<Binding> prev_x;

    for (double omega : omegas) {
        UncertaintySet set = build_set(omega);
        RobustOptions opts = options;
        CutSet warm;
        if (prev_set) {
            warm = rescale_cuts(prev_cuts, *prev_set, set);
            opts.warm_cuts = &warm;
        }
        if (prev_x) opts.warm_x0 = prev_x;

        auto t0 = std::chrono::steady_clock::now();
        RobustResult rr = solve_robust(problem, set, opts);
        SweepRow row = make_row(omega, problem, rr.status, rr.objective_value, rr.x,
                                rr.iterations, seconds_since(t0));
        row.epsilon = chance_epsilon(omega);
        if (std::isnan(baseline) && rr.status == RobustStatus::RobustOptimal)
            baseline = rr.objective_value;
        set_pct(row, baseline);
        rows.push_back(std::move(row));

        if (rr.status == RobustStatus::RobustOptimal) {
            prev_set = set;
            prev_cuts = rr.cuts;
            prev_x = rr.x;
        }
    }
    return rows;
}

std::vector<SweepRow> sweep_market_share(
    const std::function<UncertainProblem(double)>& rebuild, const std::vector<double>& mu_values,
    const SetConfig& set_config, const RobustOptions& options) {
    for (double mu : mu_values)
        if (!(mu >= 0.0) || mu >= 1.0)
            throw Error("sweep_market_share: mu values must be in [0, 1)");
    for (size_t i = 1; i < mu_values.size(); ++i)
        if (mu_values[i] < mu_values[i - 1])
            throw Error("sweep_market_share: mu values must be ascending");

    std::vector<SweepRow> rows;
    CutSet prev_cuts;
    bool have_cuts = false;
    std::optional<UncertaintySet> prev_set;

    for (double mu : mu_values) {
        UncertainProblem problem = rebuild(mu);
        UncertaintySet set = make_set(problem.uncertain, set_config);

        RobustOptions opts = options;
        CutSet warm;
        if (have_cuts && prev_cuts.size() == problem.constraints.size()) {
            warm = rescale_cuts(prev_cuts, *prev_set, set);
            opts.warm_cuts = &warm;
        }

        auto t0 = std::chrono::steady_clock::now();
        LocalSolution nominal = solve_nominal(problem, opts.upper_starts,
                                              mix_seed(opts.seed, 0x4011), opts.nlp);
        RobustResult rr = solve_robust(problem, set, opts);
        SweepRow row = make_row(mu, problem, rr.status, rr.objective_value, rr.x,
                                rr.iterations, seconds_since(t0));
        set_pct(row, nominal.status == SolveStatus::OptimalLocal ? nominal.objective_value
                                                                 : std::numeric_limits<double>::quiet_NaN());
        rows.push_back(std::move(row));

        if (rr.status == RobustStatus::RobustOptimal) {
            prev_cuts = rr.cuts;
            prev_set = set;
            have_cuts = true;
        }
    }
    return rows;
}

namespace {

std::string fmt9(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

std::string sweep_csv_string(const std::vector<SweepRow>& rows, bool append_epsilon) {
    std::ostringstream out;
    out << "param,status,objective,pct_increase,reduction,policy_min,policy_mean,policy_max,"
           "total_share,iterations,wall_s";
    if (append_epsilon) out << ",epsilon";
    out << "\n";
    for (const auto& r : rows) {
        out << fmt9(r.param) << ',' << r.status << ',' << fmt9(r.objective) << ','
            << fmt9(r.pct_increase) << ',' << fmt9(r.reduction) << ',' << fmt9(r.policy_min)
            << ',' << fmt9(r.policy_mean) << ',' << fmt9(r.policy_max) << ','
            << fmt9(r.total_share) << ',' << r.iterations << ',' << fmt9(r.wall_s);
        if (append_epsilon) out << ',' << fmt9(r.epsilon);
        out << "\n";
    }
    return out.str();
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     bool append_epsilon) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << sweep_csv_string(rows, append_epsilon);
    if (!out) throw Error("write failed: " + path);
}

}  // namespace rmpa
