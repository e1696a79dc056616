#include "rmpa/robust.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "rmpa/parallel.hpp"

namespace rmpa {

namespace {

constexpr uint64_t kUpperTag = 0xFFFFFFFFull;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Binding UncertainProblem::nominal_binding() const {
    Binding b;
    for (const auto& s : uncertain) b[s.symbol.name] = s.nominal;
    return b;
}

const UncertainSpec* UncertainProblem::find_spec(const std::string& name) const {
    for (const auto& s : uncertain)
        if (s.symbol.name == name) return &s;
    return nullptr;
}

void UncertainProblem::validate() const {
    if (decision_names.size() != decision_bounds.size())
        throw Error("uncertain problem: decision names and bounds must be parallel");
    std::set<std::string> decisions(decision_names.begin(), decision_names.end());
    if (decisions.size() != decision_names.size())
        throw Error("uncertain problem: duplicate decision names");
    std::set<std::string> uncertain_names;
    for (const auto& s : uncertain)
        if (!uncertain_names.insert(s.symbol.name).second)
            throw Error("uncertain problem: duplicate uncertain symbol " + s.symbol.name);

    auto check = [&](const Expr& e, const std::string& where, bool allow_uncertain) {
        for (const Symbol& s : free_symbols(e)) {
            if (decisions.count(s.name)) continue;
            if (uncertain_names.count(s.name)) {
                if (!allow_uncertain)
                    throw Error("uncertain problem: objective depends on uncertain symbol " +
                                s.name + "; apply_epigraph first");
                continue;
            }
            throw Error("uncertain problem: symbol " + s.name + " in " + where +
                        " has neither bounds nor an uncertain spec");
        }
    };
    check(objective, "objective", false);
    for (const auto& c : constraints) check(c.expr, "constraint " + c.name, true);
}

EpigraphInfo apply_epigraph(UncertainProblem& problem, double tau_lo, double tau_hi) {
    EpigraphInfo info;
    bool uncertain_objective = false;
    for (const Symbol& s : free_symbols(problem.objective))
        if (problem.find_spec(s.name)) uncertain_objective = true;
    if (!uncertain_objective) return info;

    std::string tau = "tau";
    while (std::count(problem.decision_names.begin(), problem.decision_names.end(), tau))
        tau += "_";
    Expr tau_sym = Expr::symbol(tau, SymbolKind::Decision);
    problem.constraints.push_back({"objective_worst_case", problem.objective - tau_sym});
    problem.decision_names.push_back(tau);
    problem.decision_bounds.push_back({tau_lo, tau_hi});
    problem.objective = tau_sym;
    problem.tau_name = tau;
    problem.epigraph_index = static_cast<int>(problem.constraints.size()) - 1;
    info.applied = true;
    info.tau_name = tau;
    return info;
}

const char* to_string(RobustStatus s) {
    switch (s) {
        case RobustStatus::RobustOptimal: return "robust-optimal";
        case RobustStatus::RobustInfeasible: return "robust-infeasible";
        case RobustStatus::IterationLimit: return "iteration-limit";
    }
    return "?";
}

Binding default_start(const UncertainProblem& problem) {
    Binding b;
    for (size_t i = 0; i < problem.decision_names.size(); ++i)
        b[problem.decision_names[i]] = problem.decision_bounds[i].first;
    return b;
}

PessimizeResult pessimize(const Expr& constraint, const Binding& x_star,
                          const UncertaintySet& set, int n_starts, uint64_t seed,
                          const NlpOptions& options) {
    Expr g_u = substitute(constraint, x_star);

    // coordinates of the set this constraint actually touches
    std::set<std::string> free;
    for (const Symbol& s : free_symbols(g_u)) free.insert(s.name);
    std::vector<size_t> active;
    for (size_t k = 0; k < set.specs().size(); ++k) {
        const auto& spec = set.specs()[k];
        if (free.count(spec.symbol.name) && spec.halfwidth() > 0.0 &&
            (set.kind() == UncertaintySet::Kind::Box || set.omega() > 0.0))
            active.push_back(k);
    }

    PessimizeResult out;
    out.u = set.nominal_binding();
    if (active.empty()) {
        out.violation = evaluate(g_u, out.u);
        return out;
    }

    // change of variables u_k = nominal_k + halfwidth_k * z_k
    std::map<std::string, Expr> to_z;
    std::vector<std::string> z_names;
    NlpInstance inst;
    for (size_t j = 0; j < active.size(); ++j) {
        const auto& spec = set.specs()[active[j]];
        std::string zn = indexed_name("__z", static_cast<int>(j));
        Expr z = Expr::symbol(zn, SymbolKind::Decision, static_cast<int>(j));
        to_z.emplace(spec.symbol.name, Expr::constant(spec.nominal) + spec.halfwidth() * z);
        z_names.push_back(zn);
    }
    Expr g_z = substitute_exprs(g_u, to_z);

    inst.variables = z_names;
    inst.objective = -g_z;
    double z_bound = set.kind() == UncertaintySet::Kind::Box ? 1.0 : set.omega();
    inst.bounds.assign(z_names.size(), {-z_bound, z_bound});
    if (set.kind() == UncertaintySet::Kind::Ellipsoid) {
        std::vector<Expr> squares;
        squares.reserve(z_names.size());
        for (size_t j = 0; j < z_names.size(); ++j) {
            Expr z = Expr::symbol(z_names[j], SymbolKind::Decision, static_cast<int>(j));
            squares.push_back(z * z);
        }
        inst.inequalities.push_back(Expr::sum(std::move(squares)) -
                                    Expr::constant(set.omega() * set.omega()));
    }

    Binding z0;
    for (const auto& zn : z_names) z0[zn] = 0.0;
    LocalSolution sol = solve_multistart(inst, z0, n_starts, seed, options);

    std::vector<double> z = sol.x_vec;
    if (set.kind() == UncertaintySet::Kind::Ellipsoid) {
        double nrm2 = 0.0;
        for (double v : z) nrm2 += v * v;
        double nrm = std::sqrt(nrm2);
        if (nrm > set.omega() && nrm > 0.0)
            for (double& v : z) v *= set.omega() / nrm;
    }
    for (size_t j = 0; j < active.size(); ++j) {
        const auto& spec = set.specs()[active[j]];
        out.u[spec.symbol.name] = spec.nominal + spec.halfwidth() * z[j];
    }
    out.violation = evaluate(g_u, out.u);
    return out;
}

namespace {

bool same_binding(const Binding& a, const Binding& b) {
    if (a.size() != b.size()) return false;
    auto ia = a.begin();
    for (auto ib = b.begin(); ib != b.end(); ++ia, ++ib)
        if (ia->first != ib->first || ia->second != ib->second) return false;
    return true;
}

NlpInstance upper_instance(const UncertainProblem& problem, const CutSet& cuts) {
    NlpInstance inst;
    inst.variables = problem.decision_names;
    inst.bounds = problem.decision_bounds;
    inst.objective = problem.objective;
    for (size_t i = 0; i < problem.constraints.size(); ++i)
        for (const Cut& cut : cuts[i])
            inst.inequalities.push_back(substitute(problem.constraints[i].expr, cut.u));
    return inst;
}

}  // namespace

RobustResult solve_robust(const UncertainProblem& problem, const UncertaintySet& set,
                          const RobustOptions& options) {
    problem.validate();
    if (!(options.tol > 0.0)) throw Error("solve_robust: tol must be > 0");
    if (options.max_iter < 1) throw Error("solve_robust: max_iter must be >= 1");
    for (const auto& c : problem.constraints)
        for (const Symbol& s : free_symbols(c.expr))
            if (problem.find_spec(s.name)) {
                bool in_set = false;
                for (const auto& spec : set.specs())
                    if (spec.symbol.name == s.name) in_set = true;
                if (!in_set)
                    throw Error("solve_robust: uncertain symbol " + s.name +
                                " missing from the uncertainty set");
            }

    const size_t m = problem.constraints.size();
    const Binding nominal = set.dimension() > 0 ? set.nominal_binding()
                                                : problem.nominal_binding();

    RobustResult result;
    result.cuts.assign(m, {});
    for (size_t i = 0; i < m; ++i) result.cuts[i].push_back({nominal, 0.0, -1});
    if (options.warm_cuts) {
        for (size_t i = 0; i < std::min(m, options.warm_cuts->size()); ++i)
            for (const Cut& c : (*options.warm_cuts)[i])
                if (c.iteration >= 0) result.cuts[i].push_back(c);
    }

    Binding x_prev = options.warm_x0 ? *options.warm_x0 : default_start(problem);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        auto t_upper = std::chrono::steady_clock::now();
        NlpInstance inst = upper_instance(problem, result.cuts);
        LocalSolution sol = solve_multistart(inst, x_prev, options.upper_starts,
                                             mix_seed(options.seed, iter, kUpperTag),
                                             options.nlp);
        double upper_s = seconds_since(t_upper);
        result.upper_wall_s += upper_s;
        result.iterations = iter + 1;

        if (sol.status == SolveStatus::Infeasible) {
            result.x = sol.x;
            result.objective_value = sol.objective_value;
            result.status = RobustStatus::RobustInfeasible;
            result.upper_max_violation = sol.max_violation;
            IterationRecord rec;
            rec.iteration = iter;
            rec.objective = sol.objective_value;
            rec.upper_wall_s = upper_s;
            result.log.push_back(std::move(rec));
            return result;
        }
        x_prev = sol.x;

        auto t_pess = std::chrono::steady_clock::now();
        std::vector<PessimizeResult> worst(m);
        parallel_for(m, options.workers, [&](size_t i) {
            worst[i] = pessimize(problem.constraints[i].expr, sol.x, set, options.pess_starts,
                                 mix_seed(options.seed, iter, i), options.nlp);
        });
        double pess_s = seconds_since(t_pess);
        result.pess_wall_s += pess_s;

        IterationRecord rec;
        rec.iteration = iter;
        rec.objective = sol.objective_value;
        rec.violations.resize(m);
        rec.upper_wall_s = upper_s;
        rec.pess_wall_s = pess_s;
        for (size_t i = 0; i < m; ++i) {
            rec.violations[i] = worst[i].violation;
            rec.max_violation = std::max(rec.max_violation, worst[i].violation);
            if (worst[i].violation > options.tol) {
                bool dup = false;
                for (const Cut& c : result.cuts[i])
                    if (same_binding(c.u, worst[i].u)) dup = true;
                if (!dup)
                    result.cuts[i].push_back({worst[i].u, worst[i].violation, iter});
                ++rec.cuts_added;
            }
        }
        int added = rec.cuts_added;
        result.log.push_back(std::move(rec));

        if (added == 0) {
            result.x = sol.x;
            result.objective_value = sol.objective_value;
            result.status = RobustStatus::RobustOptimal;
            return result;
        }
        result.x = sol.x;
        result.objective_value = sol.objective_value;
    }
    result.status = RobustStatus::IterationLimit;
    return result;
}

LocalSolution solve_nominal(const UncertainProblem& problem, int n_starts, uint64_t seed,
                            const NlpOptions& options) {
    problem.validate();
    Binding nominal = problem.nominal_binding();

    NlpInstance inst;
    for (size_t i = 0; i < problem.decision_names.size(); ++i) {
        if (problem.decision_names[i] == problem.tau_name) continue;
        inst.variables.push_back(problem.decision_names[i]);
        inst.bounds.push_back(problem.decision_bounds[i]);
    }
    inst.objective = substitute(problem.objective_uncertain, nominal);
    for (size_t i = 0; i < problem.constraints.size(); ++i) {
        if (static_cast<int>(i) == problem.epigraph_index) continue;
        inst.inequalities.push_back(substitute(problem.constraints[i].expr, nominal));
    }

    Binding x0;
    for (size_t i = 0; i < inst.variables.size(); ++i) x0[inst.variables[i]] = inst.bounds[i].first;
    return solve_multistart(inst, x0, n_starts, seed, options);
}

}  // namespace rmpa
