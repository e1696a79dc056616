#include "rmpa/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <limits>

#include "rmpa/compiled.hpp"
#include "rmpa/rng.hpp"

namespace rmpa {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void NlpInstance::validate() const {
    if (variables.size() != bounds.size())
        throw Error("nlp instance: variables and bounds must be parallel");
    std::map<std::string, std::pair<double, double>> table;
    for (size_t i = 0; i < variables.size(); ++i) {
        const auto& [lo, hi] = bounds[i];
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
            throw Error("nlp instance: bad bounds for " + variables[i]);
        if (!table.emplace(variables[i], bounds[i]).second)
            throw Error("nlp instance: duplicate variable " + variables[i]);
    }
    auto check = [&](const Expr& e, const char* where) {
        for (const Symbol& s : free_symbols(e))
            if (!table.count(s.name))
                throw Error(std::string("nlp instance: free symbol ") + s.name + " in " + where +
                            " is not a declared variable");
    };
    check(objective, "objective");
    for (const Expr& g : inequalities) check(g, "inequality");
    for (const Expr& h : equalities) check(h, "equality");
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::OptimalLocal: return "optimal-local";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::IterationLimit: return "iteration-limit";
    }
    return "?";
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_inf(const Vec& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

//! Augmented-Lagrangian merit on the compiled instance:
//!   L = f + sum_k [mu_k h_k + rho/2 h_k^2]
//!       + 1/(2 rho) sum_i [max(0, lambda_i + rho g_i)^2 - lambda_i^2]
class AugLag {
public:
    AugLag(const NlpInstance& inst)
        : n_(inst.variables.size()),
          objective_(inst.objective, inst.variables) {
        ineq_.reserve(inst.inequalities.size());
        for (const Expr& g : inst.inequalities) ineq_.emplace_back(g, inst.variables);
        eq_.reserve(inst.equalities.size());
        for (const Expr& h : inst.equalities) eq_.emplace_back(h, inst.variables);
        lambda_.assign(ineq_.size(), 0.0);
        mu_.assign(eq_.size(), 0.0);
        gvals_.assign(ineq_.size(), 0.0);
        hvals_.assign(eq_.size(), 0.0);
    }

    size_t dim() const { return n_; }
    size_t n_ineq() const { return ineq_.size(); }
    size_t n_eq() const { return eq_.size(); }
    double rho = 10.0;
    Vec lambda_, mu_;

    //! Raw objective; false on domain error / non-finite.
    bool objective_value(const Vec& x, double& f) {
        try {
            f = objective_.eval(x, scratch_);
        } catch (const DomainError&) {
            return false;
        }
        return std::isfinite(f);
    }

    //! Raw constraint values; false on domain error / non-finite.
    bool constraint_values(const Vec& x, Vec& g, Vec& h) {
        g.resize(ineq_.size());
        h.resize(eq_.size());
        try {
            for (size_t i = 0; i < ineq_.size(); ++i) g[i] = ineq_[i].eval(x, scratch_);
            for (size_t k = 0; k < eq_.size(); ++k) h[k] = eq_[k].eval(x, scratch_);
        } catch (const DomainError&) {
            return false;
        }
        for (double v : g)
            if (!std::isfinite(v)) return false;
        for (double v : h)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool value(const Vec& x, double& L) { return eval_impl(x, L, nullptr); }

    bool value_grad(const Vec& x, double& L, Vec& grad) {
        grad.assign(n_, 0.0);
        return eval_impl(x, L, &grad);
    }

private:
    bool eval_impl(const Vec& x, double& L, Vec* grad) {
        double total = 0.0;
        try {
            double f = objective_.eval(x, scratch_);
            if (!std::isfinite(f)) return false;
            if (grad) objective_.reverse_into(1.0, *grad, scratch_);
            total = f;
            for (size_t i = 0; i < ineq_.size(); ++i) {
                double g = ineq_[i].eval(x, scratch_);
                if (!std::isfinite(g)) return false;
                gvals_[i] = g;
                double t = lambda_[i] + rho * g;
                if (t > 0.0) {
                    total += (t * t - lambda_[i] * lambda_[i]) / (2.0 * rho);
                    if (grad) ineq_[i].reverse_into(t, *grad, scratch_);
                } else {
                    total -= lambda_[i] * lambda_[i] / (2.0 * rho);
                }
            }
            for (size_t k = 0; k < eq_.size(); ++k) {
                double h = eq_[k].eval(x, scratch_);
                if (!std::isfinite(h)) return false;
                hvals_[k] = h;
                total += mu_[k] * h + 0.5 * rho * h * h;
                if (grad) eq_[k].reverse_into(mu_[k] + rho * h, *grad, scratch_);
            }
        } catch (const DomainError&) {
            return false;
        }
        if (!std::isfinite(total)) return false;
        if (grad)
            for (double v : *grad)
                if (!std::isfinite(v)) return false;
        L = total;
        return true;
    }

    size_t n_;
    CompiledExpr objective_;
    std::vector<CompiledExpr> ineq_, eq_;
    Vec gvals_, hvals_;
    EvalScratch scratch_;
};

struct Box {
    const std::vector<std::pair<double, double>>* b;
    void project(Vec& x) const {
        for (size_t i = 0; i < x.size(); ++i)
            x[i] = std::clamp(x[i], (*b)[i].first, (*b)[i].second);
    }
    double lo(size_t i) const { return (*b)[i].first; }
    double hi(size_t i) const { return (*b)[i].second; }
};

struct LbfgsMemory {
    std::deque<std::pair<Vec, Vec>> pairs;  // (s, y)
    double gamma = 1.0;
    int capacity = 10;

    void clear() { pairs.clear(); gamma = 1.0; }

    void push(Vec s, Vec y) {
        double sy = dot(s, y);
        double ss = std::sqrt(dot(s, s)), yy = std::sqrt(dot(y, y));
        if (sy <= 1e-10 * ss * yy) return;  // keep the inverse Hessian positive
        gamma = sy / dot(y, y);
        pairs.emplace_back(std::move(s), std::move(y));
        while (static_cast<int>(pairs.size()) > capacity) pairs.pop_front();
    }

    //! d = -H * g via the two-loop recursion
    Vec direction(const Vec& g) const {
        Vec q = g;
        std::vector<double> alpha(pairs.size());
        for (size_t idx = pairs.size(); idx-- > 0;) {
            const auto& [s, y] = pairs[idx];
            double rho_i = 1.0 / dot(s, y);
            alpha[idx] = rho_i * dot(s, q);
            for (size_t j = 0; j < q.size(); ++j) q[j] -= alpha[idx] * y[j];
        }
        for (double& v : q) v *= gamma;
        for (size_t idx = 0; idx < pairs.size(); ++idx) {
            const auto& [s, y] = pairs[idx];
            double rho_i = 1.0 / dot(s, y);
            double beta = rho_i * dot(y, q);
            for (size_t j = 0; j < q.size(); ++j) q[j] += (alpha[idx] - beta) * s[j];
        }
        for (double& v : q) v = -v;
        return q;
    }
};

struct LinePoint {
    double alpha = 0.0;
    Vec x, grad;
    double L = kInf;
    double slope = 0.0;  // d(L)/d(alpha) along the ray
    bool finite = false;
};

class LineEval {
public:
    LineEval(AugLag& merit, const Box& box, const Vec& x, const Vec& d)
        : merit_(merit), box_(box), x0_(x), d_(d) {}

    LinePoint at(double alpha) {
        LinePoint p;
        p.alpha = alpha;
        p.x.resize(x0_.size());
        for (size_t i = 0; i < x0_.size(); ++i) p.x[i] = x0_[i] + alpha * d_[i];
        box_.project(p.x);
        p.finite = merit_.value_grad(p.x, p.L, p.grad);
        if (p.finite) p.slope = dot(p.grad, d_);
        return p;
    }

private:
    AugLag& merit_;
    const Box& box_;
    const Vec& x0_;
    const Vec& d_;
};

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;

//! Strong-Wolfe search on the segment [0, alpha_max] where the ray stays in
//! the box (Nocedal & Wright bracket + zoom). Returns an accepted point or
//! finite=false.
LinePoint wolfe_search(LineEval& line, double L0, double slope0, double alpha_init,
                       double alpha_max) {
    LinePoint fail;
    if (!(alpha_max > 0.0) || !(slope0 < 0.0)) return fail;

    auto zoom = [&](LinePoint lo, LinePoint hi) -> LinePoint {
        for (int j = 0; j < 30; ++j) {
            double a = std::min(lo.alpha, hi.alpha);
            double b = std::max(lo.alpha, hi.alpha);
            if (b - a < 1e-16 * std::max(1.0, b)) break;
            // quadratic interpolation from the lo end, safeguarded bisection
            double alpha = 0.5 * (a + b);
            if (hi.finite) {
                double denom = 2.0 * (hi.L - lo.L - lo.slope * (hi.alpha - lo.alpha));
                if (std::abs(denom) > 1e-300) {
                    double cand = lo.alpha - lo.slope * (hi.alpha - lo.alpha) *
                                                 (hi.alpha - lo.alpha) / denom;
                    if (cand > a + 0.1 * (b - a) && cand < b - 0.1 * (b - a)) alpha = cand;
                }
            }
            LinePoint p = line.at(alpha);
            if (!p.finite || p.L > L0 + kC1 * alpha * slope0 || p.L >= lo.L) {
                hi = std::move(p);
            } else {
                if (std::abs(p.slope) <= -kC2 * slope0) return p;
                if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(p);
            }
        }
        if (lo.finite && lo.alpha > 0.0 && lo.L < L0) return lo;
        return LinePoint{};
    };

    LinePoint prev;
    prev.alpha = 0.0;
    prev.L = L0;
    prev.slope = slope0;
    prev.finite = true;

    double alpha = std::min(alpha_init, alpha_max);
    for (int i = 0; i < 16; ++i) {
        LinePoint p = line.at(alpha);
        if (!p.finite || p.L > L0 + kC1 * alpha * slope0 || (i > 0 && p.L >= prev.L))
            return zoom(std::move(prev), std::move(p));
        if (std::abs(p.slope) <= -kC2 * slope0) return p;
        if (p.slope >= 0.0) return zoom(std::move(p), std::move(prev));
        if (alpha >= alpha_max * (1.0 - 1e-12)) return p;  // still descending at the bound
        prev = std::move(p);
        alpha = std::min(2.0 * alpha, alpha_max);
    }
    return prev.alpha > 0.0 ? prev : fail;
}

//! Backtracking Armijo on the projected path; steps may cross bounds.
LinePoint projected_armijo(LineEval& line, AugLag& merit, const Vec& x, const Vec& grad,
                           double L0, double alpha_init) {
    double alpha = alpha_init;
    for (int i = 0; i < 60; ++i) {
        LinePoint p = line.at(alpha);
        double step_norm = 0.0;
        double dd = 0.0;
        for (size_t j = 0; j < x.size(); ++j) {
            double dxj = p.x[j] - x[j];
            step_norm = std::max(step_norm, std::abs(dxj));
            dd += grad[j] * dxj;
        }
        if (step_norm == 0.0) return LinePoint{};  // pinned by the bounds
        if (p.finite && dd < 0.0 && p.L <= L0 + kC1 * dd) return p;
        alpha *= 0.5;
    }
    return LinePoint{};
}

struct InnerResult {
    double L = kInf;
    Vec grad;
    int iterations = 0;
    bool converged = false;
};

//! Projected L-BFGS descent on the current merit.
InnerResult minimize_inner(AugLag& merit, const Box& box, Vec& x, double tol, int max_iter,
                           const std::vector<std::string>& names) {
    InnerResult res;
    Vec grad;
    double L;
    if (!merit.value_grad(x, L, grad)) {
        Binding at;
        for (size_t i = 0; i < names.size(); ++i) at[names[i]] = x[i];
        throw NumericalError("non-finite objective or gradient at iterate", std::move(at));
    }

    LbfgsMemory mem;
    bool retried_steepest = false;

    for (int it = 0; it < max_iter; ++it) {
        double pg = 0.0;
        for (size_t i = 0; i < x.size(); ++i) {
            double stepped = std::clamp(x[i] - grad[i], box.lo(i), box.hi(i));
            pg = std::max(pg, std::abs(x[i] - stepped));
        }
        if (pg <= tol) {
            res.converged = true;
            break;
        }
        ++res.iterations;

        Vec d = mem.pairs.empty() ? Vec() : mem.direction(grad);
        if (d.empty()) {
            d = grad;
            for (double& v : d) v = -v;
        }
        double dd = dot(d, grad);
        if (!(dd < 0.0) || !std::isfinite(dd)) {
            mem.clear();
            d = grad;
            for (double& v : d) v = -v;
            dd = -dot(grad, grad);
            if (!(dd < 0.0)) break;
        }

        // first crossing of a bound along d
        double alpha_cross = kInf;
        for (size_t i = 0; i < x.size(); ++i) {
            if (d[i] > 0.0 && box.hi(i) > x[i])
                alpha_cross = std::min(alpha_cross, (box.hi(i) - x[i]) / d[i]);
            else if (d[i] < 0.0 && box.lo(i) < x[i])
                alpha_cross = std::min(alpha_cross, (box.lo(i) - x[i]) / d[i]);
            else if (d[i] != 0.0)
                alpha_cross = 0.0;  // already at the bound this component pushes on
        }

        double alpha0 = mem.pairs.empty() ? std::min(1.0, 1.0 / std::max(1.0, norm_inf(grad)))
                                          : 1.0;
        LineEval line(merit, box, x, d);
        LinePoint accepted;
        if (alpha_cross > 0.0)
            accepted = wolfe_search(line, L, dd, std::min(alpha0, alpha_cross), alpha_cross);
        if (!accepted.finite)
            accepted = projected_armijo(line, merit, x, grad, L, alpha0);

        if (!accepted.finite) {
            if (!mem.pairs.empty() && !retried_steepest) {
                mem.clear();
                retried_steepest = true;
                continue;
            }
            break;  // stalled
        }
        retried_steepest = false;

        Vec s(x.size()), y(x.size());
        for (size_t i = 0; i < x.size(); ++i) {
            s[i] = accepted.x[i] - x[i];
            y[i] = accepted.grad[i] - grad[i];
        }
        mem.push(std::move(s), std::move(y));
        x = accepted.x;
        L = accepted.L;
        grad = std::move(accepted.grad);
    }
    res.L = L;
    res.grad = std::move(grad);
    return res;
}

}  // namespace

LocalSolution solve_local(const NlpInstance& instance, const Binding& x0,
                          const NlpOptions& options) {
    instance.validate();
    const size_t n = instance.variables.size();
    Box box{&instance.bounds};

    Vec x(n);
    for (size_t i = 0; i < n; ++i) {
        auto it = x0.find(instance.variables[i]);
        x[i] = it != x0.end() ? it->second
                              : 0.5 * (instance.bounds[i].first + instance.bounds[i].second);
    }
    box.project(x);

    AugLag merit(instance);
    merit.rho = options.initial_penalty;

    Vec g, h;
    double violation = kInf;
    bool optimal = false;
    int total_inner = 0;
    const bool constrained = merit.n_ineq() + merit.n_eq() > 0;
    int stagnant = 0;

    int outer = 0;
    for (; outer < std::max(1, options.max_outer); ++outer) {
        double inner_tol =
            constrained ? std::max(options.stat_tol, 1e-3 * std::pow(0.1, outer))
                        : options.stat_tol;
        InnerResult inner = minimize_inner(merit, box, x, inner_tol, options.max_inner,
                                           instance.variables);
        total_inner += inner.iterations;

        double viol = 0.0;
        if (constrained) {
            if (!merit.constraint_values(x, g, h)) {
                Binding at;
                for (size_t i = 0; i < n; ++i) at[instance.variables[i]] = x[i];
                throw NumericalError("non-finite constraint value at iterate", std::move(at));
            }
            for (double v : g) viol = std::max(viol, v);
            for (double v : h) viol = std::max(viol, std::abs(v));
        }

        if (viol <= options.feas_tol && inner.converged && inner_tol <= options.stat_tol) {
            violation = viol;
            optimal = true;
            break;
        }
        if (!constrained && !inner.converged && total_inner >= options.max_inner) {
            violation = 0.0;
            break;
        }

        if (constrained) {
            for (size_t i = 0; i < merit.n_ineq(); ++i)
                merit.lambda_[i] = std::max(0.0, merit.lambda_[i] + merit.rho * g[i]);
            for (size_t k = 0; k < merit.n_eq(); ++k) merit.mu_[k] += merit.rho * h[k];
            if (viol > 0.25 * violation)
                merit.rho = std::min(merit.rho * options.penalty_growth, options.max_penalty);
            if (merit.rho >= options.max_penalty && viol > 0.99 * violation) {
                if (++stagnant >= 2) {
                    violation = std::min(violation, viol);
                    break;
                }
            } else {
                stagnant = 0;
            }
        }
        violation = std::min(violation, viol);
        if (!constrained) break;
    }

    LocalSolution sol;
    sol.x_vec = x;
    for (size_t i = 0; i < n; ++i) sol.x[instance.variables[i]] = x[i];
    sol.iterations = total_inner;
    if (!merit.objective_value(x, sol.objective_value)) {
        Binding at = sol.x;
        throw NumericalError("non-finite objective at final iterate", std::move(at));
    }
    if (constrained) {
        double viol = 0.0;
        if (merit.constraint_values(x, g, h)) {
            for (double v : g) viol = std::max(viol, v);
            for (double v : h) viol = std::max(viol, std::abs(v));
        } else {
            viol = kInf;
        }
        sol.max_violation = viol;
    }
    if (optimal && sol.max_violation <= options.feas_tol)
        sol.status = SolveStatus::OptimalLocal;
    else if (sol.max_violation > options.infeasible_tol)
        sol.status = SolveStatus::Infeasible;
    else
        sol.status = SolveStatus::IterationLimit;
    return sol;
}

LocalSolution solve_multistart(const NlpInstance& instance, const Binding& x0, int n_starts,
                               uint64_t seed, const NlpOptions& options) {
    if (n_starts < 1) throw Error("solve_multistart: n_starts must be >= 1");
    instance.validate();

    std::vector<Binding> starts;
    starts.reserve(n_starts);
    starts.push_back(x0);
    Rng rng(seed);
    for (int k = 1; k < n_starts; ++k) {
        Binding b;
        for (size_t i = 0; i < instance.variables.size(); ++i)
            b[instance.variables[i]] =
                rng.uniform(instance.bounds[i].first, instance.bounds[i].second);
        starts.push_back(std::move(b));
    }

    std::optional<LocalSolution> best;
    std::exception_ptr first_error;
    int failures = 0;
    for (int k = 0; k < n_starts; ++k) {
        LocalSolution cand;
        try {
            cand = solve_local(instance, starts[k], options);
        } catch (const NumericalError&) {
            if (!first_error) first_error = std::current_exception();
            ++failures;
            continue;
        }
        cand.start_index = k;
        if (!best) {
            best = std::move(cand);
            continue;
        }
        bool cand_feas = cand.max_violation <= options.infeasible_tol;
        bool best_feas = best->max_violation <= options.infeasible_tol;
        bool take = false;
        if (cand_feas != best_feas) {
            take = cand_feas;
        } else {
            double window = options.tie_tol * std::max(1.0, std::abs(best->objective_value));
            take = cand.objective_value < best->objective_value - window;
        }
        if (take) best = std::move(cand);
    }
    if (!best) {
        if (first_error) std::rethrow_exception(first_error);
        throw Error("solve_multistart: no start produced a solution");
    }
    return *best;
}

}  // namespace rmpa
