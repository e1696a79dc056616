#ifndef RMPA_NLP_HPP
#define RMPA_NLP_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rmpa/expr.hpp"

namespace rmpa {

//! Smooth NLP over bounded decision variables:
//! min f(x)  s.t.  g_i(x) <= 0,  h_k(x) = 0,  lo <= x <= hi.
struct NlpInstance {
    std::vector<std::string> variables;                // fixed order
    std::vector<std::pair<double, double>> bounds;     // parallel to variables
    Expr objective;
    std::vector<Expr> inequalities;
    std::vector<Expr> equalities;

    //! Throws unless every free symbol is a listed variable and every bound
    //! pair is finite with lower <= upper.
    void validate() const;
};

enum class SolveStatus { OptimalLocal, Infeasible, IterationLimit };

const char* to_string(SolveStatus s);

struct LocalSolution {
    Binding x;
    std::vector<double> x_vec;      // instance variable order
    double objective_value = 0.0;
    double max_violation = 0.0;     // largest positive constraint value
    SolveStatus status = SolveStatus::IterationLimit;
    int iterations = 0;             // inner iterations across the penalty loop
    int start_index = 0;            // which multistart point produced this
};

struct NlpOptions {
    double feas_tol = 1e-8;
    double stat_tol = 1e-6;
    int max_outer = 50;
    int max_inner = 500;
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    double max_penalty = 1e12;
    int lbfgs_memory = 10;
    //! violation above which a stalled run is reported infeasible
    double infeasible_tol = 1e-6;
    //! objectives within this relative window count as ties (resolved by
    //! start index) so multistart winners are not picked by solver noise
    double tie_tol = 1e-7;
};

//! Non-finite objective or gradient at an iterate the solver could not
//! recover from; carries the offending point.
struct NumericalError : Error {
    NumericalError(const std::string& msg, Binding iterate)
        : Error(msg), iterate(std::move(iterate)) {}
    Binding iterate;
};

//! Augmented-Lagrangian outer loop with a projected limited-memory
//! quasi-Newton inner minimization. x0 is projected onto the bounds.
LocalSolution solve_local(const NlpInstance& instance, const Binding& x0,
                          const NlpOptions& options = {});

//! solve_local from x0 (start 0) plus n_starts-1 seeded uniform points in
//! the bounds. Best by: feasible before infeasible, then lowest objective,
//! ties broken by lowest start index. Deterministic in (instance, x0,
//! n_starts, seed).
LocalSolution solve_multistart(const NlpInstance& instance, const Binding& x0, int n_starts,
                               uint64_t seed, const NlpOptions& options = {});

}  // namespace rmpa

#endif
