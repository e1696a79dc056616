#ifndef RMPA_ROBUST_HPP
#define RMPA_ROBUST_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmpa/expr.hpp"
#include "rmpa/nlp.hpp"
#include "rmpa/uncertainty.hpp"

namespace rmpa {

struct RobustConstraint {
    std::string name;
    Expr expr;  // g(x, u) <= 0 for all u in the set
};

//! Bookkeeping sizes as reported to the user (see model builders for the
//! counting convention).
struct ReportedSizes {
    int variables = 0;
    int constraints = 0;
    int uncertain = 0;
};

//! Optimization problem whose constraints must hold for every member of an
//! uncertainty set. The objective is deterministic; uncertain objectives
//! are moved into a constraint by apply_epigraph.
struct UncertainProblem {
    Expr objective;                // deterministic (tau after epigraph)
    Expr objective_uncertain;      // original objective, used by nominal solves
    std::vector<RobustConstraint> constraints;
    std::vector<std::string> decision_names;
    std::vector<std::pair<double, double>> decision_bounds;
    std::vector<UncertainSpec> uncertain;
    ReportedSizes reported;
    std::string tau_name;          // empty if no epigraph variable
    int epigraph_index = -1;       // constraint index of f - tau <= 0, or -1

    // policy metadata for reporting: which decisions are the policy levers
    // (taxes/incentives) and which are market shares, plus the model's
    // cost-reduction fraction as an expression (when it has one)
    std::vector<std::string> policy_names;
    std::vector<std::string> share_names;
    std::optional<Expr> reduction_expr;

    Binding nominal_binding() const;
    const UncertainSpec* find_spec(const std::string& name) const;

    //! Every free symbol must be a bounded decision or a specced uncertain
    //! parameter, and the objective must be deterministic.
    void validate() const;
};

struct EpigraphInfo {
    bool applied = false;
    std::string tau_name;
};

//! If the objective depends on any uncertain symbol, introduce decision tau
//! with the given bounds, set objective := tau and append the robust
//! constraint f(x,u) - tau <= 0. Deterministic objectives pass through.
EpigraphInfo apply_epigraph(UncertainProblem& problem, double tau_lo = -1e6,
                            double tau_hi = 1e6);

struct Cut {
    Binding u;
    double violation_at_add = 0.0;
    int iteration = -1;  // -1 for the nominal seed cut
};

//! Per-constraint accumulated worst-case parameter points.
using CutSet = std::vector<std::vector<Cut>>;

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;
    std::vector<double> violations;  // worst found per constraint this pass
    double max_violation = 0.0;
    int cuts_added = 0;
    double upper_wall_s = 0.0;
    double pess_wall_s = 0.0;
};

enum class RobustStatus { RobustOptimal, RobustInfeasible, IterationLimit };

const char* to_string(RobustStatus s);

struct RobustResult {
    Binding x;
    double objective_value = 0.0;
    RobustStatus status = RobustStatus::IterationLimit;
    CutSet cuts;
    std::vector<IterationRecord> log;
    int iterations = 0;
    double upper_wall_s = 0.0;
    double pess_wall_s = 0.0;
    double upper_max_violation = 0.0;  // failing iterate's violation when infeasible
};

struct RobustOptions {
    double tol = 1e-4;
    int max_iter = 100;
    int workers = 1;
    uint64_t seed = 0;
    int pess_starts = 16;
    int upper_starts = 8;
    NlpOptions nlp;
    std::optional<Binding> warm_x0;
    const CutSet* warm_cuts = nullptr;  // appended after the nominal seed cut
};

struct PessimizeResult {
    Binding u;
    double violation = 0.0;
};

//! Maximize g(x*, u) over the set in normalized coordinates via multistart
//! (start 0 is the nominal point). Coordinates the constraint does not
//! touch stay at nominal; for the ellipsoid this projection is exact.
PessimizeResult pessimize(const Expr& constraint, const Binding& x_star,
                          const UncertaintySet& set, int n_starts, uint64_t seed,
                          const NlpOptions& options = {});

//! Blankenship-Faulk cutting-set loop: solve the upper level over the
//! accumulated cuts, pessimize every constraint (in parallel), add each
//! worst case that violates by more than tol, stop when none does.
RobustResult solve_robust(const UncertainProblem& problem, const UncertaintySet& set,
                          const RobustOptions& options = {});

//! Direct solve of the problem at nominal parameter values (no epigraph
//! variable, no cut machinery); the degenerate-set reference point.
LocalSolution solve_nominal(const UncertainProblem& problem, int n_starts, uint64_t seed,
                            const NlpOptions& options = {});

//! Lower-bound corner of the decision box: the default cold start (zero
//! policy for the adoption models).
Binding default_start(const UncertainProblem& problem);

}  // namespace rmpa

#endif
