#ifndef RMPA_EXPERIMENTS_HPP
#define RMPA_EXPERIMENTS_HPP

#include <functional>
#include <string>
#include <vector>

#include "rmpa/robust.hpp"

namespace rmpa {

//! Outcome of sampling the uncertainty set against a fixed decision.
struct McReport {
    double max_violation = 0.0;   // largest constraint value seen (may be <= 0)
    double violation_rate = 0.0;  // fraction of draws with any value > tol
    Binding worst_u;              // the draw attaining max_violation
    int samples = 0;
};

//! Draw n members of the set and evaluate every robust constraint at
//! (x_star, u). Validates the robust guarantee independently of the
//! cutting-set path.
McReport monte_carlo_check(const UncertainProblem& problem, const UncertaintySet& set,
                           const Binding& x_star, int n, double tol, uint64_t seed);

//! Exhaustive max of g(x, u) over a grid of the set (dimension <= 3);
//! brute-force oracle for pessimize. Ellipsoid grids add the projection of
//! every outside point onto the sphere so boundary optima are covered.
std::pair<Binding, double> grid_pessimize(const Expr& constraint, const Binding& x,
                                          const UncertaintySet& set, int points_per_dim);

struct SweepRow {
    double param = 0.0;
    std::string status;
    double objective = 0.0;
    double pct_increase = 0.0;
    double epsilon = 0.0;  // omega sweeps only
    double reduction = 0.0;
    double policy_min = 0.0;
    double policy_mean = 0.0;
    double policy_max = 0.0;
    double total_share = 0.0;
    int iterations = 0;
    double wall_s = 0.0;
};

//! Cut bindings re-expressed in the scale of another set: normalized
//! coordinates are preserved, then clipped into the target set.
CutSet rescale_cuts(const CutSet& cuts, const UncertaintySet& from, const UncertaintySet& to);

//! One robust solve per uncertainty level with a box set at that level,
//! either on every parameter (family empty) or on a single symbol family
//! with the rest at nominal. Levels must be ascending and include 0; the
//! level-0 row is the nominal reference for pct_increase. Adjacent levels
//! share cuts and warm starts. Robust-infeasible rows are data, not errors.
std::vector<SweepRow> sweep_level(const UncertainProblem& problem,
                                  const std::vector<double>& levels, const std::string& family,
                                  const RobustOptions& options);

//! One robust solve per ellipsoid radius at a fixed level; each row carries
//! epsilon = chance_epsilon(omega). The omega = 0 solve is the reference.
std::vector<SweepRow> sweep_omega(const UncertainProblem& problem, double level,
                                  const std::vector<double>& omegas,
                                  const RobustOptions& options);

//! One robust solve per market-share limit; the problem is rebuilt per
//! value and each row's pct_increase is against that problem's own nominal
//! solve. Cuts carry over between rows (the uncertain structure is
//! unchanged); decision warm starts are not, so each row's policy levers
//! settle at their own minimum level.
std::vector<SweepRow> sweep_market_share(
    const std::function<UncertainProblem(double)>& rebuild, const std::vector<double>& mu_values,
    const SetConfig& set_config, const RobustOptions& options);

//! Fixed-format sweep table; append_epsilon adds the trailing epsilon
//! column omega sweeps carry.
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     bool append_epsilon);
std::string sweep_csv_string(const std::vector<SweepRow>& rows, bool append_epsilon);

}  // namespace rmpa

#endif
