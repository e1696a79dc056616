#ifndef RMPA_MODELS_HPP
#define RMPA_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rmpa/robust.hpp"

namespace rmpa {

struct Plant {
    std::string id;
    std::string name;
    double latitude = 0.0;
    double longitude = 0.0;
    double emissions = 0.0;  // t CO2 / yr
};

//! Scalars of the technology adoption model. Values are desk-scale
//! defaults; every field has a config key (model.*).
struct TechParams {
    double eta = 0.63;    // t captured per t emitted
    double c0 = 88.0;     // $/t, initial cost per unit emissions reduced
    double a0 = 1e5;      // t/yr, initial emissions reduction
    double lr = 0.07;     // learning rate
    double mu = 0.2;      // minimum cost-reduction fraction required
    double t_max = 0.0;   // carbon tax upper bound; <= 0 picks 10 * c0 / eta
    std::string cost_basis = "learned";  // viability uses learned cost; "initial" restores C0
    std::string mu_direction = "min";    // reduction >= mu; "cap" restores reduction <= mu

    double effective_t_max() const { return t_max > 0.0 ? t_max : 10.0 * c0 / eta; }
    void validate() const;
};

struct Boiler {
    std::string id;
    std::string site;
    double demand = 0.0;  // MJ/yr thermal from the initial fuel
};

struct FuelParams {
    double lhv_f1 = 42.0;   // MJ/kg initial fuel
    double lhv_f2 = 120.0;  // MJ/kg transition fuel
    double c_f1 = 292.0;    // GBP/tonne initial fuel price
    double c0 = 1800.0;     // GBP/tonne transition fuel price
    double eta_f2 = 0.9;    // transition fuel boiler efficiency
    double a0 = 1e4;        // t/yr initial transition-fuel deployment
    double lr = 0.07;
    double mu = 0.05;
    double g_max = 0.0;     // incentive upper bound; <= 0 picks 10x the parity threshold
    std::string cost_basis = "initial";
    std::string mu_direction = "min";

    //! Break-even incentive at nominal prices, GBP/MWh.
    double parity_threshold() const {
        return 3.6 * c0 * eta_f2 / lhv_f2 - 3.6 * c_f1 / lhv_f1;
    }
    double effective_g_max() const {
        return g_max > 0.0 ? g_max : 10.0 * std::max(parity_threshold(), 0.1);
    }
    void validate() const;
};

//! L_P = ln(1 - lr) / ln 2, the learning-curve exponent (<= 0).
double learning_exponent(double lr);

//! 1 - ratio^lp: fractional cost reduction after deployment grows by
//! `ratio` relative to the initial deployment. ratio = 2 gives exactly the
//! learning rate.
double cost_reduction_fraction(double ratio, double lp);

//! Robust technology adoption model over `plants`. Decision symbols
//! t[i] in [0, t_max] and m[i] in [0, 1]; uncertain symbols E[i], eta, C0,
//! A0, Lr. Constraints: per-plant economic viability, per-plant market
//! share cap, and the minimum cost-reduction requirement; the uncertain
//! objective is moved behind an epigraph variable.
//!
//! Reported sizes follow the published-totals convention: the
//! learning-exponent definition counts as a constraint, the epigraph
//! variable and constraint do not, and variables count the policy pair per
//! plant (2n variables, 2n + 2 constraints, n + 4 uncertain parameters).
UncertainProblem build_tech_problem(const std::vector<Plant>& plants, const TechParams& params);

//! Robust fuel adoption model over `boilers`. Decision symbols G[j] in
//! [0, g_max] and phi[j] in [0, 1]; uncertain symbols W[j], Lr, eta_F2, C0,
//! A0, LHV_F2, LHV_F1, C_F1. Constraints: per-boiler cost parity, share
//! cap, minimum cost reduction; epigraph applied.
//!
//! Reported sizes count the learning-exponent auxiliary as a variable here
//! (2n + 1 variables, 2n + 2 constraints, n + 7 uncertain parameters),
//! matching the published totals for this model.
UncertainProblem build_fuel_problem(const std::vector<Boiler>& boilers, const FuelParams& params);

//! 2-variable fixture: min x1 + x2 on [-2,2]^2 subject to
//! u1 x1^2 + u2 x2^2 - 1 <= 0, nominal u = (1,1). Known robust optimum
//! -2/sqrt(3) at box level 0.5.
UncertainProblem build_toy2d_problem();

}  // namespace rmpa

#endif
