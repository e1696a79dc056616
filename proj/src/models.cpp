#include "rmpa/models.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace rmpa {

namespace {

void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string(what) + " must be positive");
}

void check_basis(const std::string& v) {
    if (v != "initial" && v != "learned")
        throw Error("cost_basis must be one of: initial, learned (got '" + v + "')");
}

void check_direction(const std::string& v) {
    if (v != "min" && v != "cap")
        throw Error("mu_direction must be one of: min, cap (got '" + v + "')");
}

}  // namespace

void TechParams::validate() const {
    check_positive(c0, "c0");
    check_positive(a0, "a0");
    if (!(eta > 0.0) || eta > 1.0) throw Error("eta must be in (0, 1]");
    if (!(lr >= 0.0) || lr >= 1.0) throw Error("lr must be in [0, 1)");
    if (!(mu >= 0.0) || mu >= 1.0) throw Error("mu must be in [0, 1)");
    check_positive(effective_t_max(), "t_max");
    check_basis(cost_basis);
    check_direction(mu_direction);
}

void FuelParams::validate() const {
    check_positive(lhv_f1, "lhv_f1");
    check_positive(lhv_f2, "lhv_f2");
    check_positive(c_f1, "c_f1");
    check_positive(c0, "c0");
    check_positive(a0, "a0");
    if (!(eta_f2 > 0.0) || eta_f2 > 1.0) throw Error("eta_f2 must be in (0, 1]");
    if (!(lr >= 0.0) || lr >= 1.0) throw Error("lr must be in [0, 1)");
    if (!(mu >= 0.0) || mu >= 1.0) throw Error("mu must be in [0, 1)");
    check_positive(effective_g_max(), "g_max");
    check_basis(cost_basis);
    check_direction(mu_direction);
}

double learning_exponent(double lr) {
    if (!(lr >= 0.0) || lr >= 1.0) throw Error("learning rate must be in [0, 1)");
    return std::log(1.0 - lr) / std::log(2.0);
}

double cost_reduction_fraction(double ratio, double lp) {
    if (!(ratio >= 1.0)) throw Error("deployment ratio must be >= 1");
    if (!(lp <= 0.0)) throw Error("learning exponent must be <= 0");
    return 1.0 - std::pow(ratio, lp);
}

namespace {

UncertainSpec make_spec(std::string name, SymbolKind kind, int index, double nominal,
                        double hard_lo, bool lo_strict, double hard_hi, bool hi_strict) {
    UncertainSpec s;
    s.symbol = Symbol(std::move(name), kind, index);
    s.nominal = nominal;
    s.hard_lo = hard_lo;
    s.lo_strict = lo_strict;
    s.hard_hi = hard_hi;
    s.hi_strict = hi_strict;
    return s;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

UncertainProblem build_tech_problem(const std::vector<Plant>& plants, const TechParams& params) {
    if (plants.empty()) throw Error("build_tech_problem: empty plant list");
    params.validate();
    std::set<std::string> ids;
    for (const Plant& p : plants) {
        if (!(p.emissions > 0.0)) throw Error("plant " + p.id + ": emissions must be positive");
        if (!ids.insert(p.id).second) throw Error("duplicate plant id " + p.id);
    }

    const int n = static_cast<int>(plants.size());
    UncertainProblem prob;

    std::vector<Expr> t(n), m(n), E(n);
    for (int i = 0; i < n; ++i) {
        std::string tn = indexed_name("t", i), mn = indexed_name("m", i);
        t[i] = Expr::symbol(tn, SymbolKind::Decision, i);
        m[i] = Expr::symbol(mn, SymbolKind::Decision, i);
        prob.decision_names.push_back(tn);
        prob.decision_bounds.push_back({0.0, params.effective_t_max()});
        prob.policy_names.push_back(tn);
    }
    for (int i = 0; i < n; ++i) {
        prob.decision_names.push_back(indexed_name("m", i));
        prob.decision_bounds.push_back({0.0, 1.0});
        prob.share_names.push_back(indexed_name("m", i));
    }

    for (int i = 0; i < n; ++i) {
        std::string en = indexed_name("E", i);
        E[i] = Expr::symbol(en, SymbolKind::Uncertain, i);
        prob.uncertain.push_back(
            make_spec(en, SymbolKind::Uncertain, i, plants[i].emissions, 0.0, true, kInf, false));
    }
    Expr eta = Expr::symbol("eta", SymbolKind::Uncertain);
    Expr c0 = Expr::symbol("C0", SymbolKind::Uncertain);
    Expr a0 = Expr::symbol("A0", SymbolKind::Uncertain);
    Expr lr = Expr::symbol("Lr", SymbolKind::Uncertain);
    prob.uncertain.push_back(
        make_spec("eta", SymbolKind::Uncertain, -1, params.eta, 0.0, true, 1.0, false));
    prob.uncertain.push_back(
        make_spec("C0", SymbolKind::Uncertain, -1, params.c0, 0.0, true, kInf, false));
    prob.uncertain.push_back(
        make_spec("A0", SymbolKind::Uncertain, -1, params.a0, 0.0, true, kInf, false));
    prob.uncertain.push_back(
        make_spec("Lr", SymbolKind::Uncertain, -1, params.lr, 0.0, false, 1.0, true));

    Expr e_sum = Expr::sum(E);
    Expr m_sum = Expr::sum(m);
    Expr lp = log(1.0 - lr) / log(Expr::constant(2.0));
    Expr ratio = (a0 + eta * m_sum * e_sum) / a0;
    Expr learned_factor = pow(ratio, lp);
    Expr reduction = 1.0 - learned_factor;

    prob.objective_uncertain = c0 * reduction;
    prob.objective = prob.objective_uncertain;
    prob.reduction_expr = reduction;

    Expr viability_cost = params.cost_basis == "learned" ? c0 * learned_factor : c0;
    for (int i = 0; i < n; ++i)
        prob.constraints.push_back(
            {indexed_name("viability", i), E[i] * (viability_cost - eta * t[i])});
    for (int i = 0; i < n; ++i)
        prob.constraints.push_back({indexed_name("share", i), m[i] - E[i] / e_sum});
    Expr mu = Expr::constant(params.mu);
    prob.constraints.push_back({"reduction", params.mu_direction == "min" ? mu - reduction
                                                                          : reduction - mu});

    double tau_bound = 100.0 * std::max(1.0, params.c0);
    apply_epigraph(prob, -tau_bound, tau_bound);

    prob.reported = {2 * n, 2 * n + 2, n + 4};
    prob.validate();
    return prob;
}

UncertainProblem build_fuel_problem(const std::vector<Boiler>& boilers, const FuelParams& params) {
    if (boilers.empty()) throw Error("build_fuel_problem: empty boiler list");
    params.validate();
    std::set<std::string> ids;
    for (const Boiler& b : boilers) {
        if (!(b.demand > 0.0)) throw Error("boiler " + b.id + ": energy must be positive");
        if (!ids.insert(b.id).second) throw Error("duplicate boiler id " + b.id);
    }

    const int n = static_cast<int>(boilers.size());
    UncertainProblem prob;

    std::vector<Expr> g(n), phi(n), W(n);
    for (int j = 0; j < n; ++j) {
        std::string gn = indexed_name("G", j);
        g[j] = Expr::symbol(gn, SymbolKind::Decision, j);
        prob.decision_names.push_back(gn);
        prob.decision_bounds.push_back({0.0, params.effective_g_max()});
        prob.policy_names.push_back(gn);
    }
    for (int j = 0; j < n; ++j) {
        std::string pn = indexed_name("phi", j);
        phi[j] = Expr::symbol(pn, SymbolKind::Decision, j);
        prob.decision_names.push_back(pn);
        prob.decision_bounds.push_back({0.0, 1.0});
        prob.share_names.push_back(pn);
    }

    for (int j = 0; j < n; ++j) {
        std::string wn = indexed_name("W", j);
        W[j] = Expr::symbol(wn, SymbolKind::Uncertain, j);
        prob.uncertain.push_back(
            make_spec(wn, SymbolKind::Uncertain, j, boilers[j].demand, 0.0, true, kInf, false));
    }
    Expr lr = Expr::symbol("Lr", SymbolKind::Uncertain);
    Expr eta_f2 = Expr::symbol("eta_F2", SymbolKind::Uncertain);
    Expr c0 = Expr::symbol("C0", SymbolKind::Uncertain);
    Expr a0 = Expr::symbol("A0", SymbolKind::Uncertain);
    Expr lhv_f2 = Expr::symbol("LHV_F2", SymbolKind::Uncertain);
    Expr lhv_f1 = Expr::symbol("LHV_F1", SymbolKind::Uncertain);
    Expr c_f1 = Expr::symbol("C_F1", SymbolKind::Uncertain);
    prob.uncertain.push_back(
        make_spec("Lr", SymbolKind::Uncertain, -1, params.lr, 0.0, false, 1.0, true));
    prob.uncertain.push_back(
        make_spec("eta_F2", SymbolKind::Uncertain, -1, params.eta_f2, 0.0, true, 1.0, false));
    prob.uncertain.push_back(
        make_spec("C0", SymbolKind::Uncertain, -1, params.c0, 0.0, true, kInf, false));
    prob.uncertain.push_back(
        make_spec("A0", SymbolKind::Uncertain, -1, params.a0, 0.0, true, kInf, false));
    prob.uncertain.push_back(
        make_spec("LHV_F2", SymbolKind::Uncertain, -1, params.lhv_f2, 0.0, true, kInf, false));
    prob.uncertain.push_back(
        make_spec("LHV_F1", SymbolKind::Uncertain, -1, params.lhv_f1, 0.0, true, kInf, false));
    prob.uncertain.push_back(
        make_spec("C_F1", SymbolKind::Uncertain, -1, params.c_f1, 0.0, true, kInf, false));

    Expr w_sum = Expr::sum(W);
    Expr phi_sum = Expr::sum(phi);
    Expr lp = log(1.0 - lr) / log(Expr::constant(2.0));
    // deployment in tonnes: total heat switched / (1000 * LHV_F2)
    Expr ratio = (a0 + phi_sum * w_sum / (1000.0 * lhv_f2)) / a0;
    Expr learned_factor = pow(ratio, lp);
    Expr reduction = 1.0 - learned_factor;

    prob.objective_uncertain = c0 * reduction;
    prob.objective = prob.objective_uncertain;
    prob.reduction_expr = reduction;

    Expr hydrogen_cost = params.cost_basis == "learned" ? c0 * learned_factor : c0;
    Expr gas_heat_cost = 3.6 * c_f1 / lhv_f1;
    for (int j = 0; j < n; ++j)
        prob.constraints.push_back({indexed_name("parity", j),
                                    3.6 * hydrogen_cost * eta_f2 / lhv_f2 - g[j] - gas_heat_cost});
    for (int j = 0; j < n; ++j)
        prob.constraints.push_back({indexed_name("share", j), phi[j] - W[j] / w_sum});
    Expr mu = Expr::constant(params.mu);
    prob.constraints.push_back({"reduction", params.mu_direction == "min" ? mu - reduction
                                                                          : reduction - mu});

    double tau_bound = 100.0 * std::max(1.0, params.c0);
    apply_epigraph(prob, -tau_bound, tau_bound);

    prob.reported = {2 * n + 1, 2 * n + 2, n + 7};
    prob.validate();
    return prob;
}

UncertainProblem build_toy2d_problem() {
    UncertainProblem prob;
    Expr x1 = Expr::symbol("x1", SymbolKind::Decision);
    Expr x2 = Expr::symbol("x2", SymbolKind::Decision);
    Expr u1 = Expr::symbol("u1", SymbolKind::Uncertain);
    Expr u2 = Expr::symbol("u2", SymbolKind::Uncertain);
    prob.decision_names = {"x1", "x2"};
    prob.decision_bounds = {{-2.0, 2.0}, {-2.0, 2.0}};
    prob.uncertain.push_back(make_spec("u1", SymbolKind::Uncertain, -1, 1.0, -kInf, false, kInf, false));
    prob.uncertain.push_back(make_spec("u2", SymbolKind::Uncertain, -1, 1.0, -kInf, false, kInf, false));
    prob.objective = x1 + x2;
    prob.objective_uncertain = prob.objective;
    prob.constraints.push_back({"disk", u1 * x1 * x1 + u2 * x2 * x2 - 1.0});
    prob.reported = {2, 1, 2};
    prob.validate();
    return prob;
}

}  // namespace rmpa
