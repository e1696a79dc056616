#include <doctest.h>

#include <cmath>

#include "rmpa/compiled.hpp"
#include "rmpa/nlp.hpp"
#include "test_util.hpp"

using namespace rmpa;

namespace {

Expr sym(const char* n) { return Expr::symbol(n); }

NlpInstance quadratic_1d() {
    NlpInstance inst;
    inst.variables = {"x"};
    inst.bounds = {{-5.0, 5.0}};
    inst.objective = pow(sym("x") - 1.0, 2.0);
    return inst;
}

NlpInstance circle_2d() {
    // min x1 + x2  s.t.  x1^2 + x2^2 <= 1,  x in [-2,2]^2
    NlpInstance inst;
    inst.variables = {"x1", "x2"};
    inst.bounds = {{-2.0, 2.0}, {-2.0, 2.0}};
    inst.objective = sym("x1") + sym("x2");
    inst.inequalities = {sym("x1") * sym("x1") + sym("x2") * sym("x2") - 1.0};
    return inst;
}

NlpInstance six_hump_camel() {
    NlpInstance inst;
    inst.variables = {"x", "y"};
    inst.bounds = {{-2.0, 2.0}, {-1.0, 1.0}};
    Expr x = sym("x"), y = sym("y");
    inst.objective = (4.0 - 2.1 * pow(x, 2.0) + pow(x, 4.0) / 3.0) * pow(x, 2.0) + x * y +
                     (-4.0 + 4.0 * pow(y, 2.0)) * pow(y, 2.0);
    return inst;
}

}  // namespace

TEST_CASE("unconstrained quadratic from a poor start") {
    LocalSolution sol = solve_local(quadratic_1d(), {{"x", -3.0}});
    CHECK(sol.status == SolveStatus::OptimalLocal);
    CHECK(sol.x.at("x") == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(sol.objective_value == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("analytic KKT point on the disk") {
    LocalSolution sol = solve_local(circle_2d(), {{"x1", 0.5}, {"x2", 0.5}});
    CHECK(sol.status == SolveStatus::OptimalLocal);
    double r = -1.0 / std::sqrt(2.0);
    CHECK(sol.x.at("x1") == doctest::Approx(r).epsilon(1e-6));
    CHECK(sol.x.at("x2") == doctest::Approx(r).epsilon(1e-6));
    CHECK(sol.objective_value == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-6));
    CHECK(sol.max_violation <= 1e-8);
}

TEST_CASE("active linear constraint") {
    NlpInstance inst;
    inst.variables = {"x"};
    inst.bounds = {{0.0, 10.0}};
    inst.objective = -sym("x");
    inst.inequalities = {sym("x") - 2.0};
    LocalSolution sol = solve_local(inst, {{"x", 0.0}});
    CHECK(sol.status == SolveStatus::OptimalLocal);
    CHECK(sol.x.at("x") == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(sol.objective_value == doctest::Approx(-2.0).epsilon(1e-7));
}

TEST_CASE("equality constraint") {
    // min x^2 + y^2 s.t. x + y = 1 -> (0.5, 0.5)
    NlpInstance inst;
    inst.variables = {"x", "y"};
    inst.bounds = {{-5.0, 5.0}, {-5.0, 5.0}};
    inst.objective = sym("x") * sym("x") + sym("y") * sym("y");
    inst.equalities = {sym("x") + sym("y") - 1.0};
    LocalSolution sol = solve_local(inst, {{"x", -2.0}, {"y", 3.0}});
    CHECK(sol.status == SolveStatus::OptimalLocal);
    CHECK(sol.x.at("x") == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(sol.x.at("y") == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("bounds are satisfied exactly") {
    // minimizer of (x+7)^2 lies outside the box: x pins to the lower bound
    NlpInstance inst;
    inst.variables = {"x"};
    inst.bounds = {{-5.0, 5.0}};
    inst.objective = pow(sym("x") + 7.0, 2.0);
    LocalSolution sol = solve_local(inst, {{"x", 4.0}});
    CHECK(sol.x.at("x") == -5.0);  // exact
}

TEST_CASE("infeasible problem is flagged") {
    // x <= -1 and x >= 1 cannot hold
    NlpInstance inst;
    inst.variables = {"x"};
    inst.bounds = {{-5.0, 5.0}};
    inst.objective = sym("x");
    inst.inequalities = {sym("x") + 1.0, -sym("x") + 1.0};  // x <= -1, x >= 1
    LocalSolution sol = solve_local(inst, {{"x", 0.0}});
    CHECK(sol.status == SolveStatus::Infeasible);
    CHECK(sol.max_violation > 1e-6);
}

TEST_CASE("numerical error carries the iterate") {
    NlpInstance inst;
    inst.variables = {"x"};
    inst.bounds = {{-5.0, 5.0}};
    inst.objective = pow(sym("x"), 0.5);
    try {
        solve_local(inst, {{"x", -3.0}});
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(e.iterate.at("x") == -3.0);
    }
}

TEST_CASE("multistart with one start equals solve_local") {
    Binding x0 = {{"x", -3.0}};
    LocalSolution a = solve_local(quadratic_1d(), x0);
    LocalSolution b = solve_multistart(quadratic_1d(), x0, 1, 17);
    CHECK(a.x.at("x") == b.x.at("x"));
    CHECK(a.objective_value == b.objective_value);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("multistart finds the camel global minimum") {
    NlpInstance inst = six_hump_camel();
    LocalSolution sol = solve_multistart(inst, {{"x", 2.0}, {"y", 1.0}}, 16, 2024);
    CHECK(sol.status == SolveStatus::OptimalLocal);
    CHECK(sol.objective_value == doctest::Approx(-1.0316).epsilon(1e-3));

    // dense-grid oracle confirms the basin value
    EvalScratch scratch;
    CompiledExpr tape(inst.objective, inst.variables);
    double best = 1e300;
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j <= 400; ++j) {
            std::vector<double> p = {-2.0 + 4.0 * i / 400.0, -1.0 + 2.0 * j / 400.0};
            best = std::min(best, tape.eval(p, scratch));
        }
    CHECK(std::abs(best - sol.objective_value) < 1e-3);
}

TEST_CASE("multistart never loses to its own start 0 on feasible problems") {
    LocalSolution single = solve_local(six_hump_camel(), {{"x", 2.0}, {"y", 1.0}});
    LocalSolution multi = solve_multistart(six_hump_camel(), {{"x", 2.0}, {"y", 1.0}}, 8, 5);
    CHECK(multi.objective_value <= single.objective_value + 1e-6);
}

TEST_CASE("multistart determinism") {
    NlpInstance inst = six_hump_camel();
    LocalSolution a = solve_multistart(inst, {{"x", 0.0}, {"y", 0.0}}, 12, 99);
    LocalSolution b = solve_multistart(inst, {{"x", 0.0}, {"y", 0.0}}, 12, 99);
    CHECK(a.x.at("x") == b.x.at("x"));  // bitwise
    CHECK(a.x.at("y") == b.x.at("y"));
    CHECK(a.objective_value == b.objective_value);
    CHECK(a.start_index == b.start_index);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("instance validation") {
    NlpInstance inst;
    inst.variables = {"x"};
    inst.bounds = {{0.0, 1.0}};
    inst.objective = sym("x") + sym("ghost");
    CHECK_THROWS_AS(inst.validate(), Error);

    NlpInstance bad_bounds;
    bad_bounds.variables = {"x"};
    bad_bounds.bounds = {{2.0, 1.0}};
    bad_bounds.objective = sym("x");
    CHECK_THROWS_AS(bad_bounds.validate(), Error);

    CHECK_THROWS_AS(solve_multistart(quadratic_1d(), {{"x", 0.0}}, 0, 1), Error);
}
