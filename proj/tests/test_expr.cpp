#include <doctest.h>

#include "rmpa/compiled.hpp"
#include "rmpa/expr.hpp"
#include "test_util.hpp"

using namespace rmpa;
using rmpa::test::TreeGen;

namespace {
Expr X() { return Expr::symbol("x"); }
Expr Y() { return Expr::symbol("y"); }
}  // namespace

TEST_CASE("evaluate basics") {
    CHECK(evaluate(Expr::constant(3.0), {}) == 3.0);

    Expr e = X() * Y() + log(X());
    CHECK(evaluate(e, {{"x", 2.0}, {"y", 3.0}}) == doctest::Approx(6.693147).epsilon(1e-6));

    Expr p = pow(Expr::symbol("r"), Expr::symbol("L"));
    CHECK(evaluate(p, {{"r", 2.0}, {"L", -1.0}}) == doctest::Approx(0.5));
}

TEST_CASE("evaluate errors") {
    CHECK_THROWS_AS(evaluate(X(), {}), UnboundSymbolError);
    CHECK_THROWS_AS(evaluate(log(X()), {{"x", -1.0}}), DomainError);
    CHECK_THROWS_AS(evaluate(pow(X(), 0.5), {{"x", -4.0}}), DomainError);
    CHECK_THROWS_AS(evaluate(Y() / X(), {{"x", 0.0}, {"y", 1.0}}), DomainError);
    // integer powers of negative bases are fine
    CHECK(evaluate(pow(X(), 2.0), {{"x", -3.0}}) == 9.0);
}

TEST_CASE("gradient analytic") {
    std::vector<std::string> xs = {"x"};
    CHECK(gradient(pow(X(), 2.0), xs, {{"x", 3.0}})[0] == doctest::Approx(6.0));
    CHECK(gradient(log(X()), xs, {{"x", 2.0}})[0] == doctest::Approx(0.5));

    // symbol absent from the tree has component zero
    std::vector<std::string> xy = {"x", "y"};
    auto g = gradient(pow(X(), 3.0), xy, {{"x", 2.0}, {"y", 7.0}});
    CHECK(g[0] == doctest::Approx(12.0));
    CHECK(g[1] == 0.0);
}

TEST_CASE("gradient matches finite differences on random trees") {
    TreeGen gen(42, {"x", "y", "z"});
    std::vector<std::string> names = {"x", "y", "z"};
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Expr e = gen.general(4);
        Binding b = gen.binding();
        double v;
        try {
            v = evaluate(e, b);
        } catch (const DomainError&) {
            continue;  // generator occasionally builds 0^-2 style constants
        }
        if (!std::isfinite(v) || std::abs(v) > 1e8) continue;
        auto g = gradient(e, names, b);
        for (size_t i = 0; i < names.size(); ++i) {
            double fd = rmpa::test::fd_partial(e, names[i], b);
            if (!std::isfinite(fd) || std::abs(fd) > 1e6) continue;
            CHECK(std::abs(g[i] - fd) <= 2e-5 * std::max(1.0, std::abs(fd)));
        }
        ++checked;
    }
    CHECK(checked > 60);
}

TEST_CASE("differentiation is linear") {
    TreeGen gen(7, {"x", "y"});
    std::vector<std::string> names = {"x", "y"};
    for (int trial = 0; trial < 20; ++trial) {
        Expr e1 = gen.positive(3), e2 = gen.positive(3);
        double a = gen.rng().uniform(-3.0, 3.0);
        Binding b = gen.binding();
        Expr combo = Expr::constant(a) * e1 + e2;
        auto gc = gradient(combo, names, b);
        auto g1 = gradient(e1, names, b);
        auto g2 = gradient(e2, names, b);
        for (size_t i = 0; i < names.size(); ++i)
            CHECK(gc[i] == doctest::Approx(a * g1[i] + g2[i]).epsilon(1e-10));
    }
}

TEST_CASE("substitute") {
    Expr e = Expr::symbol("u") * X();
    Expr s = substitute(e, {{"u", 2.0}});
    CHECK(to_prefix_string(s) == "(* 2 x)");
    CHECK(evaluate(s, {{"x", 5.0}}) == 10.0);

    Expr unchanged = substitute(X() + Y(), {});
    CHECK(to_prefix_string(unchanged) == "(+ x y)");
}

TEST_CASE("substitute/evaluate consistency on random trees") {
    TreeGen gen(99, {"x", "y", "u", "v"});
    for (int trial = 0; trial < 100; ++trial) {
        Expr e = gen.general(4);
        Binding all = gen.binding();
        Binding bu = {{"u", all["u"]}, {"v", all["v"]}};
        Binding bx = {{"x", all["x"]}, {"y", all["y"]}};
        double direct, split;
        try {
            direct = evaluate(e, all);
            split = evaluate(substitute(e, bu), bx);
        } catch (const DomainError&) {
            continue;
        }
        CHECK(split == direct);  // exact, same arithmetic
    }
}

TEST_CASE("free symbols and families") {
    Expr e = Expr::symbol("E[3]", SymbolKind::Uncertain, 3) * X() + Expr::symbol("E[0]", SymbolKind::Uncertain, 0);
    auto syms = free_symbols(e);
    REQUIRE(syms.size() == 3);
    CHECK(syms[0].name == "E[0]");
    CHECK(syms[1].name == "E[3]");
    CHECK(syms[1].kind == SymbolKind::Uncertain);
    CHECK(syms[2].name == "x");
    CHECK(family_of("E[3]") == "E");
    CHECK(family_of("eta") == "eta");
    CHECK(indexed_name("m", 7) == "m[7]");
}

TEST_CASE("compiled tape agrees with the interpreter") {
    TreeGen gen(1234, {"x", "y", "z"});
    std::vector<std::string> names = {"x", "y", "z"};
    EvalScratch scratch;
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Expr e = gen.general(5);
        Binding b = gen.binding();
        double v;
        try {
            v = evaluate(e, b);
        } catch (const DomainError&) {
            continue;
        }
        if (!std::isfinite(v)) continue;
        CompiledExpr tape(e, names);
        std::vector<double> x = {b["x"], b["y"], b["z"]};
        CHECK(tape.eval(x, scratch) == doctest::Approx(v).epsilon(1e-14));

        auto g = gradient(e, names, b);
        std::vector<double> gt(3, 0.0);
        tape.eval_grad(x, 1.0, gt, scratch);
        for (int i = 0; i < 3; ++i) CHECK(gt[i] == doctest::Approx(g[i]).epsilon(1e-12));
        ++checked;
    }
    CHECK(checked > 60);

    // constant folding: a tree with no inputs flattens to one op
    Expr folded = (Expr::constant(2.0) + Expr::constant(3.0)) * Expr::constant(4.0);
    CompiledExpr tape(folded, {});
    CHECK(tape.tape_size() == 1);
    CHECK(tape.eval({}, scratch) == 20.0);
}

TEST_CASE("compiled tape rejects unknown symbols") {
    CHECK_THROWS_AS(CompiledExpr(X() + Y(), std::vector<std::string>{"x"}),
                    UnboundSymbolError);
}

TEST_CASE("gradient weight accumulation") {
    EvalScratch scratch;
    CompiledExpr tape(X() * X(), std::vector<std::string>{"x"});
    std::vector<double> grad(1, 1.0);  // pre-seeded; eval_grad accumulates
    std::vector<double> at = {3.0};
    tape.eval_grad(at, 2.0, grad, scratch);
    CHECK(grad[0] == doctest::Approx(1.0 + 2.0 * 6.0));
}
