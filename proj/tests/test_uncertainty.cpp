#include <doctest.h>

#include <cmath>

#include "rmpa/uncertainty.hpp"
#include "test_util.hpp"

using namespace rmpa;

namespace {

UncertainSpec spec(const std::string& name, double nominal, double level, double hard_lo = -1e300,
                   bool lo_strict = false, double hard_hi = 1e300, bool hi_strict = false) {
    UncertainSpec s;
    s.symbol = Symbol(name, SymbolKind::Uncertain);
    s.nominal = nominal;
    s.level = level;
    s.hard_lo = hard_lo;
    s.lo_strict = lo_strict;
    s.hard_hi = hard_hi;
    s.hi_strict = hi_strict;
    return s;
}

}  // namespace

TEST_CASE("to_physical") {
    auto set = UncertaintySet::box({spec("a", 100.0, 0.05), spec("b", -40.0, 0.1)});
    std::vector<double> z0 = {0.0, 0.0};
    Binding at0 = set.to_physical(z0);
    CHECK(at0.at("a") == 100.0);
    CHECK(at0.at("b") == -40.0);

    std::vector<double> z1 = {1.0, -1.0};
    Binding at1 = set.to_physical(z1);
    CHECK(at1.at("a") == doctest::Approx(105.0));
    CHECK(at1.at("b") == doctest::Approx(-44.0));  // halfwidth uses |nominal|

    std::vector<double> zm = {-1.0, 0.0};
    CHECK(set.to_physical(zm).at("a") == doctest::Approx(95.0));

    std::vector<double> bad = {0.0};
    CHECK_THROWS_AS(set.to_physical(bad), Error);
}

TEST_CASE("contains") {
    auto box = UncertaintySet::box({spec("a", 100.0, 0.05), spec("b", 50.0, 0.1)});
    CHECK(box.contains({{"a", 100.0}, {"b", 50.0}}));
    CHECK(box.contains({{"a", 105.0}, {"b", 45.0}}));
    CHECK_FALSE(box.contains({{"a", 105.1}, {"b", 50.0}}));
    CHECK_THROWS_AS(box.contains({{"a", 100.0}}), UnboundSymbolError);

    auto degenerate = UncertaintySet::box({spec("a", 100.0, 0.0)});
    CHECK(degenerate.contains({{"a", 100.0}}));
    CHECK_FALSE(degenerate.contains({{"a", 100.001}}));
    CHECK(degenerate.is_singleton());

    UncertainSpec sa = spec("a", 1.0, 1.0), sb = spec("b", 1.0, 1.0);
    auto ell = UncertaintySet::ellipsoid({sa, sb}, 1.0);
    CHECK(ell.contains({{"a", 1.0}, {"b", 1.0}}));        // center
    CHECK(ell.contains({{"a", 2.0}, {"b", 1.0}}));        // z = (1, 0)
    CHECK_FALSE(ell.contains({{"a", 2.0}, {"b", 2.0}}));  // ||z|| = sqrt(2) > 1
}

TEST_CASE("physical realizability") {
    // eta in (0,1]: nominal 0.63 at 60% level would exceed 1
    CHECK_THROWS_AS(UncertaintySet::box({spec("eta", 0.63, 0.6, 0.0, true, 1.0, false)}), Error);
    CHECK_NOTHROW(UncertaintySet::box({spec("eta", 0.63, 0.5, 0.0, true, 1.0, false)}));
    // ellipsoid checks the omega-scaled excursion
    CHECK_THROWS_AS(
        UncertaintySet::ellipsoid({spec("eta", 0.63, 0.2, 0.0, true, 1.0, false)}, 3.0), Error);
    CHECK_NOTHROW(
        UncertaintySet::ellipsoid({spec("eta", 0.63, 0.19, 0.0, true, 1.0, false)}, 3.0));
    // strict zero bound: E > 0 rejects a full 100% level
    CHECK_THROWS_AS(UncertaintySet::box({spec("E[0]", 5e6, 1.0, 0.0, true)}), Error);
    // zero nominal needs an absolute halfwidth
    UncertainSpec z = spec("z", 0.0, 0.5);
    CHECK_THROWS_AS(UncertaintySet::box({z}), Error);
    z.abs_halfwidth = 0.1;
    CHECK_NOTHROW(UncertaintySet::box({z}));
}

TEST_CASE("sampling stays inside the set") {
    auto box = UncertaintySet::box({spec("a", 100.0, 0.05), spec("b", 50.0, 0.1)});
    auto ell = UncertaintySet::ellipsoid(
        {spec("a", 100.0, 0.05), spec("b", 50.0, 0.1), spec("c", 2.0, 0.5)}, 2.0);
    Rng rng(7);
    for (int i = 0; i < 100000; ++i) {
        REQUIRE(box.contains(box.sample(rng)));
        REQUIRE(ell.contains(ell.sample(rng)));
    }
    // surface mode: ||z|| == omega
    for (int i = 0; i < 1000; ++i) {
        Binding u = ell.sample(rng, true);
        auto z = ell.to_normalized(u);
        double nrm = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
        REQUIRE(nrm == doctest::Approx(2.0).epsilon(1e-9));
    }
}

TEST_CASE("degenerate sets sample the nominal point") {
    auto box = UncertaintySet::box({spec("a", 100.0, 0.0), spec("b", 50.0, 0.0)});
    auto ell = UncertaintySet::ellipsoid({spec("a", 100.0, 0.05)}, 0.0);
    for (uint64_t s = 0; s < 50; ++s) {
        Binding u = box.sample(s);
        CHECK(u.at("a") == 100.0);
        CHECK(u.at("b") == 50.0);
        CHECK(ell.sample(s).at("a") == 100.0);
    }
    CHECK(ell.is_singleton());
}

TEST_CASE("sampling is deterministic in the seed") {
    auto ell = UncertaintySet::ellipsoid({spec("a", 100.0, 0.05), spec("b", 50.0, 0.1)}, 1.5);
    Rng r1(123), r2(123);
    for (int i = 0; i < 100; ++i) {
        Binding u1 = ell.sample(r1), u2 = ell.sample(r2);
        CHECK(u1.at("a") == u2.at("a"));
        CHECK(u1.at("b") == u2.at("b"));
    }
    CHECK(ell.sample(uint64_t(5)).at("a") == ell.sample(uint64_t(5)).at("a"));
}

TEST_CASE("box nesting: members of the smaller box belong to the larger") {
    auto small = UncertaintySet::box({spec("a", 100.0, 0.02), spec("b", 50.0, 0.05)});
    auto large = UncertaintySet::box({spec("a", 100.0, 0.04), spec("b", 50.0, 0.05)});
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) REQUIRE(large.contains(small.sample(rng)));
}

TEST_CASE("chance conversion") {
    CHECK(chance_epsilon(0.0) == 1.0);
    // the calibration anchor: radius 3.7 ~ 0.1% violation chance
    CHECK(chance_epsilon(3.7) == doctest::Approx(1.064e-3).epsilon(1e-3));
    CHECK(omega_for_epsilon(1.0) == 0.0);
    CHECK(omega_for_epsilon(0.05) == doctest::Approx(2.447747).epsilon(1e-6));
    CHECK(omega_for_epsilon(1.064e-3) == doctest::Approx(3.7).epsilon(1e-2));

    CHECK_THROWS_AS(chance_epsilon(-0.1), Error);
    CHECK_THROWS_AS(omega_for_epsilon(0.0), Error);
    CHECK_THROWS_AS(omega_for_epsilon(1.5), Error);

    // strictly decreasing, exact round trip
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        double w = rng.uniform(0.0, 6.0);
        CHECK(std::abs(omega_for_epsilon(chance_epsilon(w)) - w) <= 1e-12);
        double e1 = chance_epsilon(0.1 * i), e2 = chance_epsilon(0.1 * i + 0.05);
        CHECK(e2 < e1);
    }
    CHECK(std::abs(omega_for_epsilon(chance_epsilon(2.0)) - 2.0) <= 1e-12);
}

TEST_CASE("apply_levels and make_set") {
    std::vector<UncertainSpec> base = {spec("E[0]", 5e6, 0.0, 0.0, true),
                                       spec("E[1]", 2e6, 0.0, 0.0, true),
                                       spec("eta", 0.63, 0.0, 0.0, true, 1.0, false)};
    auto leveled = apply_levels(base, 0.05, {{"E", 0.02}});
    CHECK(leveled[0].level == 0.02);
    CHECK(leveled[1].level == 0.02);
    CHECK(leveled[2].level == 0.05);

    SetConfig cfg;
    cfg.kind = UncertaintySet::Kind::Ellipsoid;
    cfg.level = 0.05;
    cfg.omega = 2.0;
    auto set = make_set(base, cfg);
    CHECK(set.kind() == UncertaintySet::Kind::Ellipsoid);
    CHECK(set.omega() == 2.0);
    CHECK(set.specs()[0].level == 0.05);
}
