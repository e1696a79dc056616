#ifndef RMPA_TEST_UTIL_HPP
#define RMPA_TEST_UTIL_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "rmpa/expr.hpp"
#include "rmpa/rng.hpp"

namespace rmpa::test {

//! Central finite differences, step h = 1e-6 * max(1, |v|); the independent
//! oracle for every gradient assertion.
inline double fd_partial(const Expr& e, const std::string& name, const Binding& at) {
    Binding lo = at, hi = at;
    double v = at.at(name);
    double h = 1e-6 * std::max(1.0, std::abs(v));
    lo[name] = v - h;
    hi[name] = v + h;
    return (evaluate(e, hi) - evaluate(e, lo)) / (2.0 * h);
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

//! Random expression trees for property tests. Two modes: `positive`
//! guarantees a value bounded away from zero from below (safe under log,
//! fractional powers, and as a divisor) given bindings in [0.5, 2].
class TreeGen {
public:
    TreeGen(uint64_t seed, std::vector<std::string> symbols)
        : rng_(seed), symbols_(std::move(symbols)) {}

    Expr positive(int depth) {
        double p = rng_.uniform();
        if (depth <= 0 || p < 0.2) {
            if (rng_.uniform() < 0.5) return Expr::constant(rng_.uniform(0.5, 2.0));
            return sym();
        }
        if (p < 0.45) return positive(depth - 1) + positive(depth - 1);
        if (p < 0.65) return positive(depth - 1) * positive(depth - 1);
        if (p < 0.8) return positive(depth - 1) / positive(depth - 1);
        if (p < 0.9) return pow(positive(depth - 1), rng_.uniform(0.3, 1.7));
        return Expr::sum({positive(depth - 1), positive(depth - 1), positive(depth - 1)});
    }

    Expr general(int depth) {
        double p = rng_.uniform();
        if (depth <= 0 || p < 0.15) {
            if (rng_.uniform() < 0.5) return Expr::constant(rng_.uniform(-2.0, 2.0));
            return sym();
        }
        if (p < 0.35) return general(depth - 1) + general(depth - 1);
        if (p < 0.5) return general(depth - 1) - general(depth - 1);
        if (p < 0.65) return general(depth - 1) * general(depth - 1);
        if (p < 0.72) return -general(depth - 1);
        if (p < 0.8) return general(depth - 1) / positive(depth - 1);
        if (p < 0.88) return log(positive(depth - 1));
        if (p < 0.95) return pow(general(depth - 1), 2.0);
        return Expr::sum({general(depth - 1), general(depth - 1)});
    }

    Binding binding() {
        Binding b;
        for (const auto& s : symbols_) b[s] = rng_.uniform(0.5, 2.0);
        return b;
    }

    Rng& rng() { return rng_; }

private:
    Expr sym() {
        size_t i = static_cast<size_t>(rng_.uniform() * symbols_.size());
        if (i >= symbols_.size()) i = symbols_.size() - 1;
        return Expr::symbol(symbols_[i]);
    }

    Rng rng_;
    std::vector<std::string> symbols_;
};

//! Unique scratch directory under the system temp dir, removed on scope
//! exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("rmpa_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace rmpa::test

#endif
