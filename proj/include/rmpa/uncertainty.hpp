#ifndef RMPA_UNCERTAINTY_HPP
#define RMPA_UNCERTAINTY_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rmpa/expr.hpp"
#include "rmpa/rng.hpp"

namespace rmpa {

//! One uncertain parameter: nominal value, relative uncertainty level
//! (halfwidth = level * |nominal| unless an absolute halfwidth overrides),
//! and the hard physical bounds the model declares for it.
struct UncertainSpec {
    Symbol symbol;
    double nominal = 0.0;
    double level = 0.0;
    std::optional<double> abs_halfwidth;
    double hard_lo = -std::numeric_limits<double>::infinity();
    double hard_hi = std::numeric_limits<double>::infinity();
    bool lo_strict = false;
    bool hi_strict = false;

    double halfwidth() const {
        return abs_halfwidth ? *abs_halfwidth : level * std::abs(nominal);
    }
};

//! Box (independent intervals) or ellipsoid (L2 ball of radius omega) in
//! normalized coordinates z, with u_k = nominal_k + halfwidth_k * z_k.
//! Construction rejects sets whose extreme excursions violate the specs'
//! hard physical bounds. Immutable; sampling takes an explicit seed.
class UncertaintySet {
public:
    enum class Kind { Box, Ellipsoid };

    static UncertaintySet box(std::vector<UncertainSpec> specs);
    static UncertaintySet ellipsoid(std::vector<UncertainSpec> specs, double omega);

    Kind kind() const { return kind_; }
    double omega() const { return omega_; }
    const std::vector<UncertainSpec>& specs() const { return specs_; }
    size_t dimension() const { return specs_.size(); }

    //! All halfwidths zero (box) or omega zero: the set is {nominal}.
    bool is_singleton() const;

    Binding nominal_binding() const;

    //! u_k = nominal_k + halfwidth_k * z_k; z must have one coordinate per spec.
    Binding to_physical(std::span<const double> z) const;

    //! Inverse of to_physical; coordinates with zero halfwidth map to 0.
    //! The binding must bind every spec symbol.
    std::vector<double> to_normalized(const Binding& u) const;

    //! Box: every |z_k| <= 1 + 1e-12. Ellipsoid: ||z|| <= omega + 1e-12.
    bool contains(const Binding& u) const;

    //! Box: independent uniforms on [-1,1]. Ellipsoid: uniform in the ball
    //! (Gaussian direction, radius omega * U^(1/m)); surface_only pins the
    //! radius to omega.
    Binding sample(Rng& rng, bool surface_only = false) const;
    Binding sample(uint64_t seed, bool surface_only = false) const;

    //! Same draw in normalized coordinates (allocation-free hot path for
    //! the Monte-Carlo verifier).
    void sample_normalized(Rng& rng, std::vector<double>& z, bool surface_only = false) const;

private:
    UncertaintySet(Kind kind, std::vector<UncertainSpec> specs, double omega);

    Kind kind_;
    double omega_;
    std::vector<UncertainSpec> specs_;
};

//! Probability bound on constraint violation for an ellipsoid of radius
//! omega under normalized, independent, zero-mean parameters.
double chance_epsilon(double omega);

//! Exact inverse of chance_epsilon on (0, 1].
double omega_for_epsilon(double epsilon);

//! Copy of `specs` with uncertainty levels assigned: per-family overrides
//! (keyed by family name, e.g. "E" covers every E[i]) win over the global
//! level.
std::vector<UncertainSpec> apply_levels(std::vector<UncertainSpec> specs, double global_level,
                                        const std::map<std::string, double>& family_levels = {});

//! Set shape plus level assignment, as read from config/CLI.
struct SetConfig {
    UncertaintySet::Kind kind = UncertaintySet::Kind::Box;
    double level = 0.0;
    double omega = 0.0;
    std::map<std::string, double> family_levels;
};

UncertaintySet make_set(const std::vector<UncertainSpec>& base, const SetConfig& cfg);

}  // namespace rmpa

#endif
