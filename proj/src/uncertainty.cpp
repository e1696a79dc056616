#include "rmpa/uncertainty.hpp"

#include <cmath>

namespace rmpa {

namespace {

void check_spec(const UncertainSpec& s) {
    if (!std::isfinite(s.nominal)) throw Error("uncertain spec " + s.symbol.name + ": nominal must be finite");
    if (s.level < 0.0) throw Error("uncertain spec " + s.symbol.name + ": level must be >= 0");
    if (s.nominal == 0.0 && s.level > 0.0 && !s.abs_halfwidth)
        throw Error("uncertain spec " + s.symbol.name +
                    ": zero nominal requires an absolute halfwidth");
    if (s.abs_halfwidth && *s.abs_halfwidth < 0.0)
        throw Error("uncertain spec " + s.symbol.name + ": halfwidth must be >= 0");
}

// Reject sets whose extreme excursion breaks the model's hard bounds.
void check_realizable(const UncertainSpec& s, double excursion) {
    double lo = s.nominal - excursion;
    double hi = s.nominal + excursion;
    bool lo_ok = s.lo_strict ? lo > s.hard_lo : lo >= s.hard_lo;
    bool hi_ok = s.hi_strict ? hi < s.hard_hi : hi <= s.hard_hi;
    if (!lo_ok || !hi_ok)
        throw Error("uncertainty set not physically realizable: " + s.symbol.name + " range [" +
                    std::to_string(lo) + ", " + std::to_string(hi) + "] exceeds hard bounds [" +
                    std::to_string(s.hard_lo) + ", " + std::to_string(s.hard_hi) + "]");
}

}  // namespace

UncertaintySet::UncertaintySet(Kind kind, std::vector<UncertainSpec> specs, double omega)
    : kind_(kind), omega_(omega), specs_(std::move(specs)) {}

UncertaintySet UncertaintySet::box(std::vector<UncertainSpec> specs) {
    for (const auto& s : specs) {
        check_spec(s);
        check_realizable(s, s.halfwidth());
    }
    return UncertaintySet(Kind::Box, std::move(specs), 0.0);
}

UncertaintySet UncertaintySet::ellipsoid(std::vector<UncertainSpec> specs, double omega) {
    if (!(omega >= 0.0)) throw Error("ellipsoid radius must be >= 0");
    for (const auto& s : specs) {
        check_spec(s);
        check_realizable(s, omega * s.halfwidth());
    }
    return UncertaintySet(Kind::Ellipsoid, std::move(specs), omega);
}

bool UncertaintySet::is_singleton() const {
    if (kind_ == Kind::Ellipsoid && omega_ == 0.0) return true;
    for (const auto& s : specs_)
        if (s.halfwidth() != 0.0) return false;
    return true;
}

Binding UncertaintySet::nominal_binding() const {
    Binding b;
    for (const auto& s : specs_) b[s.symbol.name] = s.nominal;
    return b;
}

Binding UncertaintySet::to_physical(std::span<const double> z) const {
    if (z.size() != specs_.size())
        throw Error("to_physical: expected " + std::to_string(specs_.size()) +
                    " coordinates, got " + std::to_string(z.size()));
    Binding b;
    for (size_t k = 0; k < specs_.size(); ++k)
        b[specs_[k].symbol.name] = specs_[k].nominal + specs_[k].halfwidth() * z[k];
    return b;
}

std::vector<double> UncertaintySet::to_normalized(const Binding& u) const {
    std::vector<double> z(specs_.size());
    for (size_t k = 0; k < specs_.size(); ++k) {
        const auto& s = specs_[k];
        auto it = u.find(s.symbol.name);
        if (it == u.end()) throw UnboundSymbolError(s.symbol.name);
        double hw = s.halfwidth();
        if (hw == 0.0) {
            double scale = std::max(1.0, std::abs(s.nominal));
            if (std::abs(it->second - s.nominal) > 1e-12 * scale)
                z[k] = std::numeric_limits<double>::infinity();
            else
                z[k] = 0.0;
        } else {
            z[k] = (it->second - s.nominal) / hw;
        }
    }
    return z;
}

bool UncertaintySet::contains(const Binding& u) const {
    std::vector<double> z = to_normalized(u);
    if (kind_ == Kind::Box) {
        for (double zk : z)
            if (!(std::abs(zk) <= 1.0 + 1e-12)) return false;
        return true;
    }
    double nrm2 = 0.0;
    for (double zk : z) nrm2 += zk * zk;
    return std::sqrt(nrm2) <= omega_ + 1e-12;
}

void UncertaintySet::sample_normalized(Rng& rng, std::vector<double>& z,
                                       bool surface_only) const {
    const size_t m = specs_.size();
    z.assign(m, 0.0);
    if (kind_ == Kind::Box) {
        for (size_t k = 0; k < m; ++k) z[k] = rng.uniform(-1.0, 1.0);
    } else if (omega_ > 0.0 && m > 0) {
        double nrm2 = 0.0;
        for (size_t k = 0; k < m; ++k) {
            z[k] = rng.gaussian();
            nrm2 += z[k] * z[k];
        }
        double nrm = std::sqrt(nrm2);
        if (nrm == 0.0) {
            z[0] = 1.0;
            nrm = 1.0;
        }
        double radius = surface_only
                            ? omega_
                            : omega_ * std::pow(rng.uniform(), 1.0 / static_cast<double>(m));
        for (size_t k = 0; k < m; ++k) z[k] *= radius / nrm;
    }
}

Binding UncertaintySet::sample(Rng& rng, bool surface_only) const {
    std::vector<double> z;
    sample_normalized(rng, z, surface_only);
    return to_physical(z);
}

Binding UncertaintySet::sample(uint64_t seed, bool surface_only) const {
    Rng rng(seed);
    return sample(rng, surface_only);
}

double chance_epsilon(double omega) {
    if (!(omega >= 0.0)) throw Error("chance_epsilon: omega must be >= 0");
    return std::exp(-0.5 * omega * omega);
}

double omega_for_epsilon(double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw Error("omega_for_epsilon: epsilon must be in (0, 1]");
    return std::sqrt(-2.0 * std::log(epsilon));
}

std::vector<UncertainSpec> apply_levels(std::vector<UncertainSpec> specs, double global_level,
                                        const std::map<std::string, double>& family_levels) {
    for (auto& s : specs) {
        auto it = family_levels.find(family_of(s.symbol.name));
        s.level = it != family_levels.end() ? it->second : global_level;
    }
    return specs;
}

UncertaintySet make_set(const std::vector<UncertainSpec>& base, const SetConfig& cfg) {
    std::vector<UncertainSpec> specs = apply_levels(base, cfg.level, cfg.family_levels);
    return cfg.kind == UncertaintySet::Kind::Box
               ? UncertaintySet::box(std::move(specs))
               : UncertaintySet::ellipsoid(std::move(specs), cfg.omega);
}

}  // namespace rmpa
