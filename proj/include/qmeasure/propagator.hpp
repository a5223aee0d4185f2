#pragma once

// Closed-form propagators: free particle in d dimensions, constant vector
// potential, 1-d simple harmonic oscillator (with its caustic delta branch),
// and the half-line infinite barrier (method of images).

#include "util.hpp"

#include <cmath>
#include <variant>
#include <vector>

namespace qm {

enum class PropagatorKind { Free, ConstantVectorPotential, SHO, HalfLineFree };

struct PropagatorSpec {
    PropagatorKind kind = PropagatorKind::Free;
    int dim = 1;
    double mass = 1.0;
    double hbar = 1.0;
    double charge = 1.0;            // e, vector-potential coupling
    std::vector<double> potential;  // constant A, dim components
    double omega = 1.0;             // SHO frequency
    double caustic_tol = 1e-8;      // |sin(omega dt)| below this is a caustic
    double near_caustic_tol = 1e-3; // refused band above caustic_tol

    static PropagatorSpec free_particle(int d = 1, double m = 1.0, double hb = 1.0) {
        PropagatorSpec s;
        s.kind = PropagatorKind::Free;
        s.dim = d;
        s.mass = m;
        s.hbar = hb;
        return s;
    }

    static PropagatorSpec vector_potential(std::vector<double> a, double e = 1.0, double m = 1.0,
                                           double hb = 1.0) {
        PropagatorSpec s;
        s.kind = PropagatorKind::ConstantVectorPotential;
        s.dim = static_cast<int>(a.size());
        s.potential = std::move(a);
        s.charge = e;
        s.mass = m;
        s.hbar = hb;
        return s;
    }

    static PropagatorSpec sho(double w, int d = 1, double m = 1.0, double hb = 1.0) {
        PropagatorSpec s;
        s.kind = PropagatorKind::SHO;
        s.dim = d;
        s.omega = w;
        s.mass = m;
        s.hbar = hb;
        return s;
    }

    static PropagatorSpec half_line(double m = 1.0, double hb = 1.0) {
        PropagatorSpec s;
        s.kind = PropagatorKind::HalfLineFree;
        s.dim = 1;
        s.mass = m;
        s.hbar = hb;
        return s;
    }

    void validate() const {
        if (dim < 1) throw UsageError("propagator dimension must be >= 1");
        if (mass <= 0.0 || hbar <= 0.0) throw UsageError("mass and hbar must be positive");
        if (kind == PropagatorKind::SHO && omega <= 0.0)
            throw UsageError("SHO frequency must be positive");
        if (kind == PropagatorKind::HalfLineFree && dim != 1)
            throw UsageError("half-line propagator requires d = 1");
        if (kind == PropagatorKind::ConstantVectorPotential &&
            static_cast<int>(potential.size()) != dim)
            throw UsageError("vector potential needs dim components");
    }
};

// SHO kernel at a caustic Δt = Mπ/ω: phase * δ(x' - (-1)^M x).
struct DeltaTag {
    int caustic_index = 0; // M
    Cx phase{1.0, 0.0};    // e^{-iMπ/2} per 1-d factor, to the d-th power
    int parity = 1;        // (-1)^M
};

using PropagatorValue = std::variant<Cx, DeltaTag>;

namespace detail {

constexpr double kPi = 3.14159265358979323846;

// (m/(2πiħ dt))^{d/2} with the e^{-iπ/4} phase per dimension
inline Cx gaussian_prefactor(double m, double hbar, double dt, int d) {
    double mag = std::pow(m / (2.0 * kPi * hbar * dt), 0.5 * d);
    return mag * std::exp(Cx{0.0, -kPi / 4.0 * d});
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// one 1-d SHO factor off caustic; branch fixed by the Maslov index
// floor(ω dt/π) so that composition across a caustic stays consistent with
// the caustic phase e^{-iMπ/2}
inline Cx sho_factor(double m, double w, double hbar, double dt, double xp, double x) {
    double s = std::sin(w * dt);
    double c = std::cos(w * dt);
    int maslov = static_cast<int>(std::floor(w * dt / kPi));
    double mag = std::sqrt(m * w / (2.0 * kPi * hbar * std::abs(s)));
    Cx branch = std::exp(Cx{0.0, -kPi / 4.0 - maslov * kPi / 2.0});
    Cx phase = std::exp(Cx{0.0, m * w / (2.0 * hbar * s) * ((xp * xp + x * x) * c - 2.0 * x * xp)});
    return mag * branch * phase;
}

} // namespace detail

inline bool sho_on_caustic(const PropagatorSpec& spec, double dt) {
    return spec.kind == PropagatorKind::SHO &&
           std::abs(std::sin(spec.omega * dt)) < spec.caustic_tol;
}

inline bool sho_near_caustic(const PropagatorSpec& spec, double dt) {
    if (spec.kind != PropagatorKind::SHO) return false;
    double s = std::abs(std::sin(spec.omega * dt));
    return s >= spec.caustic_tol && s < spec.near_caustic_tol;
}

// K(x',t'|x,t). SHO caustic separations return a DeltaTag; the refused
// near-caustic band throws.
inline PropagatorValue propagator_value(const PropagatorSpec& spec,
                                        const std::vector<double>& xp, double tp,
                                        const std::vector<double>& x, double t) {
    spec.validate();
    if (!(tp > t)) throw UsageError("propagator needs t' > t");
    if (static_cast<int>(xp.size()) != spec.dim || static_cast<int>(x.size()) != spec.dim)
        throw UsageError("propagator positions must have dim components");
    const double dt = tp - t;
    switch (spec.kind) {
    case PropagatorKind::Free: {
        Cx pref = detail::gaussian_prefactor(spec.mass, spec.hbar, dt, spec.dim);
        double phase = spec.mass / (2.0 * spec.hbar * dt) * detail::sq_dist(xp, x);
        return pref * std::exp(Cx{0.0, phase});
    }
    case PropagatorKind::ConstantVectorPotential: {
        Cx pref = detail::gaussian_prefactor(spec.mass, spec.hbar, dt, spec.dim);
        double phase = spec.mass / (2.0 * spec.hbar * dt) * detail::sq_dist(xp, x);
        for (int i = 0; i < spec.dim; ++i)
            phase += spec.charge * spec.potential[static_cast<std::size_t>(i)] *
                     (xp[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]) /
                     spec.hbar;
        return pref * std::exp(Cx{0.0, phase});
    }
    case PropagatorKind::SHO: {
        double s = std::abs(std::sin(spec.omega * dt));
        if (s < spec.caustic_tol) {
            int m_idx = static_cast<int>(std::llround(spec.omega * dt / detail::kPi));
            DeltaTag tag;
            tag.caustic_index = m_idx;
            tag.phase = std::exp(Cx{0.0, -m_idx * spec.dim * detail::kPi / 2.0});
            tag.parity = (m_idx % 2 == 0) ? 1 : -1;
            return tag;
        }
        if (s < spec.near_caustic_tol)
            throw NumericalError("SHO separation too close to a caustic to evaluate accurately");
        Cx k{1.0, 0.0};
        for (int i = 0; i < spec.dim; ++i)
            k *= detail::sho_factor(spec.mass, spec.omega, spec.hbar, dt,
                                    xp[static_cast<std::size_t>(i)],
                                    x[static_cast<std::size_t>(i)]);
        return k;
    }
    case PropagatorKind::HalfLineFree: {
        if (xp[0] <= 0.0 || x[0] <= 0.0) return Cx{0.0, 0.0};
        Cx pref = detail::gaussian_prefactor(spec.mass, spec.hbar, dt, 1);
        double a = spec.mass / (2.0 * spec.hbar * dt);
        Cx direct = std::exp(Cx{0.0, a * (xp[0] - x[0]) * (xp[0] - x[0])});
        Cx image = std::exp(Cx{0.0, a * (xp[0] + x[0]) * (xp[0] + x[0])});
        return pref * (direct - image);
    }
    }
    throw UsageError("unknown propagator kind");
}

// scalar convenience for d = 1
inline PropagatorValue propagator_value(const PropagatorSpec& spec, double xp, double tp,
                                        double x, double t) {
    return propagator_value(spec, std::vector<double>{xp}, tp, std::vector<double>{x}, t);
}

// finite value or throw (used by quadrature paths that must stay off caustics)
inline Cx propagator_finite(const PropagatorSpec& spec, double xp, double tp, double x,
                            double t) {
    PropagatorValue v = propagator_value(spec, xp, tp, x, t);
    if (std::holds_alternative<DeltaTag>(v))
        throw NumericalError("propagator degenerates to a delta on this interval");
    return std::get<Cx>(v);
}

// Worst-case spatial phase gradient of K over positions confined to
// [-span, span]; drives panel sizing.
inline double max_phase_gradient(const PropagatorSpec& spec, double dt, double span) {
    switch (spec.kind) {
    case PropagatorKind::Free:
        return spec.mass * 2.0 * span / (spec.hbar * dt);
    case PropagatorKind::ConstantVectorPotential: {
        double a_mag = 0.0;
        for (double a : spec.potential) a_mag = std::max(a_mag, std::abs(a));
        return spec.mass * 2.0 * span / (spec.hbar * dt) + std::abs(spec.charge) * a_mag / spec.hbar;
    }
    case PropagatorKind::SHO: {
        double s = std::abs(std::sin(spec.omega * dt));
        double c = std::abs(std::cos(spec.omega * dt));
        if (s < spec.caustic_tol) return 0.0;
        return spec.mass * spec.omega / spec.hbar * span * (c + 1.0) / s;
    }
    case PropagatorKind::HalfLineFree:
        return spec.mass * 4.0 * span / (spec.hbar * dt); // image term doubles the reach
    }
    return 0.0;
}

} // namespace qm
