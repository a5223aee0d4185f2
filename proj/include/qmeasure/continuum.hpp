#pragma once

// Propagator-driven restricted evolution on 1-d quadrature grids:
//   ψ_α(x_T,T) = χ_{α_N}(x_T) ∫_{α_{N-1}} ... ∫_{α_1} K ... K ψ(x_1),
// with e^{-εx²} convergence factors and Richardson extrapolation on unbounded
// slots, the ESCK composition check, the continuum decoherence functional,
// and back-evolution to t = 0.

#include "homogeneous.hpp"
#include "propagator.hpp"
#include "quadrature.hpp"
#include "util.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace qm {

using WaveFn = std::function<Cx(double)>;

struct WaveFunction {
    QuadGrid grid;
    Eigen::VectorXcd values;
    double time = 0.0;

    static WaveFunction sample(const WaveFn& f, QuadGrid g, double t) {
        WaveFunction w;
        w.values.resize(static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i)
            w.values(static_cast<Eigen::Index>(i)) = f(g.nodes()[i]);
        w.grid = std::move(g);
        w.time = t;
        return w;
    }

    double norm_sq() const {
        double s = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            s += grid.weights()[i] * std::norm(values(static_cast<Eigen::Index>(i)));
        return s;
    }

    double norm() const { return std::sqrt(norm_sq()); }

    void normalize() {
        double n = norm();
        if (n <= 0.0) throw NumericalError("cannot normalize a zero wavefunction");
        values /= n;
    }
};

// <a,b>_0 = ∫ a* b; grids must coincide
inline Cx l2_inner(const WaveFunction& a, const WaveFunction& b) {
    if (!a.grid.same_nodes(b.grid))
        throw UsageError("L2 inner product needs wavefunctions on a common grid");
    Cx s = 0.0;
    for (std::size_t i = 0; i < a.grid.size(); ++i)
        s += a.grid.weights()[i] * std::conj(a.values(static_cast<Eigen::Index>(i))) *
             b.values(static_cast<Eigen::Index>(i));
    return s;
}

inline double l2_distance(const WaveFunction& a, const WaveFunction& b) {
    if (!a.grid.same_nodes(b.grid)) throw UsageError("L2 distance needs a common grid");
    double s = 0.0;
    for (std::size_t i = 0; i < a.grid.size(); ++i)
        s += a.grid.weights()[i] *
             std::norm(a.values(static_cast<Eigen::Index>(i)) -
                       b.values(static_cast<Eigen::Index>(i)));
    return std::sqrt(s);
}

// Working box and panel policy. Panels are refined against the kernel's
// local phase gradient so oscillations stay resolved.
struct GridSpec {
    double lo = -12.0;
    double hi = 12.0;
    int order = 8;
    double max_panel_width = 0.25;
    double rad_per_panel = 5.0; // phase budget per panel

    double span() const { return std::max(std::abs(lo), std::abs(hi)); }

    double panel_width_for(const PropagatorSpec& spec, double dt) const {
        double g = max_phase_gradient(spec, dt, span());
        double h = max_panel_width;
        if (g > 0.0) h = std::min(h, rad_per_panel / g);
        return h;
    }

    QuadGrid full_grid(double h) const { return QuadGrid::over_interval(lo, hi, h, order); }
};

namespace detail {

// φ(y_i) = Σ_j w_j e^{-ε x_j²} K(y_i,t_to|x_j,t_from) ψ(x_j)
inline Eigen::VectorXcd apply_kernel(const PropagatorSpec& spec, double t_from, double t_to,
                                     const QuadGrid& gfrom, const Eigen::VectorXcd& vals,
                                     const QuadGrid& gto, double eps) {
    const std::size_t m_to = gto.size();
    const std::size_t m_from = gfrom.size();
    Eigen::VectorXcd out(static_cast<Eigen::Index>(m_to));
    parallel_for(m_to, [&](std::size_t i) {
        const double y = gto.nodes()[i];
        Cx acc = 0.0;
        for (std::size_t j = 0; j < m_from; ++j) {
            const double x = gfrom.nodes()[j];
            double damp = eps > 0.0 ? std::exp(-eps * x * x) : 1.0;
            acc += gfrom.weights()[j] * damp * propagator_finite(spec, y, t_to, x, t_from) *
                   vals(static_cast<Eigen::Index>(j));
        }
        out(static_cast<Eigen::Index>(i)) = acc;
    });
    return out;
}

// exact caustic step: values permute (identity or mirror) with the tag phase
inline Eigen::VectorXcd apply_caustic(const DeltaTag& tag, const QuadGrid& gfrom,
                                      const Eigen::VectorXcd& vals, const QuadGrid& gto) {
    if (gfrom.size() != gto.size())
        throw NumericalError("caustic step needs matching source/target grids");
    const std::size_t m = gfrom.size();
    Eigen::VectorXcd out(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        double want = tag.parity > 0 ? gto.nodes()[i] : -gto.nodes()[i];
        std::size_t j = tag.parity > 0 ? i : m - 1 - i;
        if (std::abs(gfrom.nodes()[j] - want) > 1e-9)
            throw NumericalError("caustic step needs a symmetric grid");
        out(static_cast<Eigen::Index>(i)) = tag.phase * vals(static_cast<Eigen::Index>(j));
    }
    return out;
}

} // namespace detail

struct EvolutionDiagnostics {
    double max_extrapolation_residual = 0.0;
    int laddered_slots = 0;
};

// Restricted evolution of ψ through a homogeneous event. The caller fixes
// the final grid (so results for different events can share it); every
// intermediate grid is aligned to its slot's region boundaries. Unbounded
// slots run the ε ladder and are extrapolated pointwise to ε = 0.
inline WaveFunction restricted_evolution_homogeneous(const WaveFn& psi,
                                                     const HomogeneousEvent& alpha,
                                                     const PropagatorSpec& spec,
                                                     const ConvergenceLadder& ladder,
                                                     const GridSpec& gs, QuadGrid final_grid,
                                                     EvolutionDiagnostics* diag = nullptr) {
    spec.validate();
    ladder.validate();
    if (alpha.dim() != 1 || spec.dim != 1)
        throw UsageError("grid evolution is implemented for d = 1");
    const auto& times = alpha.times();
    const auto& regions = alpha.regions();
    const std::size_t n = times.size();

    WaveFunction out;
    out.time = times.back();

    // only bounded slots may reach outside the box
    for (std::size_t k = 0; k < n; ++k) {
        if (!regions[k].is_bounded()) continue;
        for (const auto& b : regions[k].boxes())
            if (b.lo[0] < gs.lo || b.hi[0] > gs.hi)
                throw UsageError("bounded event region extends beyond the working box");
    }

    if (alpha.is_empty()) {
        out.grid = std::move(final_grid);
        out.values = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(out.grid.size()));
        return out;
    }

    // build the integration grid of each interior slot k = 1..N-1
    std::vector<QuadGrid> grids;
    grids.reserve(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        double dt_out = times[k + 1] - times[k];
        double h = gs.panel_width_for(spec, dt_out);
        if (k > 0) h = std::min(h, gs.panel_width_for(spec, times[k] - times[k - 1]));
        grids.push_back(QuadGrid(slot_segments(regions[k], gs.lo, gs.hi), h, gs.order));
    }

    Eigen::VectorXcd phi(static_cast<Eigen::Index>(grids[0].size()));
    for (std::size_t i = 0; i < grids[0].size(); ++i)
        phi(static_cast<Eigen::Index>(i)) = psi(grids[0].nodes()[i]);

    EvolutionDiagnostics local;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const QuadGrid& src = grids[k];
        const QuadGrid& dst = (k + 2 < n) ? grids[k + 1] : final_grid;
        double t_from = times[k], t_to = times[k + 1];

        if (sho_on_caustic(spec, t_to - t_from)) {
            PropagatorValue v = propagator_value(spec, 0.0, t_to, 0.0, t_from);
            phi = detail::apply_caustic(std::get<DeltaTag>(v), src, phi, dst);
            continue;
        }

        if (regions[k].is_bounded()) {
            phi = detail::apply_kernel(spec, t_from, t_to, src, phi, dst, 0.0);
        } else {
            std::vector<Eigen::VectorXcd> samples;
            samples.reserve(ladder.epsilons.size());
            for (double eps : ladder.epsilons)
                samples.push_back(detail::apply_kernel(spec, t_from, t_to, src, phi, dst, eps));
            double res = 0.0;
            phi = extrapolate_to_zero(ladder.epsilons, std::move(samples), &res);
            local.max_extrapolation_residual = std::max(local.max_extrapolation_residual, res);
            ++local.laddered_slots;
            if (res > ladder.residual_tol)
                throw NumericalError("convergence-factor extrapolation did not converge "
                                     "(residual " +
                                     fmt_g(res) + " > " + fmt_g(ladder.residual_tol) + ")");
        }
    }

    // final slot: multiply by the characteristic function
    out.grid = std::move(final_grid);
    out.values = std::move(phi);
    for (std::size_t i = 0; i < out.grid.size(); ++i)
        if (!regions.back().contains1(out.grid.nodes()[i]))
            out.values(static_cast<Eigen::Index>(i)) = Cx{0.0, 0.0};
    if (diag) {
        diag->max_extrapolation_residual =
            std::max(diag->max_extrapolation_residual, local.max_extrapolation_residual);
        diag->laddered_slots += local.laddered_slots;
    }
    return out;
}

// final grid whose panel edges include every final-slot region boundary of
// the given events (so χ never straddles a panel)
inline QuadGrid make_final_grid(const std::vector<const ContinuumEvent*>& events,
                                const PropagatorSpec& spec, const GridSpec& gs) {
    double h = gs.max_panel_width;
    std::vector<double> cuts{gs.lo, gs.hi};
    for (const auto* ev : events) {
        for (const auto& part : ev->parts()) {
            double dt_last = part.times().back() - part.times()[part.times().size() - 2];
            h = std::min(h, gs.panel_width_for(spec, dt_last));
            const Region& last = part.regions().back();
            for (const auto& b : last.boxes()) {
                if (b.lo[0] > gs.lo && b.lo[0] < gs.hi) cuts.push_back(b.lo[0]);
                if (b.hi[0] > gs.lo && b.hi[0] < gs.hi) cuts.push_back(b.hi[0]);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<std::pair<double, double>> segs;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i] < cuts[i + 1]) segs.push_back({cuts[i], cuts[i + 1]});
    return QuadGrid(std::move(segs), h, gs.order);
}

inline WaveFunction restricted_evolution_continuum(const WaveFn& psi, const ContinuumEvent& alpha,
                                                   const PropagatorSpec& spec,
                                                   const ConvergenceLadder& ladder,
                                                   const GridSpec& gs, const QuadGrid& final_grid,
                                                   EvolutionDiagnostics* diag = nullptr) {
    WaveFunction acc;
    acc.grid = final_grid;
    acc.time = alpha.truncation_time();
    acc.values = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(final_grid.size()));
    for (const auto& part : alpha.parts()) {
        WaveFunction w =
            restricted_evolution_homogeneous(psi, part, spec, ladder, gs, final_grid, diag);
        acc.values += w.values;
    }
    return acc;
}

// D(α,β) = <ψ_α, ψ_β>_0 on a shared final grid.
inline Cx decoherence_continuum(const ContinuumEvent& alpha, const ContinuumEvent& beta,
                                const WaveFn& psi, const PropagatorSpec& spec,
                                const ConvergenceLadder& ladder, const GridSpec& gs,
                                EvolutionDiagnostics* diag = nullptr) {
    if (alpha.truncation_time() != beta.truncation_time())
        throw UsageError("events must share the truncation time");
    QuadGrid fg = make_final_grid({&alpha, &beta}, spec, gs);
    WaveFunction wa = restricted_evolution_continuum(psi, alpha, spec, ladder, gs, fg, diag);
    WaveFunction wb = restricted_evolution_continuum(psi, beta, spec, ladder, gs, fg, diag);
    return l2_inner(wa, wb);
}

inline double quantal_measure_continuum(const ContinuumEvent& alpha, const WaveFn& psi,
                                        const PropagatorSpec& spec,
                                        const ConvergenceLadder& ladder, const GridSpec& gs) {
    return decoherence_continuum(alpha, alpha, psi, spec, ladder, gs).real();
}

struct EsckResult {
    bool applicable = true;
    double residual = 0.0;             // relative to |K(x3,t3|x1,t1)|
    double extrapolation_residual = 0.0;
};

// ESCK composition: lim_{ε→0+} ∫ K(x3,t3|x,t2) K(x,t2|x1,t1) e^{-εx²} dx
// against the closed-form K(x3,t3|x1,t1).
inline EsckResult check_esck(const PropagatorSpec& spec, double x3, double t3, double x1,
                             double t1, double t2, const ConvergenceLadder& ladder,
                             const GridSpec& gs) {
    spec.validate();
    ladder.validate();
    if (!(t1 < t2 && t2 < t3)) throw UsageError("ESCK needs t1 < t2 < t3");
    EsckResult r;
    if (spec.kind == PropagatorKind::SHO) {
        for (double dt : {t2 - t1, t3 - t2, t3 - t1}) {
            if (sho_on_caustic(spec, dt) || sho_near_caustic(spec, dt)) {
                r.applicable = false;
                return r;
            }
        }
    }
    Cx direct = propagator_finite(spec, x3, t3, x1, t1);
    double h = std::min(gs.panel_width_for(spec, t3 - t2), gs.panel_width_for(spec, t2 - t1));
    QuadGrid grid = gs.full_grid(h);

    std::vector<Cx> vals;
    vals.reserve(ladder.epsilons.size());
    for (double eps : ladder.epsilons) {
        std::vector<Cx> partial(grid.size());
        parallel_for(grid.size(), [&](std::size_t j) {
            double x = grid.nodes()[j];
            partial[j] = grid.weights()[j] * std::exp(-eps * x * x) *
                         propagator_finite(spec, x3, t3, x, t2) *
                         propagator_finite(spec, x, t2, x1, t1);
        });
        Cx acc = 0.0;
        for (Cx p : partial) acc += p;
        vals.push_back(acc);
    }
    Cx limit = extrapolate_scalar_to_zero(ladder.epsilons, vals, &r.extrapolation_residual);
    r.residual = std::abs(limit - direct) / std::abs(direct);
    return r;
}

// ψ_α(x_0, 0) = ∫ dx_N K(x_0,0|x_N,t_N) ψ_α(x_N,t_N); for unitary dynamics the
// reverse kernel is the conjugate of the forward one.
inline WaveFunction evolve_back_to_initial(const WaveFunction& w, const PropagatorSpec& spec,
                                           const QuadGrid& target_grid) {
    spec.validate();
    if (w.time <= 0.0) throw UsageError("back-evolution needs a state at positive time");
    if (sho_on_caustic(spec, w.time) || sho_near_caustic(spec, w.time))
        throw NumericalError("back-evolution interval hits an SHO caustic");
    WaveFunction out;
    out.grid = target_grid;
    out.time = 0.0;
    out.values.resize(static_cast<Eigen::Index>(target_grid.size()));
    parallel_for(target_grid.size(), [&](std::size_t i) {
        double x0 = target_grid.nodes()[i];
        Cx acc = 0.0;
        for (std::size_t j = 0; j < w.grid.size(); ++j) {
            double xn = w.grid.nodes()[j];
            acc += w.grid.weights()[j] *
                   std::conj(propagator_finite(spec, xn, w.time, x0, 0.0)) *
                   w.values(static_cast<Eigen::Index>(j));
        }
        out.values(static_cast<Eigen::Index>(i)) = acc;
    });
    return out;
}

// unrestricted evolution helper (the all-Full event without the χ step)
inline WaveFunction evolve_unrestricted(const WaveFn& psi, double t_final,
                                        const PropagatorSpec& spec,
                                        const ConvergenceLadder& ladder, const GridSpec& gs,
                                        const QuadGrid& final_grid,
                                        const std::vector<double>& via_times = {}) {
    std::vector<double> ts{0.0};
    for (double t : via_times)
        if (t > 0.0 && t < t_final) ts.push_back(t);
    ts.push_back(t_final);
    std::vector<Region> rs(ts.size(), Region::full(1));
    HomogeneousEvent ev(ts, rs);
    return restricted_evolution_homogeneous(psi, ev, spec, ladder, gs, final_grid);
}

// Two-time amplitude g(x) = ∫_A K(x,T|x0,0) ψ(x0) dx0 evaluated at arbitrary
// points; the workhorse of the indicator reconstruction.
inline std::vector<Cx> two_time_amplitudes(const WaveFn& psi, const Region& a, double T,
                                           const std::vector<double>& xs,
                                           const PropagatorSpec& spec, const GridSpec& gs) {
    if (!a.is_bounded()) throw UsageError("two_time_amplitudes needs a bounded initial region");
    QuadGrid g(slot_segments(a, gs.lo, gs.hi), gs.panel_width_for(spec, T), gs.order);
    std::vector<Cx> psi_vals(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) psi_vals[j] = psi(g.nodes()[j]);
    std::vector<Cx> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
        Cx acc = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j)
            acc += g.weights()[j] * propagator_finite(spec, xs[i], T, g.nodes()[j], 0.0) *
                   psi_vals[j];
        out[i] = acc;
    });
    return out;
}

} // namespace qm
