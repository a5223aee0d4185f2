#pragma once

// Constructive reconstruction of characteristic functions and step functions
// inside the image of f0: choose initial sets A_i where the two-time
// amplitude is bounded below, cut the target interval into cells D_ij small
// enough that the amplitude varies less than ε·P/√|I| across each, and weight
// the events (A_i, D_ij) by 1/ψ_{α_ij}(x_ij). The resulting L² error is
// verified a posteriori by quadrature.

#include "continuum.hpp"
#include "gns.hpp"
#include "homogeneous.hpp"
#include "quadrature.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace qm {

// The reconstruction hypothesis (a nonvanishing amplitude reaching the
// final point) failed there.
struct HypothesisFailureError : std::runtime_error {
    double final_point;
    explicit HypothesisFailureError(double x)
        : std::runtime_error("reconstruction hypothesis failure: no candidate initial set gives "
                             "a nonvanishing amplitude at final point x = " +
                             fmt_g(x)),
          final_point(x) {}
};

struct ContinuumEventLess {
    bool operator()(const ContinuumEvent& a, const ContinuumEvent& b) const {
        return continuum_event_less(a, b);
    }
};

using ContinuumFreeVector = FreeVector<ContinuumEvent, ContinuumEventLess>;

// f0(u) = Σ_α u(α) ψ_α on the given final grid.
inline WaveFunction f0_map_continuum(const ContinuumFreeVector& u, const WaveFn& psi,
                                     const PropagatorSpec& spec, const ConvergenceLadder& ladder,
                                     const GridSpec& gs, const QuadGrid& final_grid) {
    WaveFunction acc;
    acc.grid = final_grid;
    acc.values = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(final_grid.size()));
    for (const auto& [alpha, c] : u.support()) {
        WaveFunction w = restricted_evolution_continuum(psi, alpha, spec, ladder, gs, final_grid);
        acc.values += c * w.values;
        acc.time = w.time;
    }
    return acc;
}

struct ReconstructionParams {
    int interval_samples = 160;   // membership sampling of I
    double hypothesis_rel = 1e-8; // |g| below this (relative) is a failure
    double safety = 0.5;          // oscillation-budget headroom
    int max_refine_rounds = 4;
    int probes_per_cell = 5;
    int error_panels_per_cell = 2;
};

struct ReconstructionCell {
    double lo, hi;
    std::size_t candidate;
    double midpoint;
    Cx amplitude; // g(midpoint)
};

struct ReconstructionResult {
    ContinuumFreeVector u;
    double verified_error = 0.0;
    int cell_count = 0;
    double amplitude_floor = 0.0; // P
    double max_cell_width = 0.0;  // δ
    std::vector<ReconstructionCell> cells;
};

namespace detail {

// candidate initial boxes scanned around the classical source point
inline std::vector<Region> reconstruction_candidates(const WaveFn& psi, const GridSpec& gs) {
    QuadGrid probe = QuadGrid::over_interval(gs.lo, gs.hi, (gs.hi - gs.lo) / 512.0, 4);
    double best = -1.0, x_src = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        double a = std::abs(psi(probe.nodes()[i]));
        mass += probe.weights()[i] * a * a;
        if (a > best) {
            best = a;
            x_src = probe.nodes()[i];
        }
    }
    // half-mass radius as the width scale
    double sigma = 0.0;
    for (double w = (gs.hi - gs.lo) / 256.0; w < gs.hi - gs.lo; w *= 1.3) {
        double inside = 0.0;
        for (std::size_t i = 0; i < probe.size(); ++i)
            if (std::abs(probe.nodes()[i] - x_src) <= w)
                inside += probe.weights()[i] * std::norm(psi(probe.nodes()[i]));
        if (inside >= 0.5 * mass) {
            sigma = w;
            break;
        }
    }
    if (sigma <= 0.0) sigma = (gs.hi - gs.lo) / 16.0;

    std::vector<Region> out;
    for (double width : {2.0 * sigma, 4.0 * sigma, 6.0 * sigma}) {
        for (double center : {x_src - sigma, x_src, x_src + sigma}) {
            double lo = std::max(gs.lo, center - width / 2.0);
            double hi = std::min(gs.hi, center + width / 2.0);
            if (lo < hi) out.push_back(Region::interval(lo, hi));
        }
    }
    return out;
}

} // namespace detail

// Builds u with ||χ_I - f0(u)|| < ε for a compact interval I at truncation
// time T. Throws HypothesisFailureError when no candidate initial set yields
// a nonvanishing amplitude at some point of I.
inline ReconstructionResult reconstruct_indicator(const Box& interval, double eps, const WaveFn& psi,
                                       const PropagatorSpec& spec, double T, const GridSpec& gs,
                                       const ReconstructionParams& params = {}) {
    spec.validate();
    if (interval.dim() != 1) throw UsageError("reconstruct_indicator is implemented for d = 1");
    if (!(eps > 0.0)) throw UsageError("target ε must be positive");
    const double ilo = interval.lo[0], ihi = interval.hi[0];
    if (!(ilo < ihi)) throw UsageError("target interval must have positive measure");
    if (ilo < gs.lo || ihi > gs.hi)
        throw UsageError("target interval extends beyond the working box");
    const double ilen = ihi - ilo;

    // sample points (strip midpoints) and candidate amplitudes
    const int S = params.interval_samples;
    std::vector<double> xs(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
        xs[static_cast<std::size_t>(s)] = ilo + (s + 0.5) * ilen / S;

    std::vector<Region> candidates = detail::reconstruction_candidates(psi, gs);
    std::vector<std::vector<Cx>> g(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c)
        g[c] = two_time_amplitudes(psi, candidates[c], T, xs, spec, gs);

    double scale = 0.0;
    for (const auto& row : g)
        for (Cx v : row) scale = std::max(scale, std::abs(v));

    std::vector<std::size_t> pick(static_cast<std::size_t>(S));
    double p_floor = 0.0;
    bool first = true;
    for (int s = 0; s < S; ++s) {
        std::size_t best_c = 0;
        double best_mag = -1.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            double mag = std::abs(g[c][static_cast<std::size_t>(s)]);
            if (mag > best_mag) {
                best_mag = mag;
                best_c = c;
            }
        }
        if (scale <= 0.0 || best_mag <= params.hypothesis_rel * scale)
            throw HypothesisFailureError(xs[static_cast<std::size_t>(s)]);
        pick[static_cast<std::size_t>(s)] = best_c;
        p_floor = first ? best_mag : std::min(p_floor, best_mag);
        first = false;
    }

    // maximal runs of a common candidate become the cover sets C_i
    struct Run {
        double lo, hi;
        std::size_t candidate;
    };
    std::vector<Run> runs;
    for (int s = 0; s < S; ++s) {
        double strip_lo = ilo + s * ilen / S;
        double strip_hi = ilo + (s + 1) * ilen / S;
        if (!runs.empty() && runs.back().candidate == pick[static_cast<std::size_t>(s)])
            runs.back().hi = strip_hi;
        else
            runs.push_back({strip_lo, strip_hi, pick[static_cast<std::size_t>(s)]});
    }

    auto amp_at = [&](std::size_t cand, const std::vector<double>& pts) {
        return two_time_amplitudes(psi, candidates[cand], T, pts, spec, gs);
    };

    double osc_target = params.safety * eps * p_floor / std::sqrt(ilen);
    ReconstructionResult result;
    for (int round = 0; round < params.max_refine_rounds; ++round) {
        result = ReconstructionResult{};
        result.amplitude_floor = p_floor;

        for (const auto& run : runs) {
            int cells = 1;
            for (;;) {
                double width = (run.hi - run.lo) / cells;
                bool ok = true;
                std::vector<double> probes;
                for (int j = 0; j < cells && ok; ++j) {
                    probes.clear();
                    for (int q = 0; q < params.probes_per_cell; ++q)
                        probes.push_back(run.lo + j * width +
                                         (q + 0.5) * width / params.probes_per_cell);
                    std::vector<Cx> vals = amp_at(run.candidate, probes);
                    double mx_osc = 0.0;
                    for (std::size_t a = 0; a < vals.size(); ++a) {
                        if (std::abs(vals[a]) <= params.hypothesis_rel * scale)
                            throw HypothesisFailureError(probes[a]);
                        result.amplitude_floor =
                            std::min(result.amplitude_floor, std::abs(vals[a]));
                        for (std::size_t b = a + 1; b < vals.size(); ++b)
                            mx_osc = std::max(mx_osc, std::abs(vals[a] - vals[b]));
                    }
                    if (mx_osc >= osc_target) ok = false;
                }
                if (ok) break;
                cells *= 2;
                if (cells > (1 << 16))
                    throw NumericalError("reconstruction cell subdivision did not terminate");
            }
            double width = (run.hi - run.lo) / cells;
            std::vector<double> mids;
            for (int j = 0; j < cells; ++j) mids.push_back(run.lo + (j + 0.5) * width);
            std::vector<Cx> amps = amp_at(run.candidate, mids);
            for (int j = 0; j < cells; ++j) {
                result.cells.push_back({run.lo + j * width, run.lo + (j + 1) * width,
                                        run.candidate, mids[static_cast<std::size_t>(j)],
                                        amps[static_cast<std::size_t>(j)]});
                result.max_cell_width = std::max(result.max_cell_width, width);
            }
        }
        result.cell_count = static_cast<int>(result.cells.size());

        // assemble u and verify a posteriori, cell by cell
        double err_sq = 0.0;
        std::vector<double> gl_n, gl_w;
        gauss_legendre(8, gl_n, gl_w);
        for (const auto& cell : result.cells) {
            if (std::abs(cell.amplitude) <= params.hypothesis_rel * scale)
                throw HypothesisFailureError(cell.midpoint);
            HomogeneousEvent ev({0.0, T},
                                {candidates[cell.candidate], Region::interval(cell.lo, cell.hi)});
            result.u.add(ContinuumEvent::single(std::move(ev)), Cx{1.0, 0.0} / cell.amplitude);

            int panels = params.error_panels_per_cell;
            double h = (cell.hi - cell.lo) / panels;
            std::vector<double> pts;
            for (int p = 0; p < panels; ++p)
                for (std::size_t q = 0; q < gl_n.size(); ++q)
                    pts.push_back(cell.lo + (p + 0.5) * h + 0.5 * h * gl_n[q]);
            std::vector<Cx> vals = amp_at(cell.candidate, pts);
            std::size_t idx = 0;
            for (int p = 0; p < panels; ++p)
                for (std::size_t q = 0; q < gl_n.size(); ++q, ++idx)
                    err_sq += 0.5 * h * gl_w[q] *
                              std::norm(Cx{1.0, 0.0} - vals[idx] / cell.amplitude);
        }
        result.verified_error = std::sqrt(err_sq);
        if (result.verified_error < eps) return result;
        osc_target /= 2.0; // tighten and retry
    }
    throw NumericalError("reconstruction verified error " +
                         fmt_g(result.verified_error) + " did not reach target " + fmt_g(eps));
}

// Weighted-interval step function S = Σ s_i χ_{I_i}.
struct StepTerm {
    Cx weight;
    Box interval;
};

struct StepReconstruction {
    ContinuumFreeVector u;
    double verified_error = 0.0;
    int cell_count = 0;
};

// Per-term budget ε/(N·M) with M = max |s_i|; supports are disjoint so the
// verified errors combine exactly in quadrature.
inline StepReconstruction reconstruct_step_function(const std::vector<StepTerm>& terms,
                                                    double eps, const WaveFn& psi,
                                                    const PropagatorSpec& spec, double T,
                                                    const GridSpec& gs,
                                                    const ReconstructionParams& params = {}) {
    StepReconstruction out;
    if (terms.empty()) return out; // S = 0: empty vector, zero error
    if (!(eps > 0.0)) throw UsageError("target ε must be positive");

    double mmax = 0.0;
    for (const auto& t : terms) {
        if (t.weight == Cx{0.0, 0.0}) throw UsageError("step function weights must be nonzero");
        mmax = std::max(mmax, std::abs(t.weight));
    }
    for (std::size_t i = 0; i < terms.size(); ++i)
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            if (box_intersection(terms[i].interval, terms[j].interval))
                throw UsageError("step function intervals must be disjoint");
        }

    const double per_term = eps / (static_cast<double>(terms.size()) * mmax);
    double err_sq = 0.0;
    for (const auto& t : terms) {
        ReconstructionResult r = reconstruct_indicator(t.interval, per_term, psi, spec, T, gs, params);
        ContinuumFreeVector scaled = r.u;
        scaled *= t.weight;
        out.u += scaled;
        out.cell_count += r.cell_count;
        err_sq += std::norm(t.weight) * r.verified_error * r.verified_error;
    }
    out.verified_error = std::sqrt(err_sq);
    return out;
}

} // namespace qm
