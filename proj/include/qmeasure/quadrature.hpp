#pragma once

// Oscillatory quadrature support: composite Gauss-Legendre panels aligned to
// region boundaries, and Richardson (Neville) extrapolation of the
// convergence-factor ladder ε -> 0+.

#include "region.hpp"
#include "util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

namespace qm {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
inline void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 1) throw UsageError("Gauss-Legendre order must be >= 1");
    nodes.assign(static_cast<std::size_t>(order), 0.0);
    weights.assign(static_cast<std::size_t>(order), 0.0);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (order + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(order - 1 - i)] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(order - 1 - i)] = w;
    }
}

// 1-d composite quadrature grid: GL panels laid over a union of intervals,
// with panel edges aligned to the interval boundaries.
class QuadGrid {
  public:
    QuadGrid() = default;

    // segments: disjoint, sorted [lo,hi] pairs; max_h: panel width cap
    QuadGrid(std::vector<std::pair<double, double>> segments, double max_h, int order)
        : segments_(std::move(segments)), order_(order) {
        if (max_h <= 0.0) throw UsageError("panel width must be positive");
        std::vector<double> gn, gw;
        gauss_legendre(order, gn, gw);
        for (const auto& [lo, hi] : segments_) {
            if (!(lo < hi)) continue;
            int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_h)));
            double h = (hi - lo) / panels;
            for (int p = 0; p < panels; ++p) {
                double a = lo + p * h, b = a + h;
                for (int k = 0; k < order; ++k) {
                    nodes_.push_back(0.5 * (a + b) + 0.5 * (b - a) * gn[static_cast<std::size_t>(k)]);
                    weights_.push_back(0.5 * (b - a) * gw[static_cast<std::size_t>(k)]);
                }
            }
        }
    }

    static QuadGrid over_interval(double lo, double hi, double max_h, int order) {
        return QuadGrid({{lo, hi}}, max_h, order);
    }

    std::size_t size() const { return nodes_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    int order() const { return order_; }
    const std::vector<std::pair<double, double>>& segments() const { return segments_; }

    double lo() const { return segments_.empty() ? 0.0 : segments_.front().first; }
    double hi() const { return segments_.empty() ? 0.0 : segments_.back().second; }

    bool same_nodes(const QuadGrid& o) const {
        return nodes_ == o.nodes_ && weights_ == o.weights_;
    }

    // symmetric about 0 (needed for exact parity/caustic steps)
    bool symmetric() const {
        const std::size_t m = nodes_.size();
        for (std::size_t i = 0; i < m; ++i)
            if (std::abs(nodes_[i] + nodes_[m - 1 - i]) > 1e-10) return false;
        return true;
    }

  private:
    std::vector<std::pair<double, double>> segments_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    int order_ = 0;
};

// Integration domain for one time slot: the region clipped to the working
// box. Bounded regions keep only their own intervals; co-bounded regions use
// box-minus-holes. Breakpoints of the region inside the box become panel
// edges so characteristic functions never straddle a panel.
inline std::vector<std::pair<double, double>> slot_segments(const Region& region, double box_lo,
                                                            double box_hi) {
    if (region.dim() != 1) throw UsageError("grid evolution supports d = 1 regions");
    Region box = Region::interval(box_lo, box_hi);
    Region clipped = region_intersection(region, box).canonical();
    std::vector<std::pair<double, double>> segs;
    for (const auto& b : clipped.boxes())
        if (b.lo[0] < b.hi[0]) segs.push_back({b.lo[0], b.hi[0]});
    std::sort(segs.begin(), segs.end());
    return segs;
}

// Decreasing ε ladder for the convergence-factor limit, with the Neville
// polynomial extrapolation order it supports.
struct ConvergenceLadder {
    std::vector<double> epsilons;
    double residual_tol = 1e-3; // relative; extrapolation failure threshold

    ConvergenceLadder() : epsilons{0.1, 0.05, 0.025, 0.0125, 0.00625} {}
    ConvergenceLadder(std::vector<double> eps, double tol = 1e-3)
        : epsilons(std::move(eps)), residual_tol(tol) {
        validate();
    }

    void validate() const {
        if (epsilons.size() < 3)
            throw UsageError("convergence ladder needs at least 3 epsilons");
        for (std::size_t i = 0; i + 1 < epsilons.size(); ++i)
            if (!(epsilons[i] > epsilons[i + 1]) || epsilons[i + 1] <= 0.0)
                throw UsageError("convergence ladder must strictly decrease to 0");
    }

    int extrapolation_order() const { return static_cast<int>(epsilons.size()) - 1; }
};

// Neville extrapolation of F(ε) to ε = 0 for vector-valued samples.
// Returns the extrapolated value; residual receives the magnitude of the last
// tableau correction relative to the result scale.
inline Eigen::VectorXcd extrapolate_to_zero(const std::vector<double>& eps,
                                            std::vector<Eigen::VectorXcd> samples,
                                            double* residual = nullptr) {
    const std::size_t m = eps.size();
    if (samples.size() != m || m < 2) throw UsageError("extrapolation needs matching samples");
    Eigen::VectorXcd prev_diag = samples.back();
    for (std::size_t level = 1; level < m; ++level) {
        for (std::size_t i = 0; i + level < m; ++i) {
            double e_i = eps[i], e_il = eps[i + level];
            samples[i] = (e_i * samples[i + 1] - e_il * samples[i]) / (e_i - e_il);
        }
        if (level + 1 < m) prev_diag = samples[0];
    }
    if (residual) {
        double scale = std::max(samples[0].norm(), 1e-300);
        *residual = (samples[0] - prev_diag).norm() / scale;
    }
    return samples[0];
}

inline Cx extrapolate_scalar_to_zero(const std::vector<double>& eps, const std::vector<Cx>& vals,
                                     double* residual = nullptr) {
    std::vector<Eigen::VectorXcd> samples;
    samples.reserve(vals.size());
    for (Cx v : vals) {
        Eigen::VectorXcd x(1);
        x(0) = v;
        samples.push_back(std::move(x));
    }
    Eigen::VectorXcd out = extrapolate_to_zero(eps, std::move(samples), residual);
    return out(0);
}

} // namespace qm
