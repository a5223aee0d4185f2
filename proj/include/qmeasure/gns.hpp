#pragma once

// The history Hilbert space: free vectors on the event algebra, the
// degenerate inner product <u,v>_1 = Σ u(α)* D(α,β) v(β), the quotient space
// realized through an eigendecomposition of the generator Gram, and the
// explicit isomorphism machinery (f0, onto witnesses, preimages).

#include "dynamics.hpp"
#include "event.hpp"
#include "util.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <variant>
#include <vector>

namespace qm {

// Finitely supported complex function on the event algebra. Zero
// coefficients are never stored.
template <typename EventT, typename Less = std::less<EventT>>
class FreeVector {
  public:
    using Map = std::map<EventT, Cx, Less>;

    FreeVector() = default;

    static FreeVector delta(const EventT& e, Cx coeff = Cx{1.0, 0.0}) {
        FreeVector v;
        v.add(e, coeff);
        return v;
    }

    void add(const EventT& e, Cx coeff) {
        if (coeff == Cx{0.0, 0.0}) return;
        auto [it, inserted] = support_.try_emplace(e, coeff);
        if (!inserted) {
            it->second += coeff;
            if (std::abs(it->second) == 0.0) support_.erase(it);
        }
    }

    const Map& support() const { return support_; }
    std::size_t size() const { return support_.size(); }
    bool empty() const { return support_.empty(); }

    FreeVector& operator+=(const FreeVector& o) {
        for (const auto& [e, c] : o.support_) add(e, c);
        return *this;
    }

    FreeVector& operator-=(const FreeVector& o) {
        for (const auto& [e, c] : o.support_) add(e, -c);
        return *this;
    }

    FreeVector& operator*=(Cx s) {
        if (s == Cx{0.0, 0.0}) {
            support_.clear();
            return *this;
        }
        for (auto& [e, c] : support_) c *= s;
        return *this;
    }

    friend FreeVector operator+(FreeVector a, const FreeVector& b) { return a += b; }
    friend FreeVector operator-(FreeVector a, const FreeVector& b) { return a -= b; }
    friend FreeVector operator*(Cx s, FreeVector v) { return v *= s; }

  private:
    Map support_;
};

// <u,v>_1 via the decoherence functional; D is any callable (EventT, EventT) -> Cx.
template <typename EventT, typename Less, typename DFunc>
Cx inner_product_h1(const FreeVector<EventT, Less>& u, const FreeVector<EventT, Less>& v,
                    DFunc&& D) {
    Cx sum = 0.0;
    for (const auto& [a, ua] : u.support())
        for (const auto& [b, vb] : v.support()) sum += std::conj(ua) * D(a, b) * vb;
    return sum;
}

template <typename EventT, typename Less, typename DFunc>
double norm_h1(const FreeVector<EventT, Less>& u, DFunc&& D) {
    double sq = inner_product_h1(u, u, D).real();
    return sq > 0.0 ? std::sqrt(sq) : 0.0;
}

// Quotient of the span of generator deltas by the null space of the Gram.
// factor is rank x M; quotient coordinates of a coefficient vector c are
// factor * c, and <coords(u), coords(v)> reproduces u† G v up to rank_tol.
template <typename EventT>
struct HistoryHilbertSpace {
    std::vector<EventT> generators;
    Matrix gram;
    int rank = 0;
    Matrix factor;

    Eigen::VectorXcd coords(const Eigen::VectorXcd& coefficients) const {
        if (coefficients.size() != gram.rows())
            throw UsageError("coefficient vector length does not match generators");
        return factor * coefficients;
    }
};

template <typename EventT, typename DFunc>
HistoryHilbertSpace<EventT> build_history_hilbert_space(std::vector<EventT> generators, DFunc&& D,
                                                        double rank_tol = 1e-10,
                                                        double psd_slack = kPsdSlack) {
    if (generators.empty()) throw UsageError("history Hilbert space needs generators");
    const std::size_t m = generators.size();
    Matrix g(m, m);
    parallel_for(m, [&](std::size_t i) {
        for (std::size_t j = 0; j < m; ++j)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                D(generators[i], generators[j]);
    });
    Matrix herm = (g + g.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
    const auto& vals = es.eigenvalues();
    double top = vals.maxCoeff();
    if (vals.minCoeff() < psd_slack * std::max(1.0, top))
        throw ValidationError("generator Gram is not positive semidefinite");

    int rank = 0;
    for (Eigen::Index k = 0; k < vals.size(); ++k)
        if (vals(k) > rank_tol * std::max(top, 0.0)) ++rank;

    Matrix factor(rank, m);
    int row = 0;
    for (Eigen::Index k = vals.size() - 1; k >= 0; --k) { // descending eigenvalues
        if (vals(k) <= rank_tol * std::max(top, 0.0)) continue;
        factor.row(row++) = std::sqrt(vals(k)) * es.eigenvectors().col(k).adjoint();
    }
    return {std::move(generators), std::move(g), rank, std::move(factor)};
}

// f0(u) = Σ_α u(α) ψ_α for a finite system.
template <typename Less>
StateVector f0_map(const FreeVector<FiniteEvent, Less>& u, const QuantumMeasureSystem& sys) {
    if (!sys.pure()) throw UsageError("f0_map is defined for pure initial states");
    StateVector out = StateVector::Zero(sys.space().configs());
    for (const auto& [alpha, c] : u.support())
        out += c * restricted_evolution_event(sys.pure_state(), alpha, sys.space(),
                                              sys.schedule());
    return out;
}

// All singleton generators of a finite sample space, in enumeration order.
inline std::vector<FiniteEvent> singleton_generators(const FiniteSampleSpace& space) {
    std::vector<FiniteEvent> out;
    out.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        FiniteEvent e(space);
        e.insert(i);
        out.push_back(std::move(e));
    }
    return out;
}

// dim H2 for the full singleton family, computed from the compact operator
// T = Σ_γ Ψ_γ Ψ_γ† (same nonzero spectrum as the singleton Gram G = W W†).
// For mixed states Ψ_γ stacks the √p_k-weighted branch evolutions.
inline int singleton_rank(const QuantumMeasureSystem& sys, double rank_tol = 1e-10) {
    const auto& space = sys.space();
    std::vector<DensityMatrix::Component> branches;
    if (sys.pure())
        branches.push_back({1.0, sys.pure_state()});
    else
        branches = sys.density().components();

    const int n = space.configs();
    const int dim = n * static_cast<int>(branches.size());
    Matrix t = Matrix::Zero(dim, dim);
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
        History gamma = space.history_at(idx);
        Eigen::VectorXcd stacked(dim);
        for (std::size_t k = 0; k < branches.size(); ++k)
            stacked.segment(static_cast<Eigen::Index>(k) * n, n) =
                std::sqrt(branches[k].weight) *
                restricted_evolution_history(branches[k].state, gamma, sys.schedule());
        t += stacked * stacked.adjoint();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    double top = es.eigenvalues().maxCoeff();
    int rank = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()(k) > rank_tol * std::max(top, 0.0)) ++rank;
    return rank;
}

// One history per final configuration with nonzero restricted amplitude.
struct OntoWitness {
    std::vector<History> histories; // histories[j-1] ends at configuration j
    std::vector<Cx> amplitudes;     // (ψ_{γ^j})_j
};

struct NotOnto {
    std::vector<int> unreachable; // final configurations with no nonzero-amplitude history
    OntoWitness partial;          // best found for the reachable ones
};

using WitnessResult = std::variant<OntoWitness, NotOnto>;

namespace detail {

inline Cx history_amplitude(const StateVector& psi, const History& gamma,
                            const EvolutionSchedule& sched) {
    Cx amp = psi(gamma.configs.front() - 1);
    for (int k = 0; k + 1 < sched.num_times(); ++k)
        amp *= sched.step(k)(gamma.configs[static_cast<std::size_t>(k) + 1] - 1,
                             gamma.configs[static_cast<std::size_t>(k)] - 1);
    return amp;
}

// Greedy backwards from the fixed final slot: each step picks the factor of
// largest magnitude.
inline History greedy_history_to(int j, const StateVector& psi, const EvolutionSchedule& sched) {
    const int n = sched.dim();
    const int num_times = sched.num_times();
    History h;
    h.configs.assign(static_cast<std::size_t>(num_times), j);
    int cur = j;
    for (int k = num_times - 2; k >= 1; --k) {
        const Matrix& u = sched.step(k);
        int best = 1;
        double best_mag = -1.0;
        for (int c = 1; c <= n; ++c)
            if (std::abs(u(cur - 1, c - 1)) > best_mag) {
                best_mag = std::abs(u(cur - 1, c - 1));
                best = c;
            }
        h.configs[static_cast<std::size_t>(k)] = best;
        cur = best;
    }
    const Matrix& u0 = sched.step(0);
    int best = 1;
    double best_mag = -1.0;
    for (int c = 1; c <= n; ++c) {
        double mag = std::abs(u0(cur - 1, c - 1) * psi(c - 1));
        if (mag > best_mag) {
            best_mag = mag;
            best = c;
        }
    }
    h.configs[0] = best;
    return h;
}

} // namespace detail

// Witness search: greedy per final configuration, exhaustive
// fallback on small spaces (n^N <= exhaustive_cap).
inline WitnessResult onto_witness_search(const QuantumMeasureSystem& sys,
                                         double witness_tol = 1e-8,
                                         std::size_t exhaustive_cap = 10000) {
    if (!sys.pure()) throw UsageError("witness search is defined for pure initial states");
    const auto& space = sys.space();
    const auto& sched = sys.schedule();
    const StateVector& psi = sys.pure_state();
    const int n = space.configs();

    std::vector<History> best(static_cast<std::size_t>(n));
    std::vector<Cx> amp(static_cast<std::size_t>(n), Cx{0.0, 0.0});

    for (int j = 1; j <= n; ++j) {
        History h = detail::greedy_history_to(j, psi, sched);
        best[static_cast<std::size_t>(j - 1)] = h;
        amp[static_cast<std::size_t>(j - 1)] = detail::history_amplitude(psi, h, sched);
    }

    double scale = 0.0;
    for (const auto& a : amp) scale = std::max(scale, std::abs(a));

    // exhaustive fallback for final slots the greedy pass left at ~zero
    if (space.size() <= exhaustive_cap) {
        for (int j = 1; j <= n; ++j) {
            if (std::abs(amp[static_cast<std::size_t>(j - 1)]) > witness_tol * scale && scale > 0.0)
                continue;
            for (std::size_t idx = 0; idx < space.size(); ++idx) {
                History h = space.history_at(idx);
                if (h.configs.back() != j) continue;
                Cx a = detail::history_amplitude(psi, h, sched);
                if (std::abs(a) > std::abs(amp[static_cast<std::size_t>(j - 1)])) {
                    amp[static_cast<std::size_t>(j - 1)] = a;
                    best[static_cast<std::size_t>(j - 1)] = h;
                }
            }
            scale = std::max(scale, std::abs(amp[static_cast<std::size_t>(j - 1)]));
        }
    }

    std::vector<int> unreachable;
    for (int j = 1; j <= n; ++j)
        if (std::abs(amp[static_cast<std::size_t>(j - 1)]) <= witness_tol * scale || scale == 0.0)
            unreachable.push_back(j);

    OntoWitness w{std::move(best), std::move(amp)};
    if (unreachable.empty()) return w;
    return NotOnto{std::move(unreachable), std::move(w)};
}

// Explicit preimage from a witness: u = Σ_j φ_j/(ψ_{γ^j})_j δ_{{γ^j}} with f0(u) = φ.
inline FreeVector<FiniteEvent> invert_via_witness(const StateVector& phi, const OntoWitness& w,
                                                  const FiniteSampleSpace& space,
                                                  double witness_tol = 1e-300) {
    if (static_cast<std::size_t>(phi.size()) != w.histories.size())
        throw UsageError("target vector length does not match witness");
    FreeVector<FiniteEvent> u;
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
        if (phi(j) == Cx{0.0, 0.0}) continue;
        Cx a = w.amplitudes[static_cast<std::size_t>(j)];
        if (std::abs(a) <= witness_tol)
            throw ValidationError("witness amplitude is zero for a required configuration");
        u.add(FiniteEvent::singleton(space, w.histories[static_cast<std::size_t>(j)]), phi(j) / a);
    }
    return u;
}

} // namespace qm
