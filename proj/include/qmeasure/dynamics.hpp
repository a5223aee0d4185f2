#pragma once

// Finite-configuration quantum measure systems: unitary schedules, restricted
// evolution, the decoherence functional D(α,β) = <ψ_α, ψ_β>, the quantal
// measure μ(α) = D(α,α), and axiom verification.

#include "event.hpp"
#include "util.hpp"

#include <Eigen/Dense>

#include <optional>
#include <variant>
#include <vector>

namespace qm {

using StateVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kUnitarityTol = 1e-10;
inline constexpr double kPsdSlack = -1e-10;
inline constexpr double kExactTol = 1e-12;

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Unit-norm check for initial states.
inline void require_normalized(const StateVector& psi, double tol = 1e-12) {
    if (std::abs(psi.norm() - 1.0) > tol)
        throw ValidationError("initial state is not unit norm");
}

class DensityMatrix {
  public:
    explicit DensityMatrix(Matrix rho, double tol = 1e-12) : rho_(std::move(rho)) {
        if (rho_.rows() != rho_.cols()) throw ValidationError("density matrix must be square");
        if (max_abs(rho_ - rho_.adjoint()) > tol)
            throw ValidationError("density matrix is not Hermitian");
        if (std::abs(rho_.trace().real() - 1.0) > tol || std::abs(rho_.trace().imag()) > tol)
            throw ValidationError("density matrix trace is not 1");
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho_);
        if (es.eigenvalues().minCoeff() < -tol)
            throw ValidationError("density matrix is not positive semidefinite");
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
    }

    const Matrix& matrix() const { return rho_; }
    Eigen::Index size() const { return rho_.rows(); }

    // spectral decomposition with eigenvalue cutoff; defines the rank
    struct Component {
        double weight;
        StateVector state;
    };
    std::vector<Component> components(double cutoff = 1e-12) const {
        std::vector<Component> out;
        for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) {
            double p = eigenvalues_(k);
            if (p > cutoff) out.push_back({p, eigenvectors_.col(k)});
        }
        return out;
    }

    int rank(double cutoff = 1e-12) const { return static_cast<int>(components(cutoff).size()); }

  private:
    Matrix rho_;
    Eigen::VectorXd eigenvalues_;
    Matrix eigenvectors_;
};

// Unitaries between successive times. Steps are validated against
// ||U†U - I||_max <= 1e-10 unless constructed with unchecked().
class EvolutionSchedule {
  public:
    EvolutionSchedule(std::vector<double> times, std::vector<Matrix> steps)
        : EvolutionSchedule(std::move(times), std::move(steps), true) {}

    static EvolutionSchedule unchecked(std::vector<double> times, std::vector<Matrix> steps) {
        return EvolutionSchedule(std::move(times), std::move(steps), false);
    }

    int dim() const { return static_cast<int>(steps_.front().rows()); }
    int num_times() const { return static_cast<int>(times_.size()); }
    const std::vector<double>& times() const { return times_; }

    // U(t_{k+1}, t_k) for step index k in [0, N-2]
    const Matrix& step(int k) const { return steps_.at(static_cast<std::size_t>(k)); }

    // composite U(t_l, t_k) by folding (product of steps k..l-1)
    Matrix composite(int k, int l) const {
        if (k < 0 || l >= num_times() || k > l) throw UsageError("composite indices out of range");
        Matrix u = Matrix::Identity(dim(), dim());
        for (int s = k; s < l; ++s) u = step(s) * u;
        return u;
    }

    double max_unitarity_defect() const {
        double worst = 0.0;
        const Matrix id = Matrix::Identity(dim(), dim());
        for (const auto& u : steps_) worst = std::max(worst, max_abs(u.adjoint() * u - id));
        return worst;
    }

  private:
    EvolutionSchedule(std::vector<double> times, std::vector<Matrix> steps, bool check)
        : times_(std::move(times)), steps_(std::move(steps)) {
        if (times_.size() < 2) throw UsageError("schedule needs at least two times");
        if (steps_.size() + 1 != times_.size())
            throw UsageError("schedule needs exactly N-1 step unitaries");
        for (std::size_t k = 1; k < times_.size(); ++k)
            if (!(times_[k - 1] < times_[k]))
                throw UsageError("schedule times must strictly increase");
        Eigen::Index n = steps_.front().rows();
        for (const auto& u : steps_)
            if (u.rows() != n || u.cols() != n)
                throw UsageError("schedule steps must be square matrices of one size");
        if (check && max_unitarity_defect() > kUnitarityTol)
            throw ValidationError("schedule step is not unitary");
    }

    std::vector<double> times_;
    std::vector<Matrix> steps_;
};

// ψ_γ = P^{γ_N} U(t_N,t_{N-1}) ... P^{γ_2} U(t_2,t_1) P^{γ_1} ψ.
// The result is supported on configuration γ_N with amplitude
// U_{γ_N γ_{N-1}} ... U_{γ_2 γ_1} ψ(γ_1).
inline StateVector restricted_evolution_history(const StateVector& psi, const History& gamma,
                                                const EvolutionSchedule& sched) {
    if (static_cast<int>(gamma.length()) != sched.num_times())
        throw UsageError("history length does not match schedule");
    const int n = sched.dim();
    for (int c : gamma.configs)
        if (c < 1 || c > n) throw UsageError("history configuration out of range");
    Cx amp = psi(gamma.configs.front() - 1);
    for (int k = 0; k + 1 < sched.num_times(); ++k)
        amp *= sched.step(k)(gamma.configs[static_cast<std::size_t>(k) + 1] - 1,
                             gamma.configs[static_cast<std::size_t>(k)] - 1);
    StateVector out = StateVector::Zero(n);
    out(gamma.configs.back() - 1) = amp;
    return out;
}

// ψ_α = Σ_{γ∈α} ψ_γ
inline StateVector restricted_evolution_event(const StateVector& psi, const FiniteEvent& alpha,
                                              const FiniteSampleSpace& space,
                                              const EvolutionSchedule& sched) {
    if (space.configs() != sched.dim() || space.times() != sched.num_times())
        throw UsageError("sample space does not match schedule");
    StateVector out = StateVector::Zero(sched.dim());
    alpha.for_each_member([&](std::size_t idx) {
        out += restricted_evolution_history(psi, space.history_at(idx), sched);
    });
    return out;
}

// D(α,β) = <ψ_α, ψ_β>  (conjugate-linear in the first argument)
inline Cx decoherence(const FiniteEvent& alpha, const FiniteEvent& beta, const StateVector& psi,
                      const FiniteSampleSpace& space, const EvolutionSchedule& sched) {
    StateVector a = restricted_evolution_event(psi, alpha, space, sched);
    StateVector b = restricted_evolution_event(psi, beta, space, sched);
    return a.dot(b);
}

// Mixed initial state: D is the convex combination over the spectral
// decomposition ρ = Σ p_k |ψ_k><ψ_k|.
inline Cx decoherence_mixed(const FiniteEvent& alpha, const FiniteEvent& beta,
                            const DensityMatrix& rho, const FiniteSampleSpace& space,
                            const EvolutionSchedule& sched) {
    Cx sum = 0.0;
    for (const auto& c : rho.components())
        sum += c.weight * decoherence(alpha, beta, c.state, space, sched);
    return sum;
}

// Either a pure unit vector or a density matrix; the bundle everything
// downstream consumes.
class QuantumMeasureSystem {
  public:
    QuantumMeasureSystem(FiniteSampleSpace space, EvolutionSchedule sched, StateVector psi)
        : space_(space), sched_(std::move(sched)), initial_(std::move(psi)) {
        check();
        require_normalized(std::get<StateVector>(initial_));
    }

    QuantumMeasureSystem(FiniteSampleSpace space, EvolutionSchedule sched, DensityMatrix rho)
        : space_(space), sched_(std::move(sched)), initial_(std::move(rho)) {
        check();
    }

    // Deliberately invalid systems (e.g. perturbed unitaries) for axiom demos.
    static QuantumMeasureSystem unchecked(FiniteSampleSpace space, EvolutionSchedule sched,
                                          StateVector psi) {
        QuantumMeasureSystem s(space, std::move(sched), Tag{}, std::move(psi));
        return s;
    }

    const FiniteSampleSpace& space() const { return space_; }
    const EvolutionSchedule& schedule() const { return sched_; }
    bool pure() const { return std::holds_alternative<StateVector>(initial_); }
    const StateVector& pure_state() const { return std::get<StateVector>(initial_); }
    const DensityMatrix& density() const { return std::get<DensityMatrix>(initial_); }
    int initial_rank() const { return pure() ? 1 : density().rank(); }

    Cx decoherence(const FiniteEvent& a, const FiniteEvent& b) const {
        return pure() ? qm::decoherence(a, b, pure_state(), space_, sched_)
                      : qm::decoherence_mixed(a, b, density(), space_, sched_);
    }

    double quantal_measure(const FiniteEvent& a) const { return decoherence(a, a).real(); }

    FiniteEvent omega() const { return FiniteEvent::full(space_); }

  private:
    struct Tag {};
    QuantumMeasureSystem(FiniteSampleSpace space, EvolutionSchedule sched, Tag, StateVector psi)
        : space_(space), sched_(std::move(sched)), initial_(std::move(psi)) {
        check();
    }

    void check() const {
        if (space_.configs() != sched_.dim() || space_.times() != sched_.num_times())
            throw UsageError("sample space does not match schedule");
    }

    FiniteSampleSpace space_;
    EvolutionSchedule sched_;
    std::variant<StateVector, DensityMatrix> initial_;
};

inline double quantal_measure(const FiniteEvent& alpha, const QuantumMeasureSystem& sys) {
    return sys.quantal_measure(alpha);
}

// Gram matrix D(α_i, α_j) over an ordered event family.
struct DecoherenceGram {
    std::vector<FiniteEvent> events;
    Matrix gram;

    double hermiticity_residual() const { return max_abs(gram - gram.adjoint()); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es((gram + gram.adjoint()) / 2.0);
        return es.eigenvalues().minCoeff();
    }
};

inline DecoherenceGram decoherence_gram(const std::vector<FiniteEvent>& events,
                                        const QuantumMeasureSystem& sys) {
    const std::size_t m = events.size();
    Matrix g(m, m);
    parallel_for(m, [&](std::size_t i) {
        for (std::size_t j = 0; j < m; ++j)
            g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                sys.decoherence(events[i], events[j]);
    });
    return {events, std::move(g)};
}

struct AxiomReport {
    double hermiticity_residual = 0.0;
    double biadditivity_residual = 0.0;
    double normalization_residual = 0.0;
    double sum_rule_residual = 0.0;
    double min_gram_eigenvalue = 0.0;
    double unitarity_defect = 0.0;

    bool passes(double tol, double psd_slack = kPsdSlack) const {
        return hermiticity_residual <= tol && biadditivity_residual <= tol &&
               normalization_residual <= tol && sum_rule_residual <= tol &&
               min_gram_eigenvalue >= psd_slack;
    }
};

// Checks hermiticity, bi-additivity over disjoint pairs derived from the
// family, normalization D(Ω,Ω)=1, the quantal sum rule for disjoint triples,
// and strong positivity of the family Gram.
inline AxiomReport verify_axioms(const std::vector<FiniteEvent>& events,
                                 const QuantumMeasureSystem& sys, std::size_t max_samples = 100) {
    if (events.empty()) throw UsageError("verify_axioms needs a nonempty event family");
    AxiomReport rep;
    rep.unitarity_defect = sys.schedule().max_unitarity_defect();

    DecoherenceGram gram = decoherence_gram(events, sys);
    rep.hermiticity_residual = gram.hermiticity_residual();
    rep.min_gram_eigenvalue = gram.min_eigenvalue();

    FiniteEvent omega = sys.omega();
    rep.normalization_residual = std::abs(sys.decoherence(omega, omega) - Cx{1.0, 0.0});

    // disjoint pairs (a, b) from the family; witness event γ cycles over it
    std::size_t samples = 0;
    for (std::size_t i = 0; i < events.size() && samples < max_samples; ++i) {
        for (std::size_t j = i + 1; j < events.size() && samples < max_samples; ++j) {
            FiniteEvent a = set_difference(events[i], events[j]);
            FiniteEvent b = set_difference(events[j], events[i]);
            if (a.is_empty() || b.is_empty()) continue;
            const FiniteEvent& g = events[(i + j) % events.size()];
            Cx lhs = sys.decoherence(set_union(a, b), g);
            Cx rhs = sys.decoherence(a, g) + sys.decoherence(b, g);
            rep.biadditivity_residual = std::max(rep.biadditivity_residual, std::abs(lhs - rhs));

            // quantal sum rule on the disjoint triple (a, b, c=γ\(a∪b))
            FiniteEvent c = set_difference(set_difference(g, a), b);
            if (!c.is_empty()) {
                auto mu = [&](const FiniteEvent& e) { return sys.quantal_measure(e); };
                FiniteEvent ab = set_union(a, b), bc = set_union(b, c), ac = set_union(a, c);
                double res = mu(set_union(ab, c)) - mu(ab) - mu(bc) - mu(ac) + mu(a) + mu(b) + mu(c);
                rep.sum_rule_residual = std::max(rep.sum_rule_residual, std::abs(res));
            }
            ++samples;
        }
    }
    return rep;
}

// Haar-style random unitary: QR of a complex Gaussian matrix with the phase
// convention fixed by R's diagonal.
inline Matrix random_unitary(int n, Rng& rng) {
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.normal_complex();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        Cx d = r(j, j);
        Cx phase = std::abs(d) > 0 ? d / std::abs(d) : Cx{1.0, 0.0};
        q.col(j) *= phase;
    }
    return q;
}

inline StateVector random_state(int n, Rng& rng) {
    StateVector v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal_complex();
    v.normalize();
    return v;
}

// Random rank-r density matrix: mixture of r Haar-ish orthonormal states with
// Dirichlet-ish positive weights.
inline DensityMatrix random_density(int n, int r, Rng& rng) {
    if (r < 1 || r > n) throw UsageError("density rank must be in 1..n");
    Matrix u = random_unitary(n, rng);
    Eigen::VectorXd w(r);
    double tot = 0.0;
    for (int k = 0; k < r; ++k) {
        w(k) = 0.2 + rng.uniform01();
        tot += w(k);
    }
    Matrix rho = Matrix::Zero(n, n);
    for (int k = 0; k < r; ++k) rho += (w(k) / tot) * u.col(k) * u.col(k).adjoint();
    rho = (rho + rho.adjoint()) / 2.0;
    return DensityMatrix(std::move(rho));
}

// Alternating brick-wall of 2x2 rotation blocks: a strictly banded unitary
// whose support spreads by one site per step, the lattice-local evolution of
// the rank-growth example.
inline Matrix hopping_step(int n, int parity, double theta = 0.9) {
    Matrix u = Matrix::Identity(n, n);
    double c = std::cos(theta), s = std::sin(theta);
    for (int i = parity; i + 1 < n; i += 2) {
        u(i, i) = c;
        u(i, i + 1) = s;
        u(i + 1, i) = -s;
        u(i + 1, i + 1) = c;
    }
    return u;
}

inline EvolutionSchedule hopping_schedule(int n, int num_times, double theta = 0.9) {
    std::vector<double> times;
    std::vector<Matrix> steps;
    for (int k = 0; k < num_times; ++k) times.push_back(static_cast<double>(k));
    for (int k = 0; k + 1 < num_times; ++k) steps.push_back(hopping_step(n, k % 2, theta));
    return EvolutionSchedule(std::move(times), std::move(steps));
}

inline EvolutionSchedule random_schedule(int n, int num_times, Rng& rng) {
    std::vector<double> times;
    std::vector<Matrix> steps;
    for (int k = 0; k < num_times; ++k) times.push_back(static_cast<double>(k));
    for (int k = 0; k + 1 < num_times; ++k) steps.push_back(random_unitary(n, rng));
    return EvolutionSchedule(std::move(times), std::move(steps));
}

inline EvolutionSchedule identity_schedule(int n, int num_times) {
    std::vector<double> times;
    std::vector<Matrix> steps;
    for (int k = 0; k < num_times; ++k) times.push_back(static_cast<double>(k));
    for (int k = 0; k + 1 < num_times; ++k) steps.push_back(Matrix::Identity(n, n));
    return EvolutionSchedule(std::move(times), std::move(steps));
}

} // namespace qm
