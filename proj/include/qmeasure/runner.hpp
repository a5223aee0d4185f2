#pragma once

// Command implementations shared by the CLI and the integration tests:
// materialize a scenario into systems/events, run the requested experiment,
// and fill a Report.

#include "continuum.hpp"
#include "dynamics.hpp"
#include "gns.hpp"
#include "reconstruct.hpp"
#include "report.hpp"
#include "scenario.hpp"

#include <chrono>
#include <map>
#include <string>

namespace qm {

struct RunOptions {
    double tol = -1.0;      // check tolerance; <0 means per-command default
    double rank_tol = 1e-10;
    double witness_tol = 1e-8;
    std::optional<std::uint64_t> seed_override;
};

// --- scenario materialization -------------------------------------------------

inline QuantumMeasureSystem build_finite_system(const Scenario& sc, Rng& rng) {
    const FiniteScenario& f = sc.fin();
    if (f.n < 1 || f.num_times < 2) throw UsageError("finite scenario needs n >= 1 and N >= 2");

    std::vector<Matrix> steps;
    switch (f.ukind) {
    case FiniteScenario::UKind::Explicit:
        if (static_cast<int>(f.unitaries.size()) != f.num_times - 1)
            throw UsageError("scenario needs N-1 explicit unitaries");
        steps = f.unitaries;
        break;
    case FiniteScenario::UKind::Random:
        for (int k = 0; k + 1 < f.num_times; ++k) steps.push_back(random_unitary(f.n, rng));
        break;
    case FiniteScenario::UKind::Identity:
        for (int k = 0; k + 1 < f.num_times; ++k) steps.push_back(Matrix::Identity(f.n, f.n));
        break;
    case FiniteScenario::UKind::Hopping:
        for (int k = 0; k + 1 < f.num_times; ++k)
            steps.push_back(hopping_step(f.n, k % 2, f.hopping_theta));
        break;
    }
    if (f.perturb != 0.0)
        for (auto& u : steps) u(0, 0) += f.perturb;

    bool unitary_ok = true;
    {
        const Matrix id = Matrix::Identity(f.n, f.n);
        for (const auto& u : steps)
            if (max_abs(u.adjoint() * u - id) > kUnitarityTol) unitary_ok = false;
    }
    EvolutionSchedule sched = unitary_ok ? EvolutionSchedule(f.times, steps)
                                         : EvolutionSchedule::unchecked(f.times, steps);
    FiniteSampleSpace space(f.n, f.num_times);

    switch (f.ikind) {
    case FiniteScenario::IKind::State: {
        if (f.state.size() != f.n) throw UsageError("initial state needs n amplitudes");
        StateVector psi = f.state;
        double nrm = psi.norm();
        if (nrm <= 0.0) throw UsageError("initial state must be nonzero");
        psi /= nrm;
        return unitary_ok ? QuantumMeasureSystem(space, sched, psi)
                          : QuantumMeasureSystem::unchecked(space, sched, psi);
    }
    case FiniteScenario::IKind::Basis: {
        if (f.basis_index < 1 || f.basis_index > f.n)
            throw UsageError("initial basis index out of range");
        StateVector psi = StateVector::Zero(f.n);
        psi(f.basis_index - 1) = 1.0;
        return unitary_ok ? QuantumMeasureSystem(space, sched, psi)
                          : QuantumMeasureSystem::unchecked(space, sched, psi);
    }
    case FiniteScenario::IKind::RandomState: {
        StateVector psi = random_state(f.n, rng);
        return unitary_ok ? QuantumMeasureSystem(space, sched, psi)
                          : QuantumMeasureSystem::unchecked(space, sched, psi);
    }
    case FiniteScenario::IKind::Density: {
        if (f.density_rank > 0)
            return QuantumMeasureSystem(space, sched, random_density(f.n, f.density_rank, rng));
        return QuantumMeasureSystem(space, sched, DensityMatrix(f.density));
    }
    }
    throw UsageError("unhandled initial state kind");
}

inline std::vector<std::pair<std::string, FiniteEvent>>
build_finite_events(const FiniteScenario& f, const FiniteSampleSpace& space, Rng& rng) {
    std::map<std::string, FiniteEvent> byname;
    std::vector<std::pair<std::string, FiniteEvent>> out;
    auto lookup = [&](const std::string& name) -> const FiniteEvent& {
        auto it = byname.find(name);
        if (it == byname.end()) throw UsageError("event references unknown name '" + name + "'");
        return it->second;
    };
    for (const auto& [name, spec] : f.events) {
        FiniteEvent e(space);
        switch (spec.kind) {
        case FiniteEventSpec::Kind::Histories:
            for (const auto& h : spec.histories) e.insert(space.index_of(History{h}));
            break;
        case FiniteEventSpec::Kind::Cylinder: {
            if (static_cast<int>(spec.cylinder.size()) != space.times())
                throw UsageError("cylinder spec needs N entries");
            for (std::size_t idx = 0; idx < space.size(); ++idx) {
                History h = space.history_at(idx);
                bool match = true;
                for (int k = 0; k < space.times() && match; ++k) {
                    int want = spec.cylinder[static_cast<std::size_t>(k)];
                    if (want != 0 && h.configs[static_cast<std::size_t>(k)] != want) match = false;
                }
                if (match) e.insert(idx);
            }
            break;
        }
        case FiniteEventSpec::Kind::All:
            e = FiniteEvent::full(space);
            break;
        case FiniteEventSpec::Kind::Empty:
            break;
        case FiniteEventSpec::Kind::Complement:
            e = lookup(spec.lhs).complement();
            break;
        case FiniteEventSpec::Kind::Union:
            e = set_union(lookup(spec.lhs), lookup(spec.rhs));
            break;
        case FiniteEventSpec::Kind::Intersect:
            e = ring_mul(lookup(spec.lhs), lookup(spec.rhs));
            break;
        case FiniteEventSpec::Kind::Xor:
            e = ring_add(lookup(spec.lhs), lookup(spec.rhs));
            break;
        case FiniteEventSpec::Kind::Random:
            e = random_event(space, rng);
            break;
        }
        byname.emplace(name, e);
        out.emplace_back(name, std::move(e));
    }
    return out;
}

inline GridSpec build_grid_spec(const ContinuumScenario& c) {
    GridSpec gs;
    gs.lo = c.box_lo;
    gs.hi = c.box_hi;
    gs.order = c.order;
    gs.max_panel_width = c.max_panel_width;
    gs.rad_per_panel = c.rad_per_panel;
    if (!(gs.lo < gs.hi)) throw UsageError("grid box must have lo < hi");
    return gs;
}

inline ConvergenceLadder build_ladder(const ContinuumScenario& c) {
    return ConvergenceLadder(c.ladder, c.ladder_tol);
}

// Initial wavefunction, grid-normalized over the working box. The mass
// defect records how much of the analytically normalized state the box
// misses; it is part of every continuum report's provenance.
struct InitialState {
    WaveFn fn;
    double box_mass_defect = 0.0;
};

inline InitialState build_initial_state(const ContinuumScenario& c, const GridSpec& gs) {
    const double x0 = c.x0, p0 = c.p0, sigma = c.sigma;
    if (sigma <= 0.0) throw UsageError("gaussian width must be positive");
    bool truncated = c.ikind == ContinuumScenario::IKind::TruncatedGaussian;
    WaveFn raw = [x0, p0, sigma, truncated](double x) -> Cx {
        if (truncated && x <= 0.0) return {0.0, 0.0};
        double mag = std::pow(2.0 * 3.14159265358979323846 * sigma * sigma, -0.25) *
                     std::exp(-(x - x0) * (x - x0) / (4.0 * sigma * sigma));
        return mag * std::exp(Cx{0.0, p0 * x});
    };
    QuadGrid g = gs.full_grid(gs.max_panel_width);
    double nrm = WaveFunction::sample(raw, g, 0.0).norm();
    if (nrm <= 1e-8) throw UsageError("initial state carries no mass inside the box");
    InitialState out;
    out.fn = [raw, nrm](double x) { return raw(x) / nrm; };
    out.box_mass_defect = truncated ? 0.0 : std::abs(1.0 - nrm * nrm);
    return out;
}

inline ContinuumEvent build_continuum_event(const ContinuumEventSpec& spec, double T) {
    if (spec.times.empty() || spec.times.back() != T)
        throw UsageError("event times must end at the truncation time");
    return ContinuumEvent::single(HomogeneousEvent(spec.times, spec.regions));
}

// --- commands ------------------------------------------------------------------

namespace detail_run {

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace detail_run

inline Report cmd_check_axioms(const Scenario& sc, const RunOptions& opt = {}) {
    detail_run::Timer timer;
    if (!sc.finite()) throw UsageError("check-axioms needs a finite scenario");
    double tol = opt.tol > 0 ? opt.tol : 1e-10;
    Rng rng(opt.seed_override.value_or(sc.seed));
    QuantumMeasureSystem sys = build_finite_system(sc, rng);
    auto named = build_finite_events(sc.fin(), sys.space(), rng);
    if (named.empty()) throw UsageError("check-axioms needs a nonempty event list");
    std::vector<FiniteEvent> events;
    for (auto& [name, e] : named) events.push_back(e);

    AxiomReport ar = verify_axioms(events, sys);
    Report rep;
    rep.command = "check-axioms";
    rep.scenario_digest = sc.digest();
    rep.add(Check::upper("hermiticity_residual", ar.hermiticity_residual, tol));
    rep.add(Check::upper("biadditivity_residual", ar.biadditivity_residual, tol));
    rep.add(Check::upper("sum_rule_residual", ar.sum_rule_residual, tol));
    rep.add(Check::upper("normalization_residual", ar.normalization_residual, tol));
    rep.add(Check::lower("min_gram_eigenvalue", ar.min_gram_eigenvalue, kPsdSlack));
    rep.note("unitarity_defect", fmt_sci(ar.unitarity_defect));
    rep.note("events", std::to_string(events.size()));
    rep.elapsed_ms = timer.ms();
    return rep;
}

inline Report cmd_gns(const Scenario& sc, const RunOptions& opt = {}) {
    detail_run::Timer timer;
    if (!sc.finite()) throw UsageError("gns needs a finite scenario");
    Rng rng(opt.seed_override.value_or(sc.seed));
    QuantumMeasureSystem sys = build_finite_system(sc, rng);

    Report rep;
    rep.command = "gns";
    rep.scenario_digest = sc.digest();

    int dim = 0;
    if (sys.space().size() <= 1024) {
        auto gens = singleton_generators(sys.space());
        auto h2 = build_history_hilbert_space(
            gens, [&](const FiniteEvent& a, const FiniteEvent& b) { return sys.decoherence(a, b); },
            opt.rank_tol);
        dim = h2.rank;
        int compact = singleton_rank(sys, opt.rank_tol);
        rep.add(Check::upper("rank_route_disagreement",
                             static_cast<double>(dim - compact), 0.0));
    } else {
        dim = singleton_rank(sys, opt.rank_tol);
    }
    rep.note("dim_h2", std::to_string(dim));
    rep.note("initial_rank", std::to_string(sys.initial_rank()));

    if (sys.pure()) {
        WitnessResult w = onto_witness_search(sys, opt.witness_tol);
        bool onto = std::holds_alternative<OntoWitness>(w);
        rep.note("onto_witness", onto ? "found" : "not-onto");
        if (!onto) {
            std::string lst;
            for (int j : std::get<NotOnto>(w).unreachable)
                lst += (lst.empty() ? "" : " ") + std::to_string(j);
            rep.note("unreachable", lst);
        }
        if (sc.fin().expect_onto >= 0)
            rep.add(Check::upper("onto_expectation_mismatch",
                                 (onto ? 1.0 : 0.0) - sc.fin().expect_onto, 0.0));
    }
    if (sc.fin().expect_dim)
        rep.add(Check::upper("dim_mismatch", static_cast<double>(dim - *sc.fin().expect_dim), 0.0));
    rep.elapsed_ms = timer.ms();
    return rep;
}

inline Report cmd_onto(const Scenario& sc, const RunOptions& opt = {}) {
    detail_run::Timer timer;
    if (!sc.finite()) throw UsageError("onto needs a finite scenario");
    Rng rng(opt.seed_override.value_or(sc.seed));
    QuantumMeasureSystem sys = build_finite_system(sc, rng);
    if (!sys.pure()) throw UsageError("onto needs a pure initial state");

    Report rep;
    rep.command = "onto";
    rep.scenario_digest = sc.digest();
    WitnessResult w = onto_witness_search(sys, opt.witness_tol);
    bool onto = std::holds_alternative<OntoWitness>(w);
    const OntoWitness& wit = onto ? std::get<OntoWitness>(w) : std::get<NotOnto>(w).partial;
    for (std::size_t j = 0; j < wit.histories.size(); ++j) {
        std::string hs;
        for (int c : wit.histories[j].configs) hs += (hs.empty() ? "" : " ") + std::to_string(c);
        rep.note("witness_history[" + std::to_string(j + 1) + "]", hs);
        rep.note("witness_amplitude[" + std::to_string(j + 1) + "]",
                 fmt_complex(wit.amplitudes[j]));
    }
    rep.note("onto_witness", onto ? "found" : "not-onto");
    if (sc.fin().expect_onto >= 0)
        rep.add(Check::upper("onto_expectation_mismatch",
                             (onto ? 1.0 : 0.0) - sc.fin().expect_onto, 0.0));
    else
        rep.add(Check::lower("witness_found", onto ? 1.0 : 0.0, 1.0));
    rep.elapsed_ms = timer.ms();
    return rep;
}

inline Report cmd_esck(const Scenario& sc, const RunOptions& opt = {}) {
    detail_run::Timer timer;
    if (sc.finite()) throw UsageError("esck needs a continuum scenario");
    const ContinuumScenario& c = sc.cont();
    double tol = opt.tol > 0 ? opt.tol
                             : (c.propagator.kind == PropagatorKind::SHO ? 1e-2 : 1e-3);
    if (c.esck_times.size() != 3) throw UsageError("scenario needs 'esck times: t1 t2 t3'");
    if (c.esck_points.empty()) throw UsageError("scenario needs 'esck points'");
    GridSpec gs = build_grid_spec(c);
    ConvergenceLadder ladder = build_ladder(c);

    Report rep;
    rep.command = "esck";
    rep.scenario_digest = sc.digest();
    double t1 = c.esck_times[0], t2 = c.esck_times[1], t3 = c.esck_times[2];
    for (double x3 : c.esck_points) {
        for (double x1 : c.esck_points) {
            EsckResult r = check_esck(c.propagator, x3, t3, x1, t1, t2, ladder, gs);
            std::string name =
                "esck_residual[x3=" + fmt_g(x3) + ",x1=" + fmt_g(x1) + "]";
            if (!r.applicable) {
                rep.note(name, "inapplicable (caustic)");
                continue;
            }
            rep.add(Check::upper(name, r.residual, tol));
        }
    }
    rep.elapsed_ms = timer.ms();
    return rep;
}

inline Report cmd_reconstruct(const Scenario& sc, const RunOptions& = {}) {
    detail_run::Timer timer;
    if (sc.finite()) throw UsageError("reconstruct needs a continuum scenario");
    const ContinuumScenario& c = sc.cont();
    GridSpec gs = build_grid_spec(c);
    InitialState init = build_initial_state(c, gs);
    const WaveFn& psi = init.fn;
    double T = c.truncation_time;

    Report rep;
    rep.command = "reconstruct";
    rep.scenario_digest = sc.digest();
    rep.note("initial_box_mass_defect", fmt_sci(init.box_mass_defect));
    try {
        if (!c.step_terms.empty()) {
            std::vector<StepTerm> terms;
            for (const auto& [w, iv] : c.step_terms)
                terms.push_back({w, Box::interval(iv.first, iv.second)});
            StepReconstruction r =
                reconstruct_step_function(terms, c.reconstruct_eps, psi, c.propagator, T, gs);
            rep.add(Check::upper("verified_l2_error", r.verified_error, c.reconstruct_eps));
            rep.note("cells", std::to_string(r.cell_count));
        } else if (c.reconstruct_interval) {
            Box iv = Box::interval(c.reconstruct_interval->first, c.reconstruct_interval->second);
            ReconstructionResult r = reconstruct_indicator(iv, c.reconstruct_eps, psi, c.propagator, T, gs);
            rep.add(Check::upper("verified_l2_error", r.verified_error, c.reconstruct_eps));
            rep.note("cells", std::to_string(r.cell_count));
            rep.note("amplitude_floor", fmt_sci(r.amplitude_floor));
            rep.note("max_cell_width", fmt_sci(r.max_cell_width));
        } else {
            throw UsageError("scenario needs 'reconstruct interval' or 'step term' entries");
        }
    } catch (const HypothesisFailureError& hf) {
        rep.add(Check::upper("hypothesis_holds", 1.0, 0.0)); // forced failure
        rep.note("hypothesis_failure_at", fmt_g(hf.final_point));
    }
    rep.elapsed_ms = timer.ms();
    return rep;
}

inline Report cmd_interference(const Scenario& sc, const RunOptions& opt = {}) {
    detail_run::Timer timer;
    if (sc.finite()) throw UsageError("interference needs a continuum scenario");
    const ContinuumScenario& c = sc.cont();
    if (c.interference_a.empty()) throw UsageError("scenario needs 'interference: A B'");
    GridSpec gs = build_grid_spec(c);
    ConvergenceLadder ladder = build_ladder(c);
    InitialState init = build_initial_state(c, gs);
    const WaveFn& psi = init.fn;
    double T = c.truncation_time;

    std::map<std::string, ContinuumEvent> events;
    for (const auto& [name, spec] : c.events)
        events.emplace(name, build_continuum_event(spec, T));
    auto get = [&](const std::string& n) -> const ContinuumEvent& {
        auto it = events.find(n);
        if (it == events.end()) throw UsageError("unknown event '" + n + "'");
        return it->second;
    };
    const ContinuumEvent& a = get(c.interference_a);
    const ContinuumEvent& b = get(c.interference_b);

    ContinuumEvent ab = continuum_union(a, b);
    double mu_a = quantal_measure_continuum(a, psi, c.propagator, ladder, gs);
    double mu_b = quantal_measure_continuum(b, psi, c.propagator, ladder, gs);
    double mu_ab = quantal_measure_continuum(ab, psi, c.propagator, ladder, gs);
    Cx d_ab = decoherence_continuum(a, b, psi, c.propagator, ladder, gs);
    Cx d_ba = decoherence_continuum(b, a, psi, c.propagator, ladder, gs);

    Report rep;
    rep.command = "interference";
    rep.scenario_digest = sc.digest();
    rep.note("initial_box_mass_defect", fmt_sci(init.box_mass_defect));
    rep.note("mu_a", fmt_sci(mu_a));
    rep.note("mu_b", fmt_sci(mu_b));
    rep.note("mu_union", fmt_sci(mu_ab));
    rep.note("d_ab", fmt_complex(d_ab));
    double interference = mu_ab - mu_a - mu_b;
    rep.note("interference", fmt_sci(interference));
    double tol = opt.tol > 0 ? opt.tol : 1e-3;
    rep.add(Check::upper("hermiticity_residual", std::abs(d_ab - std::conj(d_ba)), tol));
    rep.add(Check::upper("interference_vs_2ReD",
                         std::abs(interference - 2.0 * d_ab.real()), tol));
    if (c.expect_interference_above > 0.0)
        rep.add(Check::lower("interference_magnitude", std::abs(interference),
                             c.expect_interference_above));
    rep.elapsed_ms = timer.ms();
    return rep;
}

inline Report run_command(const std::string& command, const Scenario& sc,
                          const RunOptions& opt = {}) {
    if (command == "check-axioms") return cmd_check_axioms(sc, opt);
    if (command == "gns") return cmd_gns(sc, opt);
    if (command == "onto") return cmd_onto(sc, opt);
    if (command == "esck") return cmd_esck(sc, opt);
    if (command == "reconstruct") return cmd_reconstruct(sc, opt);
    if (command == "interference") return cmd_interference(sc, opt);
    throw UsageError("unknown command '" + command + "'");
}

} // namespace qm
