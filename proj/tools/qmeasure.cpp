// qmeasure: scenario-driven experiments on quantum measure systems.
//
// Exit codes: 0 all checks pass, 1 check failure, 2 usage/parse error,
// 3 numerical non-convergence.

#include <qmeasure/runner.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"quantum measure systems: decoherence functionals, the history "
                 "Hilbert space, and propagator experiments"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;
    double tol = -1.0;
    double rank_tol = 1e-10;
    long long seed = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("scenario", scenario_path, "scenario file")->required();
        sub->add_option("--tol", tol, "check tolerance (per-command default if omitted)");
        sub->add_option("--rank-tol", rank_tol, "relative eigenvalue cutoff for dim H2");
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--out", out_path, "write a structured JSON report here");
    };

    const char* names[] = {"check-axioms", "gns", "onto", "esck", "reconstruct", "interference"};
    const char* descs[] = {
        "verify decoherence-functional axioms on the scenario's event family",
        "build the history Hilbert space and report dim H2 and witness status",
        "per-configuration onto-witness search",
        "propagator composition (ESCK) residuals over the scenario's test matrix",
        "reconstruct characteristic/step functions inside the image of f0",
        "quantal-measure additivity violation for a pair of events"};
    for (int i = 0; i < 6; ++i) add_common(app.add_subcommand(names[i], descs[i]));

    CLI11_PARSE(app, argc, argv);
    std::string command = app.get_subcommands().front()->get_name();

    try {
        qm::Scenario sc = qm::load_scenario(scenario_path);
        qm::RunOptions opt;
        opt.tol = tol;
        opt.rank_tol = rank_tol;
        if (seed >= 0) opt.seed_override = static_cast<std::uint64_t>(seed);

        qm::Report rep = qm::run_command(command, sc, opt);
        std::cout << rep.render();
        if (!out_path.empty()) {
            std::ofstream out(out_path);
            if (!out) throw qm::UsageError("cannot write report to " + out_path);
            out << rep.to_json();
        }
        return rep.exit_code();
    } catch (const qm::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const qm::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const qm::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
