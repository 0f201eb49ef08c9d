// hodgeopt command-line tool.
//
// Exit codes: 0 success, 2 validation error, 3 solver non-optimal, 4 I/O error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI/CLI.hpp>

#include "hodgeopt/hodgeopt.hpp"

namespace {

using namespace hodgeopt;

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct Globals {
    std::uint64_t seed = kReferenceSeed;
    std::string out;
    std::string format = "json";
};

struct SolverNotOptimal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const Globals& g, const std::string& text)
{
    if (g.out.empty()) std::cout << text;
    else write_text(g.out, text);
}

WeightAssignment load_weights(const std::string& path, const SimplicialComplex& complex)
{
    if (path.empty()) return WeightAssignment::uniform(complex);
    return weights_from_json(parse_json(read_text(path), path), complex);
}

OptimizeFlags parse_flags(const std::vector<std::string>& which)
{
    OptimizeFlags f{false, false};
    for (const auto& w : which) {
        if (w == "lower") f.lower = true;
        else if (w == "upper") f.upper = true;
        else throw ValidationError("--optimize accepts 'lower' and/or 'upper', got '" + w + "'");
    }
    return f;
}

Eigen::VectorXd seeded_signal(std::uint64_t seed, Eigen::Index n)
{
    Rng rng(seed);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
    return x;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Weighted Hodge Laplacians: assembly, decomposition, flows and weight optimization"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--out", g.out, "Output file (directory for generate/pipeline); stdout when empty");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

    // generate
    ExperimentConfig gen;
    auto* generate = app.add_subcommand("generate", "Sample a point cloud and build its Vietoris-Rips complex");
    generate->add_option("-n,--points", gen.n_points, "Number of points")->capture_default_str();
    generate->add_option("--epsilon", gen.epsilon, "Distance threshold")->capture_default_str();
    generate->add_option("--max-order", gen.max_order, "Largest simplex order")->capture_default_str();

    // laplacian
    std::string complex_path, weights_path, part = "full";
    int order = 1;
    auto* laplacian = app.add_subcommand("laplacian", "Assemble a weighted Hodge Laplacian");
    laplacian->add_option("--complex", complex_path, "Complex JSON")->required();
    laplacian->add_option("--order,-k", order, "Laplacian order")->capture_default_str();
    laplacian->add_option("--weights", weights_path, "Weights JSON {\"k\": [...]} (unity when omitted)");
    laplacian->add_option("--part", part, "Which matrix")
        ->check(CLI::IsMember({"full", "up", "down", "symmetric"}))
        ->capture_default_str();

    // decompose
    std::string signal_path, route = "normal";
    auto* decompose = app.add_subcommand("decompose", "Hodge decomposition of a chain signal");
    decompose->add_option("--complex", complex_path, "Complex JSON")->required();
    decompose->add_option("--signal", signal_path, "Signal CSV")->required();
    decompose->add_option("--order,-k", order, "Signal order")->capture_default_str();
    decompose->add_option("--weights", weights_path, "Weights JSON");
    decompose->add_option("--route", route, "Potential solver")
        ->check(CLI::IsMember({"normal", "lsq"}))
        ->capture_default_str();

    // flow
    double t_end = 0.0;
    Eigen::Index samples = 200;
    bool components = false;
    auto* flow = app.add_subcommand("flow", "Simulate the Hodge Laplacian flow dx/dt = -L x");
    flow->add_option("--complex", complex_path, "Complex JSON")->required();
    flow->add_option("--order,-k", order, "Chain order")->capture_default_str();
    flow->add_option("--signal", signal_path, "Initial condition CSV (seeded standard normal when omitted)");
    flow->add_option("--weights", weights_path, "Weights JSON");
    flow->add_option("--t-end", t_end, "Final time (default 10 / smallest non-zero eigenvalue)");
    flow->add_option("--samples", samples, "Number of time samples")->capture_default_str();
    flow->add_flag("--components", components, "Append gradient, harmonic and curl norm columns");

    // optimize
    std::string objective = "trace";
    std::vector<std::string> which{"upper"};
    SdpOptions sdp;
    auto* optimize = app.add_subcommand("optimize", "Optimal weights by semidefinite programming");
    optimize->add_option("--complex", complex_path, "Complex JSON")->required();
    optimize->add_option("--order,-k", order, "Laplacian order")->capture_default_str();
    optimize->add_option("--objective", objective, "trace: minimize tr L^+; lambda: maximize smallest non-zero eigenvalue")
        ->check(CLI::IsMember({"trace", "lambda"}))
        ->capture_default_str();
    optimize->add_option("--optimize", which, "Weight blocks to optimize")->delimiter(',')->capture_default_str();
    optimize->add_option("--gap-tol", sdp.gap_tol, "Relative duality gap tolerance")->capture_default_str();
    optimize->add_option("--max-iter", sdp.max_iter, "Interior-point iteration cap")->capture_default_str();

    // pipeline
    ExperimentConfig pipe;
    std::string pipe_objective = "both";
    std::vector<std::string> pipe_which{"upper"};
    auto* pipeline = app.add_subcommand("pipeline", "Generate, optimize and compare flows");
    pipeline->add_option("-n,--points", pipe.n_points, "Number of points")->capture_default_str();
    pipeline->add_option("--epsilon", pipe.epsilon, "Distance threshold")->capture_default_str();
    pipeline->add_option("--max-order", pipe.max_order, "Largest simplex order")->capture_default_str();
    pipeline->add_option("--order,-k", pipe.order, "Laplacian order")->capture_default_str();
    pipeline->add_option("--objective", pipe_objective, "Objectives to optimize")
        ->check(CLI::IsMember({"trace", "lambda", "both"}))
        ->capture_default_str();
    pipeline->add_option("--optimize", pipe_which, "Weight blocks to optimize")->delimiter(',')->capture_default_str();
    pipeline->add_option("--gap-tol", pipe.sdp.gap_tol, "Relative duality gap tolerance")->capture_default_str();
    pipeline->add_option("--max-iter", pipe.sdp.max_iter, "Interior-point iteration cap")->capture_default_str();
    pipeline->add_option("--samples", pipe.flow_samples, "Flow time samples")->capture_default_str();

    for (auto* sub : {generate, laplacian, decompose, flow, optimize, pipeline}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    auto log = [](const std::string& msg) { std::cerr << msg << '\n'; };

    try {
        if (*generate) {
            gen.seed = g.seed;
            gen.log = log;
            if (!g.out.empty()) gen.out_dir = g.out;
            const GeneratedInstance inst = cmd_generate(gen);
            if (g.out.empty()) std::cout << complex_to_json(inst.complex).dump(1) << '\n';
        } else if (*laplacian) {
            const SimplicialComplex complex = read_complex(complex_path);
            const HodgeLaplacian lap = assemble_laplacian(complex, load_weights(weights_path, complex), order);
            const Eigen::MatrixXd& m = part == "up"          ? lap.up()
                                       : part == "down"      ? lap.down()
                                       : part == "symmetric" ? lap.symmetric_form()
                                                             : lap.full();
            emit(g, g.format == "csv" ? matrix_to_csv(m) : laplacian_envelope(lap, part, m).dump(1) + "\n");
        } else if (*decompose) {
            const SimplicialComplex complex = read_complex(complex_path);
            const WeightAssignment w = load_weights(weights_path, complex);
            const ChainSignal s{order, read_signal(signal_path)};
            const auto r = route == "lsq" ? DecompositionRoute::least_squares : DecompositionRoute::normal_equations;
            const HodgeComponents parts = hodge_decompose(complex, w, s, r);
            const DecompositionReport report = verify_decomposition(parts, complex, w, s);
            if (g.format == "csv") {
                Eigen::MatrixXd cols(parts.gradient.size(), 3);
                cols << parts.gradient, parts.harmonic, parts.curl;
                emit(g, matrix_to_csv(cols));
            } else {
                emit(g, decomposition_to_json(parts, report).dump(1) + "\n");
            }
        } else if (*flow) {
            const SimplicialComplex complex = read_complex(complex_path);
            const WeightAssignment w = load_weights(weights_path, complex);
            const HodgeLaplacian lap = assemble_laplacian(complex, w, order);
            ChainSignal x0{order, signal_path.empty() ? seeded_signal(g.seed, lap.size()) : read_signal(signal_path)};
            if (t_end <= 0.0) t_end = 10.0 / lambda_min_nonzero(lap);
            const Eigen::VectorXd times = default_flow_times(t_end, samples);
            if (components) {
                const FlowComponentTrace trace = flow_decomposition_trace(complex, w, x0, times);
                if (g.format == "csv") emit(g, flow_to_csv(trace.trajectory, &trace));
                else
                    emit(g, Json{{"order", order},
                                 {"times", to_json(trace.trajectory.times)},
                                 {"states", to_json(trace.trajectory.states)},
                                 {"gradient_norm", to_json(trace.gradient_norm)},
                                 {"harmonic_norm", to_json(trace.harmonic_norm)},
                                 {"curl_norm", to_json(trace.curl_norm)}}
                                    .dump(1) +
                                "\n");
            } else {
                const FlowTrajectory t = simulate_flow(lap, x0, times);
                if (g.format == "csv") emit(g, flow_to_csv(t));
                else
                    emit(g, Json{{"order", order},
                                 {"times", to_json(t.times)},
                                 {"states", to_json(t.states)},
                                 {"harmonic_limit", to_json(t.harmonic_limit)}}
                                    .dump(1) +
                                "\n");
            }
        } else if (*optimize) {
            const SimplicialComplex complex = read_complex(complex_path);
            WeightOptimizerOptions opts;
            opts.sdp = sdp;
            const WeightObjective obj = objective == "lambda" ? WeightObjective::lambda_min : WeightObjective::trace_pinv;
            const WeightOptimizationResult r = optimize_weights(complex, order, obj, parse_flags(which), opts);
            emit(g, optimization_to_json(r).dump(1) + "\n");
            if (!r.optimal())
                throw SolverNotOptimal(std::string("solver status ") + to_string(r.certificate.status) +
                                       (r.accurate ? "" : ", SDP and direct objectives disagree"));
        } else if (*pipeline) {
            pipe.seed = g.seed;
            pipe.log = log;
            pipe.flags = parse_flags(pipe_which);
            pipe.run_trace = pipe_objective != "lambda";
            pipe.run_lambda = pipe_objective != "trace";
            if (!g.out.empty()) pipe.out_dir = g.out;
            const PipelineResult r = cmd_pipeline(pipe);
            if (g.out.empty()) std::cout << r.report.dump(2) << '\n';
            if (!r.optimal) throw SolverNotOptimal("at least one program was not solved to optimality");
        }
    } catch (const SolverNotOptimal& e) {
        std::cerr << "hodgeopt: " << e.what() << '\n';
        return kExitSolver;
    } catch (const IoError& e) {
        std::cerr << "hodgeopt: " << e.what() << '\n';
        return kExitIo;
    } catch (const NumericalError& e) {
        std::cerr << "hodgeopt: numerical failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const ValidationError& e) {
        std::cerr << "hodgeopt: invalid input: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DegenerateInstance& e) {
        std::cerr << "hodgeopt: degenerate instance: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "hodgeopt: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
