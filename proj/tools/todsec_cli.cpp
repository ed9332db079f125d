#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "todsec/attack.hpp"
#include "todsec/context.hpp"
#include "todsec/detect.hpp"
#include "todsec/experiment.hpp"
#include "todsec/metrics.hpp"
#include "todsec/ml/model_io.hpp"
#include "todsec/ml/train.hpp"
#include "todsec/rng.hpp"
#include "todsec/synth.hpp"
#include "todsec/trace_io.hpp"
#include "todsec/vehicle.hpp"

namespace fs = std::filesystem;
using namespace todsec;

namespace {

/// Shared command-line state: config document, output directory, seed.
struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;

    ExperimentConfig load() const {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{}
                                                   : load_experiment_config(config_path);
        if (seed) cfg.seed = *seed;
        return cfg;
    }
};

/// All trace CSVs in a directory, lexicographically ordered so every run
/// visits them identically.
std::vector<fs::path> trace_csvs(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw std::invalid_argument("'" + dir.string() + "' is not a directory");
    }
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            paths.push_back(entry.path());
        }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) {
        throw std::invalid_argument("no trace CSVs found under '" + dir.string() + "'");
    }
    return paths;
}

std::vector<ToDInputTrace> load_command_traces(const fs::path& dir) {
    std::vector<ToDInputTrace> traces;
    for (const fs::path& p : trace_csvs(dir)) traces.push_back(parse_trace(p));
    return traces;
}

std::vector<PhysicalParameterTrace> load_physical_traces(const fs::path& dir) {
    std::vector<PhysicalParameterTrace> traces;
    for (const fs::path& p : trace_csvs(dir)) traces.push_back(parse_physical_trace(p));
    return traces;
}

int cmd_generate(const GlobalOpts& g, bool route_fixture_too) {
    const ExperimentConfig cfg = g.load();
    SyntheticGenConfig gen = cfg.generator;
    gen.seed = Rng(cfg.seed).fork("generate").seed();
    validate_config(gen);

    const fs::path dir = fs::path(g.out_dir) / "traces";
    fs::create_directories(dir);
    const auto dataset = generate_synthetic_dataset(gen);
    for (const SyntheticTrace& st : dataset) {
        write_trace(st.trace, dir / (st.trace.trace_id + ".csv"));
    }
    std::cout << "wrote " << dataset.size() << " command traces to " << dir.string() << "\n";

    if (route_fixture_too) {
        const std::uint64_t route_seed = Rng(cfg.seed).fork("route").seed();
        const RoutePlan route = route_fixture(cfg.context.n_intersections, route_seed);
        const ExpectationStore store = build_expectation_store(route);
        const auto events = drive_log_with_flips(store, cfg.context.flips, cfg.context.alerts,
                                                 Rng(cfg.seed).fork("context").seed());
        write_route(route, fs::path(g.out_dir) / "route.json");
        write_drive_log(events, fs::path(g.out_dir) / "drive_log.json");
        std::cout << "wrote route fixture (" << route.intersections.size()
                  << " intersections) and drive log (" << cfg.context.flips << " flips, "
                  << cfg.context.alerts << " alerts)\n";
    }
    return 0;
}

int cmd_simulate(const GlobalOpts& g, const std::string& in_dir) {
    const ExperimentConfig cfg = g.load();
    validate_config(cfg.vehicle);

    const fs::path dir = fs::path(g.out_dir) / "physical";
    fs::create_directories(dir);
    std::size_t n = 0;
    for (const ToDInputTrace& t : load_command_traces(in_dir)) {
        write_physical_trace(simulate(t, cfg.vehicle).physical,
                             dir / (t.trace_id + "_physical.csv"));
        ++n;
    }
    std::cout << "simulated " << n << " traces into " << dir.string() << "\n";
    return 0;
}

int cmd_inject(const GlobalOpts& g, const std::string& in_dir, const std::string& placement) {
    const ExperimentConfig cfg = g.load();
    const auto dataset = load_command_traces(in_dir);

    std::vector<std::string> slugs;
    if (placement == "both") {
        slugs = {"p1", "p2"};
    } else {
        slugs = {placement};
    }
    for (const std::string& slug : slugs) {
        AttackSpec spec;
        spec.placement = slug == "p1" ? AttackPlacement::P1_TurnOnset
                                      : AttackPlacement::P2_TurnMidpoint;
        spec.window.duration_s = cfg.attack.duration_s;
        spec.noise.kind = cfg.attack.noise_kind;
        spec.noise.amplitude_deg = cfg.attack.amplitude_deg;
        spec.onset_threshold_deg = cfg.window.threshold_deg;
        spec.persistence_s = cfg.window.persistence_s;

        const AttackSet set = build_attack_set(dataset, cfg.attack.n_attacked, spec,
                                               Rng(cfg.seed).fork("attack-" + slug).seed());
        const fs::path dir = fs::path(g.out_dir) / "attacks" / slug;
        fs::create_directories(dir);
        for (const ToDInputTrace& t : set.traces) write_trace(t, dir / (t.trace_id + ".csv"));
        write_attack_manifest(set.manifest, dir / "manifest.json");
        std::cout << "attacked " << set.traces.size() << " traces (" << slug << ") into "
                  << dir.string() << "\n";
    }
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& in_dir, const std::string& model_name,
              bool full_window) {
    const ExperimentConfig cfg = g.load();
    const auto physical = load_physical_traces(in_dir);

    const ml::WindowConfig window = full_window ? ml::WindowConfig::full() : cfg.window;
    std::vector<ml::SequenceSample> samples;
    samples.reserve(physical.size());
    for (const PhysicalParameterTrace& t : physical) {
        samples.push_back(ml::extract_maneuver_window(t, window));
    }

    std::vector<ml::ModelKind> kinds = cfg.models;
    if (!model_name.empty()) kinds = {ml::model_kind_from_string(model_name)};

    const fs::path dir = fs::path(g.out_dir) / "models";
    fs::create_directories(dir);
    for (ml::ModelKind kind : kinds) {
        ml::TrainConfig train_cfg = cfg.train;
        train_cfg.seed = Rng(cfg.seed).fork("train-" + ml::to_string(kind)).seed();
        const ml::TrainedModel model = ml::train(samples, kind, train_cfg);
        const fs::path path = dir / (ml::to_string(kind) + ".json");
        ml::save_model(model, path);
        std::cout << "trained " << ml::to_string(kind) << " on " << samples.size()
                  << " windows -> " << path.string() << "\n";
    }
    return 0;
}

int cmd_detect(const GlobalOpts& g, const std::string& in_dir, const std::string& model_file) {
    const ExperimentConfig cfg = g.load();
    const ml::TrainedModel model = ml::load_model(model_file);
    const auto physical = load_physical_traces(in_dir);

    const AttackSetEvaluation eval = evaluate_attack_set(physical, model, cfg.window);
    fs::create_directories(g.out_dir);
    write_detection_results(eval.results, fs::path(g.out_dir) / "detections.jsonl");
    write_detection_summary(eval, fs::path(g.out_dir) / "detection_summary.json");
    std::cout << "flagged " << eval.n_detected << " of " << eval.n_tested << " traces\n";
    return 0;
}

int cmd_context_check(const GlobalOpts& g, const std::string& route_file,
                      const std::string& log_file) {
    const RoutePlan route = parse_route(route_file);
    const ExpectationStore store = build_expectation_store(route);
    const std::vector<ObservedEvent> events = parse_drive_log(log_file);

    const auto alg1 = detect_incorrect_maneuver(events, store);
    const auto alg3 = detect_with_alert_filter(events, store);
    std::size_t alg1_flags = 0, alg3_flags = 0, suppressed = 0;
    for (const AnomalyVerdict& v : alg1) alg1_flags += v.flagged ? 1 : 0;
    for (const AnomalyVerdict& v : alg3) {
        alg3_flags += v.flagged ? 1 : 0;
        suppressed += v.suppressed_by_alert ? 1 : 0;
    }

    fs::create_directories(g.out_dir);
    write_verdicts_jsonl(alg3, fs::path(g.out_dir) / "verdicts.jsonl");
    std::cout << "maneuver check flagged " << alg1_flags << " of " << events.size()
              << " events; with alert filtering " << alg3_flags << " (" << suppressed
              << " suppressed)\n";
    return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& in_dir, const std::string& model_file) {
    const ExperimentConfig cfg = g.load();
    const ml::TrainedModel model = ml::load_model(model_file);

    ConfusionMatrix cm;
    for (const PhysicalParameterTrace& t : load_physical_traces(in_dir)) {
        if (!t.label) {
            throw std::invalid_argument("trace '" + t.trace_id + "' carries no label");
        }
        const ml::SequenceSample s = ml::extract_maneuver_window(t, cfg.window);
        cm.add(*t.label, turn_class_from_index(model.predict_scores(s).argmax()));
    }
    const std::string table = format_metrics_table(cm, "clean-data evaluation (one-vs-rest)");
    std::cout << table;
    fs::create_directories(g.out_dir);
    std::ofstream out(fs::path(g.out_dir) / "evaluation.txt");
    out << table;
    return 0;
}

int cmd_report(const GlobalOpts& g) {
    const ExperimentConfig cfg = g.load();
    const ExperimentReport report = run_experiment(cfg, g.out_dir);
    std::cout << report.report_text;
    std::cout << "report written to " << (fs::path(g.out_dir) / "report.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"teleoperated-driving security toolkit: synthetic maneuvers, steering-command "
                 "fault injection, a vehicle plant model, and two-stage anomaly detection"};
    app.require_subcommand(1);
    app.fallthrough();  // accept --config/--out/--seed after the subcommand too

    GlobalOpts g;
    app.add_option("--config", g.config_path, "experiment config JSON")->expected(1);
    app.add_option("--out", g.out_dir, "output directory (default: out)")->expected(1);
    std::uint64_t seed_value = 0;
    CLI::Option* seed_opt =
        app.add_option("--seed", seed_value, "override the config seed")->expected(1);

    std::string in_dir, placement = "both", model_name, model_file, route_file, log_file;
    bool full_window = false, route_fixture_too = false;

    CLI::App* generate = app.add_subcommand("generate", "synthesize a labeled command-trace dataset");
    generate->add_flag("--route-fixture", route_fixture_too,
                       "also write a seeded route plan and drive log");

    CLI::App* simulate = app.add_subcommand("simulate", "run traces through the vehicle plant");
    simulate->add_option("--in", in_dir, "directory of command-trace CSVs")->required();

    CLI::App* inject = app.add_subcommand("inject", "build P1/P2 attacked sets");
    inject->add_option("--in", in_dir, "directory of command-trace CSVs")->required();
    inject->add_option("--placement", placement, "p1, p2 or both (default both)")
        ->check(CLI::IsMember({"p1", "p2", "both"}));

    CLI::App* train = app.add_subcommand("train", "fit classifiers on physical-trace windows");
    train->add_option("--in", in_dir, "directory of physical-trace CSVs")->required();
    train->add_option("--model", model_name, "single model kind (default: config list)");
    train->add_flag("--full-window", full_window, "train on whole traces instead of windows");

    CLI::App* detect = app.add_subcommand("detect", "physics-check traces against their plans");
    detect->add_option("--in", in_dir, "directory of physical-trace CSVs")->required();
    detect->add_option("--model-file", model_file, "trained model JSON")->required();

    CLI::App* context = app.add_subcommand("context-check", "route-plan consistency check");
    context->add_option("--route", route_file, "route plan JSON")->required();
    context->add_option("--log", log_file, "drive log JSON")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a model on labeled clean traces");
    evaluate->add_option("--in", in_dir, "directory of labeled physical-trace CSVs")->required();
    evaluate->add_option("--model-file", model_file, "trained model JSON")->required();

    app.add_subcommand("report", "run the full experiment pipeline and write the report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // bad usage is a validation error
    }
    if (*seed_opt) g.seed = seed_value;

    try {
        if (app.got_subcommand(generate)) return cmd_generate(g, route_fixture_too);
        if (app.got_subcommand(simulate)) return cmd_simulate(g, in_dir);
        if (app.got_subcommand(inject)) return cmd_inject(g, in_dir, placement);
        if (app.got_subcommand(train)) return cmd_train(g, in_dir, model_name, full_window);
        if (app.got_subcommand(detect)) return cmd_detect(g, in_dir, model_file);
        if (app.got_subcommand(context)) return cmd_context_check(g, route_file, log_file);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(g, in_dir, model_file);
        if (app.got_subcommand("report")) return cmd_report(g);
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
