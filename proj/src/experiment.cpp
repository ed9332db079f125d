#include "todsec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "todsec/rng.hpp"

namespace todsec {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

/// Rejects keys outside the allowed set, so a typo cannot silently become a
/// default value.
void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&key](const char* a) { return key == a; }) == allowed.end()) {
            throw std::invalid_argument(std::string("unknown key '") + key + "' in " + where);
        }
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_generator(const json& j, SyntheticGenConfig& g) {
    check_keys(j, "generator",
               {"count_left", "count_right", "count_uturn", "trace_len_s", "sample_period_s",
                "onset_jitter_s", "swa_noise_sigma_deg", "swa_noise_tau_s"});
    read_field(j, "count_left", g.count_left);
    read_field(j, "count_right", g.count_right);
    read_field(j, "count_uturn", g.count_uturn);
    read_field(j, "trace_len_s", g.trace_len_s);
    read_field(j, "sample_period_s", g.sample_period_s);
    read_field(j, "onset_jitter_s", g.onset_jitter_s);
    read_field(j, "swa_noise_sigma_deg", g.swa_noise_sigma_deg);
    read_field(j, "swa_noise_tau_s", g.swa_noise_tau_s);
}

void parse_vehicle(const json& j, VehicleConfig& v) {
    check_keys(j, "vehicle",
               {"mass_kg", "wheelbase_m", "steering_ratio", "battery_v", "n_motors",
                "max_total_torque_nm", "wheel_radius_m", "brake_decel_ms2", "initial_speed_ms",
                "substep_s"});
    read_field(j, "mass_kg", v.mass_kg);
    read_field(j, "wheelbase_m", v.wheelbase_m);
    read_field(j, "steering_ratio", v.steering_ratio);
    read_field(j, "battery_v", v.battery_v);
    read_field(j, "n_motors", v.drivetrain.n_motors);
    read_field(j, "max_total_torque_nm", v.drivetrain.max_total_torque_nm);
    read_field(j, "wheel_radius_m", v.drivetrain.wheel_radius_m);
    read_field(j, "brake_decel_ms2", v.brake_decel_ms2);
    read_field(j, "initial_speed_ms", v.initial_speed_ms);
    read_field(j, "substep_s", v.substep_s);
}

void parse_train(const json& j, const char* where, ml::TrainConfig& t) {
    check_keys(j, where,
               {"max_epochs", "batch_size", "learning_rate", "grad_clip_norm",
                "validation_fraction", "patience", "lstm_hidden", "lstm_readout_steps",
                "downsample_steps", "tree_max_depth", "tree_min_leaf", "seed"});
    read_field(j, "max_epochs", t.max_epochs);
    read_field(j, "batch_size", t.batch_size);
    read_field(j, "learning_rate", t.learning_rate);
    read_field(j, "grad_clip_norm", t.grad_clip_norm);
    read_field(j, "validation_fraction", t.validation_fraction);
    read_field(j, "patience", t.patience);
    read_field(j, "lstm_hidden", t.lstm_hidden);
    read_field(j, "lstm_readout_steps", t.lstm_readout_steps);
    read_field(j, "downsample_steps", t.downsample_steps);
    read_field(j, "tree_max_depth", t.tree_max_depth);
    read_field(j, "tree_min_leaf", t.tree_min_leaf);
    read_field(j, "seed", t.seed);
}

void parse_window(const json& j, ml::WindowConfig& w) {
    check_keys(j, "window", {"threshold_deg", "persistence_s", "padding_s"});
    read_field(j, "threshold_deg", w.threshold_deg);
    read_field(j, "persistence_s", w.persistence_s);
    read_field(j, "padding_s", w.padding_s);
}

void parse_attack(const json& j, ExperimentAttackConfig& a) {
    check_keys(j, "attack", {"n_attacked", "duration_s", "noise_kind", "amplitude_deg"});
    read_field(j, "n_attacked", a.n_attacked);
    read_field(j, "duration_s", a.duration_s);
    if (j.contains("noise_kind")) {
        a.noise_kind = noise_kind_from_string(j.at("noise_kind").get<std::string>());
    }
    read_field(j, "amplitude_deg", a.amplitude_deg);
}

void parse_context(const json& j, ExperimentContextConfig& c) {
    check_keys(j, "context", {"n_intersections", "flips", "alerts"});
    read_field(j, "n_intersections", c.n_intersections);
    read_field(j, "flips", c.flips);
    read_field(j, "alerts", c.alerts);
}

// ---------------------------------------------------------------------------
// Stage machinery
// ---------------------------------------------------------------------------

/// Wraps a stage so any failure is reported with the stage's name.
template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(name) + " stage failed: " + e.what());
    }
}

std::string placement_slug(AttackPlacement p) {
    return p == AttackPlacement::P1_TurnOnset ? "p1" : "p2";
}

ordered_json metrics_json(const ConfusionMatrix& cm) {
    ordered_json confusion = ordered_json::array();
    for (int r = 0; r < 3; ++r) {
        ordered_json row = ordered_json::array();
        for (int c = 0; c < 3; ++c) row.push_back(cm.at(r, c));
        confusion.push_back(std::move(row));
    }
    ordered_json per_class = ordered_json::object();
    const auto metrics = metrics_per_class(cm);
    for (int c = 0; c < 3; ++c) {
        const ClassMetrics& m = metrics[static_cast<std::size_t>(c)];
        per_class[to_string(turn_class_from_index(c))] = {
            {"accuracy", m.accuracy}, {"precision", m.precision},      {"recall", m.recall},
            {"f1", m.f1},             {"zero_division", m.zero_division}};
    }
    return ordered_json{{"confusion", std::move(confusion)},
                        {"per_class", std::move(per_class)},
                        {"macro_f1", macro_f1(cm)}};
}

/// Minimal SVG scatter of the route with flipped events highlighted.
std::string route_map_svg(const ExpectationStore& store, const std::vector<ObservedEvent>& events) {
    double lat_lo = 1e9, lat_hi = -1e9, lon_lo = 1e9, lon_hi = -1e9;
    for (const ExpectationEntry& e : store.entries) {
        lat_lo = std::min(lat_lo, e.geo.lat);
        lat_hi = std::max(lat_hi, e.geo.lat);
        lon_lo = std::min(lon_lo, e.geo.lon);
        lon_hi = std::max(lon_hi, e.geo.lon);
    }
    const double lat_span = std::max(lat_hi - lat_lo, 1e-9);
    const double lon_span = std::max(lon_hi - lon_lo, 1e-9);
    auto px = [&](const GeoPoint& g) {
        const double x = 40.0 + 420.0 * (g.lon - lon_lo) / lon_span;
        const double y = 460.0 - 420.0 * (g.lat - lat_lo) / lat_span;
        return std::pair<double, double>(x, y);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 500 500\">\n";
    svg << "<rect width=\"500\" height=\"500\" fill=\"white\"/>\n";
    svg << "<text x=\"20\" y=\"24\" font-size=\"14\">route intersections (x = mismatch)</text>\n";
    for (std::size_t i = 0; i < store.entries.size(); ++i) {
        const auto [x, y] = px(store.entries[i].geo);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"5\" fill=\"steelblue\"/>\n", x, y);
        svg << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\">%s</text>\n",
                      x + 8.0, y + 4.0, to_string(store.entries[i].maneuver).c_str());
        svg << buf;
    }
    for (const ObservedEvent& ev : events) {
        const auto idx = match_intersection(ev.geo, store);
        if (!idx || store.entries[*idx].maneuver == ev.maneuver) continue;
        const auto [x, y] = px(ev.geo);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"16\" fill=\"crimson\">x</text>\n",
                      x - 5.0, y + 5.0);
        svg << buf;
    }
    svg << "</svg>\n";
    return svg.str();
}

/// Clean-vs-attacked steering overlay for one trace pair.
std::string swa_overlay_svg(const ToDInputTrace& clean, const ToDInputTrace& attacked) {
    const std::size_t n = clean.samples.size();
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 400\">\n";
    svg << "<rect width=\"800\" height=\"400\" fill=\"white\"/>\n";
    svg << "<text x=\"20\" y=\"24\" font-size=\"14\">steering command, clean (blue) vs "
           "attacked (red): "
        << clean.trace_id << "</text>\n";
    auto polyline = [&](const ToDInputTrace& trace, const char* color) {
        std::ostringstream pts;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = 40.0 + 720.0 * static_cast<double>(i) /
                                        static_cast<double>(std::max<std::size_t>(n - 1, 1));
            const double y = 200.0 - trace.samples[i].swa_deg * (160.0 / 450.0);
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.1f,%.1f ", x, y);
            pts << buf;
        }
        return "<polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1\" points=\"" + pts.str() + "\"/>\n";
    };
    svg << polyline(attacked, "crimson");
    svg << polyline(clean, "steelblue");
    svg << "</svg>\n";
    return svg.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("experiment config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
    check_keys(j, "experiment config",
               {"schema_version", "seed", "generator", "vehicle", "models", "train", "full_train",
                "window", "compare_full_sequence", "test_fraction", "attack", "context",
                "route_file", "emit_plots"});

    ExperimentConfig cfg;
    read_field(j, "schema_version", cfg.schema_version);
    if (cfg.schema_version != 1) {
        throw std::invalid_argument("unsupported experiment config schema_version " +
                                    std::to_string(cfg.schema_version));
    }
    read_field(j, "seed", cfg.seed);
    if (j.contains("generator")) parse_generator(j.at("generator"), cfg.generator);
    if (j.contains("vehicle")) parse_vehicle(j.at("vehicle"), cfg.vehicle);
    if (j.contains("models")) {
        cfg.models.clear();
        for (const auto& name : j.at("models")) {
            cfg.models.push_back(ml::model_kind_from_string(name.get<std::string>()));
        }
        if (cfg.models.empty()) throw std::invalid_argument("models list must not be empty");
    }
    if (j.contains("train")) parse_train(j.at("train"), "train", cfg.train);
    if (j.contains("full_train")) {
        ml::TrainConfig full = cfg.train;
        parse_train(j.at("full_train"), "full_train", full);
        cfg.full_train = full;
    }
    if (j.contains("window")) parse_window(j.at("window"), cfg.window);
    read_field(j, "compare_full_sequence", cfg.compare_full_sequence);
    read_field(j, "test_fraction", cfg.test_fraction);
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must lie in (0, 1)");
    }
    if (j.contains("attack")) parse_attack(j.at("attack"), cfg.attack);
    if (j.contains("context")) parse_context(j.at("context"), cfg.context);
    if (j.contains("route_file")) {
        std::filesystem::path p = j.at("route_file").get<std::string>();
        cfg.route_file = p.is_absolute() ? p : base_dir / p;
    }
    read_field(j, "emit_plots", cfg.emit_plots);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open experiment config '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_experiment_config(text, path.has_parent_path() ? path.parent_path()
                                                                : std::filesystem::path("."));
}

ExperimentConfig smoke_experiment_config() {
    ExperimentConfig cfg;
    cfg.generator.count_left = 4;
    cfg.generator.count_right = 4;
    cfg.generator.count_uturn = 4;
    cfg.generator.trace_len_s = 30.0;
    cfg.generator.onset_jitter_s = 3.0;
    cfg.models = {ml::ModelKind::Tree};
    cfg.attack.n_attacked = 4;
    cfg.test_fraction = 0.25;
    return cfg;
}

// ---------------------------------------------------------------------------
// Context fixture
// ---------------------------------------------------------------------------

RoutePlan route_fixture(std::size_t n_intersections, std::uint64_t seed) {
    // ~111.19 km per degree of latitude on the spherical model.
    constexpr double kDegPerMeterLat = 1.0 / 111194.9266;
    Rng rng = Rng(seed).fork("route-fixture");

    RoutePlan route;
    route.mission = "fixture-" + std::to_string(seed);
    route.stops = {"depot", "drop-off"};
    const ManeuverClass cycle[] = {ManeuverClass::LeftTurn, ManeuverClass::RightTurn,
                                   ManeuverClass::UTurn, ManeuverClass::Straight};
    for (std::size_t i = 0; i < n_intersections; ++i) {
        RouteIntersection ri;
        // ~1.1 km spacing with up to +/-25 m of jitter: far beyond the 30 m
        // match radius, so entries can never collide.
        ri.geo.lat = 40.0 + 0.01 * static_cast<double>(i) +
                         rng.uniform(-25.0, 25.0) * kDegPerMeterLat;
        ri.geo.lon = -75.0 + rng.uniform(-25.0, 25.0) * kDegPerMeterLat;
        ri.maneuver = cycle[i % 4];
        ri.eta_s = 60.0 * static_cast<double>(i) + rng.uniform(-5.0, 5.0);
        ri.eta_window_s = 300.0;
        route.intersections.push_back(ri);
    }
    return route;
}

std::vector<ObservedEvent> drive_log_with_flips(const ExpectationStore& store, std::size_t flips,
                                                std::size_t alerts, std::uint64_t seed) {
    if (flips > store.entries.size()) {
        throw std::invalid_argument("cannot flip more maneuvers than the route has");
    }
    if (alerts > flips) {
        throw std::invalid_argument("coincident alerts cannot outnumber the flips");
    }

    std::vector<ObservedEvent> events;
    for (const ExpectationEntry& e : store.entries) {
        events.push_back({e.geo, e.maneuver, e.expected_time_s, std::nullopt, VehicleHealth::OK});
    }

    Rng rng = Rng(seed).fork("drive-log");
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    order.resize(flips);
    std::sort(order.begin(), order.end());

    for (std::size_t k = 0; k < order.size(); ++k) {
        ObservedEvent& ev = events[order[k]];
        // Turn somewhere the plan does not expect; straights turn left.
        ev.maneuver = is_turn_class(ev.maneuver)
                          ? turn_class_from_index((turn_class_index(ev.maneuver) + 1) % 3)
                          : ManeuverClass::LeftTurn;
        if (k < alerts) {
            ev.alert = DynamicAlert{ev.geo, "road_obstruction", true};
        }
    }
    return events;
}

// ---------------------------------------------------------------------------
// The experiment pipeline
// ---------------------------------------------------------------------------

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir) {
    const Rng root(cfg.seed);

    // -- generate ------------------------------------------------------------
    std::vector<SyntheticTrace> synthetic = stage("generate", [&] {
        SyntheticGenConfig gen = cfg.generator;
        gen.seed = root.fork("generate").seed();
        validate_config(gen);
        return generate_synthetic_dataset(gen);
    });
    std::vector<ToDInputTrace> commands;
    commands.reserve(synthetic.size());
    for (const SyntheticTrace& st : synthetic) commands.push_back(st.trace);

    // -- simulate ------------------------------------------------------------
    std::vector<PhysicalParameterTrace> physical = stage("simulate", [&] {
        validate_config(cfg.vehicle);
        std::vector<PhysicalParameterTrace> out;
        out.reserve(commands.size());
        for (const ToDInputTrace& t : commands) out.push_back(simulate(t, cfg.vehicle).physical);
        return out;
    });

    // -- train ---------------------------------------------------------------
    struct TrainedPair {
        ml::ModelKind kind;
        ml::TrainedModel focused;
        std::optional<ml::TrainedModel> full;
    };
    std::vector<CleanEval> clean_evals;
    std::vector<TrainedPair> trained = stage("train", [&] {
        std::vector<ml::SequenceSample> focused, full;
        focused.reserve(physical.size());
        for (const PhysicalParameterTrace& t : physical) {
            focused.push_back(ml::extract_maneuver_window(t, cfg.window));
            if (cfg.compare_full_sequence) {
                full.push_back(ml::extract_maneuver_window(t, ml::WindowConfig::full()));
            }
        }
        const auto [train_ids, test_ids] =
            ml::stratified_split(focused, cfg.test_fraction, root.fork("test-split").seed());

        auto subset = [](const std::vector<ml::SequenceSample>& all,
                         const std::vector<std::size_t>& ids) {
            std::vector<ml::SequenceSample> out;
            out.reserve(ids.size());
            for (std::size_t i : ids) out.push_back(all[i]);
            return out;
        };
        auto evaluate = [&](const ml::TrainedModel& model,
                            const std::vector<ml::SequenceSample>& test) {
            ConfusionMatrix cm;
            for (const ml::SequenceSample& s : test) {
                cm.add(s.label, turn_class_from_index(model.predict_scores(s).argmax()));
            }
            return cm;
        };

        const auto focused_train = subset(focused, train_ids);
        const auto focused_test = subset(focused, test_ids);
        const ml::TrainConfig full_cfg = cfg.full_train.value_or(cfg.train);

        std::vector<TrainedPair> out;
        for (ml::ModelKind kind : cfg.models) {
            TrainedPair pair{kind, ml::train(focused_train, kind, cfg.train), std::nullopt};
            const ConfusionMatrix cm = evaluate(pair.focused, focused_test);
            clean_evals.push_back({kind, true, cm, macro_f1(cm)});
            out.push_back(std::move(pair));
        }
        if (cfg.compare_full_sequence) {
            const auto full_train_set = subset(full, train_ids);
            const auto full_test = subset(full, test_ids);
            for (TrainedPair& pair : out) {
                pair.full = ml::train(full_train_set, pair.kind, full_cfg);
                const ConfusionMatrix cm = evaluate(*pair.full, full_test);
                clean_evals.push_back({pair.kind, false, cm, macro_f1(cm)});
            }
        }
        return out;
    });

    // -- inject --------------------------------------------------------------
    auto make_attack_set = [&](AttackPlacement placement) {
        AttackSpec spec;
        spec.placement = placement;
        spec.window.duration_s = cfg.attack.duration_s;
        spec.noise.kind = cfg.attack.noise_kind;
        spec.noise.amplitude_deg = cfg.attack.amplitude_deg;
        spec.onset_threshold_deg = cfg.window.threshold_deg;
        spec.persistence_s = cfg.window.persistence_s;
        return build_attack_set(commands, cfg.attack.n_attacked, spec,
                                root.fork("attack-" + placement_slug(placement)).seed());
    };
    const AttackSet p1 = stage("inject", [&] { return make_attack_set(AttackPlacement::P1_TurnOnset); });
    const AttackSet p2 =
        stage("inject", [&] { return make_attack_set(AttackPlacement::P2_TurnMidpoint); });

    // -- simulate attacked -----------------------------------------------------
    auto simulate_set = [&](const AttackSet& set) {
        std::vector<PhysicalParameterTrace> out;
        out.reserve(set.traces.size());
        for (const ToDInputTrace& t : set.traces) out.push_back(simulate(t, cfg.vehicle).physical);
        return out;
    };
    const std::vector<PhysicalParameterTrace> p1_physical =
        stage("simulate-attacked", [&] { return simulate_set(p1); });
    const std::vector<PhysicalParameterTrace> p2_physical =
        stage("simulate-attacked", [&] { return simulate_set(p2); });

    // -- detect --------------------------------------------------------------
    struct DetectionRun {
        ml::ModelKind kind;
        AttackPlacement placement;
        AttackSetEvaluation eval;
    };
    std::vector<DetectionRow> detection_rows;
    const std::vector<DetectionRun> detection_runs = stage("detect", [&] {
        const std::pair<const std::vector<PhysicalParameterTrace>*, AttackPlacement> sets[] = {
            {&p1_physical, AttackPlacement::P1_TurnOnset},
            {&p2_physical, AttackPlacement::P2_TurnMidpoint}};
        std::vector<DetectionRun> runs;
        for (const TrainedPair& pair : trained) {
            for (const auto& [traces, placement] : sets) {
                AttackSetEvaluation eval = evaluate_attack_set(*traces, pair.focused, cfg.window);
                detection_rows.push_back({pair.kind, placement, eval.n_tested, eval.n_detected});
                runs.push_back({pair.kind, placement, std::move(eval)});
            }
        }
        return runs;
    });

    // -- context -------------------------------------------------------------
    std::vector<AnomalyVerdict> context_verdicts;
    ExpectationStore store;
    std::vector<ObservedEvent> context_events;
    const ContextSummary context_summary = stage("context", [&] {
        const RoutePlan route = cfg.route_file
                                    ? parse_route(*cfg.route_file)
                                    : route_fixture(cfg.context.n_intersections,
                                                    root.fork("route").seed());
        store = build_expectation_store(route);
        context_events = drive_log_with_flips(store, cfg.context.flips, cfg.context.alerts,
                                              root.fork("context").seed());
        const auto alg1 = detect_incorrect_maneuver(context_events, store);
        const auto alg3 = detect_with_alert_filter(context_events, store);
        context_verdicts = alg3;

        ContextSummary s;
        s.n_intersections = store.entries.size();
        s.flips = cfg.context.flips;
        s.alerts = cfg.context.alerts;
        for (const AnomalyVerdict& v : alg1) s.alg1_flags += v.flagged ? 1 : 0;
        for (const AnomalyVerdict& v : alg3) {
            s.alg3_flags += v.flagged ? 1 : 0;
            s.suppressed += v.suppressed_by_alert ? 1 : 0;
        }
        return s;
    });

    // -- report --------------------------------------------------------------
    ExperimentReport report;
    report.context = context_summary;
    report.clean = clean_evals;
    report.detection = detection_rows;
    report.out_dir = out_dir;

    stage("report", [&] {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir / "attacks");
        fs::create_directories(out_dir / "detections");
        fs::create_directories(out_dir / "context");

        ordered_json j;
        j["schema_version"] = 1;
        j["seed"] = cfg.seed;
        j["assumptions"] = {
            {"per_class_accuracy", "one-vs-rest: (TP+TN)/total with the class as positive"}};
        j["dataset"] = {{"counts",
                         ordered_json{{"lt", cfg.generator.count_left},
                                      {"rt", cfg.generator.count_right},
                                      {"ut", cfg.generator.count_uturn}}},
                        {"n_traces", commands.size()},
                        {"test_fraction", cfg.test_fraction}};

        ordered_json clean = ordered_json::object();
        for (const char* mode : {"focused", "full"}) {
            const bool focused = std::string(mode) == "focused";
            if (!focused && !cfg.compare_full_sequence) continue;
            ordered_json per_kind = ordered_json::object();
            for (const CleanEval& e : clean_evals) {
                if (e.focused == focused) per_kind[ml::to_string(e.kind)] = metrics_json(e.cm);
            }
            clean[mode] = std::move(per_kind);
        }
        j["clean"] = std::move(clean);

        j["attacks"] = ordered_json::object();
        for (const auto& [slug, set] : {std::pair{"p1", &p1}, std::pair{"p2", &p2}}) {
            j["attacks"][slug] = {{"n_attacked", set->traces.size()},
                                  {"duration_s", cfg.attack.duration_s},
                                  {"noise",
                                   ordered_json{{"kind", to_string(cfg.attack.noise_kind)},
                                                {"amplitude_deg", cfg.attack.amplitude_deg}}}};
        }

        ordered_json detection = ordered_json::object();
        for (const char* slug : {"p1", "p2"}) {
            detection[slug] = ordered_json::object();
        }
        for (const DetectionRow& row : detection_rows) {
            detection[placement_slug(row.placement)][ml::to_string(row.kind)] = {
                {"n_tested", row.n_tested},
                {"n_detected", row.n_detected},
                {"detection_rate", row.n_tested == 0
                                       ? 0.0
                                       : static_cast<double>(row.n_detected) /
                                             static_cast<double>(row.n_tested)}};
        }
        j["detection"] = std::move(detection);

        j["context"] = {{"n_intersections", context_summary.n_intersections},
                        {"flips", context_summary.flips},
                        {"alerts", context_summary.alerts},
                        {"alg1_flags", context_summary.alg1_flags},
                        {"alg3_flags", context_summary.alg3_flags},
                        {"suppressed", context_summary.suppressed}};

        report.report_json = j.dump(2) + "\n";

        // Aligned text tables mirroring the JSON.
        std::ostringstream text;
        text << "experiment seed " << cfg.seed << " over " << commands.size() << " traces\n";
        text << "per-class accuracy is one-vs-rest\n\n";
        for (const CleanEval& e : clean_evals) {
            text << format_metrics_table(
                        e.cm, std::string(e.focused ? "focused" : "full-sequence") + " window, " +
                                  ml::to_string(e.kind))
                 << "\n";
        }
        text << "detection (flagged / tested)\n";
        text << "model           placement  tested  detected  rate\n";
        for (const DetectionRow& row : detection_rows) {
            char buf[112];
            std::snprintf(buf, sizeof buf, "%-15s %-9s  %6zu  %8zu  %4.2f\n",
                          ml::to_string(row.kind).c_str(), placement_slug(row.placement).c_str(),
                          row.n_tested, row.n_detected,
                          row.n_tested ? static_cast<double>(row.n_detected) /
                                             static_cast<double>(row.n_tested)
                                       : 0.0);
            text << buf;
        }
        text << "\ncontext: " << context_summary.n_intersections << " intersections, "
             << context_summary.flips << " flips, " << context_summary.alerts
             << " coincident alerts -> stage-1 flags " << context_summary.alg1_flags
             << ", filtered flags " << context_summary.alg3_flags << " with "
             << context_summary.suppressed << " suppressed\n";
        report.report_text = text.str();

        write_text_file(out_dir / "report.json", report.report_json);
        write_text_file(out_dir / "report.txt", report.report_text);
        write_attack_manifest(p1.manifest, out_dir / "attacks" / "p1_manifest.json");
        write_attack_manifest(p2.manifest, out_dir / "attacks" / "p2_manifest.json");
        for (const DetectionRun& run : detection_runs) {
            write_detection_results(run.eval.results,
                                    out_dir / "detections" /
                                        (placement_slug(run.placement) + "_" +
                                         ml::to_string(run.kind) + ".jsonl"));
        }
        write_verdicts_jsonl(context_verdicts, out_dir / "context" / "verdicts.jsonl");

        if (cfg.emit_plots) {
            fs::create_directories(out_dir / "plots");
            write_text_file(out_dir / "plots" / "route_map.svg",
                            route_map_svg(store, context_events));
            if (!p1.traces.empty()) {
                const std::string& id = p1.manifest.front().trace_id;
                const auto clean_it =
                    std::find_if(commands.begin(), commands.end(),
                                 [&id](const ToDInputTrace& t) { return t.trace_id == id; });
                if (clean_it != commands.end()) {
                    write_text_file(out_dir / "plots" / "swa_overlay.svg",
                                    swa_overlay_svg(*clean_it, p1.traces.front()));
                }
            }
        }
        return 0;
    });

    return report;
}

}  // namespace todsec
