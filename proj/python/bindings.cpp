#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "todsec/attack.hpp"
#include "todsec/context.hpp"
#include "todsec/detect.hpp"
#include "todsec/experiment.hpp"
#include "todsec/metrics.hpp"
#include "todsec/ml/model_io.hpp"
#include "todsec/ml/train.hpp"
#include "todsec/route.hpp"
#include "todsec/synth.hpp"
#include "todsec/trace_io.hpp"
#include "todsec/types.hpp"
#include "todsec/vehicle.hpp"

namespace py = pybind11;
using namespace todsec;

PYBIND11_MODULE(_todsec, m) {
    m.doc() = "teleoperated-driving security toolkit";

    py::enum_<ManeuverClass>(m, "ManeuverClass")
        .value("Straight", ManeuverClass::Straight)
        .value("LeftTurn", ManeuverClass::LeftTurn)
        .value("RightTurn", ManeuverClass::RightTurn)
        .value("UTurn", ManeuverClass::UTurn);

    py::class_<CommandSample>(m, "CommandSample")
        .def(py::init<>())
        .def_readwrite("swa_deg", &CommandSample::swa_deg)
        .def_readwrite("app_pct", &CommandSample::app_pct)
        .def_readwrite("bp", &CommandSample::bp);

    py::class_<ToDInputTrace>(m, "ToDInputTrace")
        .def(py::init<>())
        .def_readwrite("sample_period_s", &ToDInputTrace::sample_period_s)
        .def_readwrite("samples", &ToDInputTrace::samples)
        .def_readwrite("label", &ToDInputTrace::label)
        .def_readwrite("trace_id", &ToDInputTrace::trace_id)
        .def("__len__", &ToDInputTrace::size)
        .def("duration_s", &ToDInputTrace::duration_s);

    m.def("parse_trace", &parse_trace, py::arg("csv_path"));
    m.def("write_trace", &write_trace, py::arg("trace"), py::arg("csv_path"));

    py::class_<SyntheticGenConfig>(m, "SyntheticGenConfig")
        .def(py::init<>())
        .def_readwrite("count_left", &SyntheticGenConfig::count_left)
        .def_readwrite("count_right", &SyntheticGenConfig::count_right)
        .def_readwrite("count_uturn", &SyntheticGenConfig::count_uturn)
        .def_readwrite("trace_len_s", &SyntheticGenConfig::trace_len_s)
        .def_readwrite("seed", &SyntheticGenConfig::seed);

    py::class_<SyntheticTrace>(m, "SyntheticTrace")
        .def_readonly("trace", &SyntheticTrace::trace);

    m.def("generate_synthetic_dataset", &generate_synthetic_dataset, py::arg("config"));

    py::enum_<NoiseKind>(m, "NoiseKind")
        .value("Gaussian", NoiseKind::Gaussian)
        .value("Uniform", NoiseKind::Uniform)
        .value("ConstantOffset", NoiseKind::ConstantOffset);

    py::enum_<AttackPlacement>(m, "AttackPlacement")
        .value("P1_TurnOnset", AttackPlacement::P1_TurnOnset)
        .value("P2_TurnMidpoint", AttackPlacement::P2_TurnMidpoint)
        .value("Explicit", AttackPlacement::Explicit);

    py::class_<WindowOfOpportunity>(m, "WindowOfOpportunity")
        .def(py::init<>())
        .def_readwrite("injection_index", &WindowOfOpportunity::injection_index)
        .def_readwrite("duration_s", &WindowOfOpportunity::duration_s);

    py::class_<NoiseSpec>(m, "NoiseSpec")
        .def(py::init<>())
        .def_readwrite("kind", &NoiseSpec::kind)
        .def_readwrite("amplitude_deg", &NoiseSpec::amplitude_deg)
        .def_readwrite("seed", &NoiseSpec::seed);

    py::class_<AttackSpec>(m, "AttackSpec")
        .def(py::init<>())
        .def_readwrite("placement", &AttackSpec::placement)
        .def_readwrite("window", &AttackSpec::window)
        .def_readwrite("noise", &AttackSpec::noise)
        .def_readwrite("onset_threshold_deg", &AttackSpec::onset_threshold_deg)
        .def_readwrite("persistence_s", &AttackSpec::persistence_s);

    m.def("locate_turn_onset",
          static_cast<std::size_t (*)(const ToDInputTrace&, double, double)>(&locate_turn_onset),
          py::arg("trace"), py::arg("threshold_deg"), py::arg("persistence_s") = 0.5);
    m.def("locate_turn_midpoint", &locate_turn_midpoint, py::arg("trace"),
          py::arg("threshold_deg"), py::arg("persistence_s") = 0.5);
    m.def("inject_fdi", &inject_fdi, py::arg("trace"), py::arg("spec"));
    m.def("window_length_samples", &window_length_samples, py::arg("duration_s"),
          py::arg("sample_period_s"));

    py::class_<VehicleConfig>(m, "VehicleConfig")
        .def(py::init<>())
        .def_readwrite("mass_kg", &VehicleConfig::mass_kg)
        .def_readwrite("wheelbase_m", &VehicleConfig::wheelbase_m)
        .def_readwrite("steering_ratio", &VehicleConfig::steering_ratio)
        .def_readwrite("initial_speed_ms", &VehicleConfig::initial_speed_ms);

    py::class_<PhysicalParameterTrace>(m, "PhysicalParameterTrace")
        .def_readonly("trace_id", &PhysicalParameterTrace::trace_id)
        .def_readonly("n_motors", &PhysicalParameterTrace::n_motors)
        .def_readonly("wa_rad", &PhysicalParameterTrace::wa_rad)
        .def_readonly("yaw_rad", &PhysicalParameterTrace::yaw_rad)
        .def_readonly("ay_ms2", &PhysicalParameterTrace::ay_ms2)
        .def("__len__", &PhysicalParameterTrace::size)
        .def("feature_count", &PhysicalParameterTrace::feature_count);

    py::class_<SimulationResult>(m, "SimulationResult")
        .def_readonly("physical", &SimulationResult::physical);

    m.def("simulate", &simulate, py::arg("commands"), py::arg("config") = VehicleConfig{});

    // --- route plans and context checking ---------------------------------

    py::class_<GeoPoint>(m, "GeoPoint")
        .def(py::init<>())
        .def(py::init([](double lat, double lon) { return GeoPoint{lat, lon}; }),
             py::arg("lat"), py::arg("lon"))
        .def_readwrite("lat", &GeoPoint::lat)
        .def_readwrite("lon", &GeoPoint::lon);

    py::class_<DynamicAlert>(m, "DynamicAlert")
        .def(py::init<>())
        .def_readwrite("location", &DynamicAlert::location)
        .def_readwrite("kind", &DynamicAlert::kind)
        .def_readwrite("active", &DynamicAlert::active);

    py::class_<RouteIntersection>(m, "RouteIntersection")
        .def(py::init<>())
        .def_readwrite("geo", &RouteIntersection::geo)
        .def_readwrite("maneuver", &RouteIntersection::maneuver)
        .def_readwrite("eta_s", &RouteIntersection::eta_s)
        .def_readwrite("eta_window_s", &RouteIntersection::eta_window_s);

    py::class_<RoutePlan>(m, "RoutePlan")
        .def(py::init<>())
        .def_readwrite("mission", &RoutePlan::mission)
        .def_readwrite("stops", &RoutePlan::stops)
        .def_readwrite("intersections", &RoutePlan::intersections);

    m.def("parse_route", &parse_route, py::arg("path"), py::arg("match_radius_m") = 30.0);
    m.def("write_route", &write_route, py::arg("route"), py::arg("path"));

    py::class_<ExpectationStore>(m, "ExpectationStore")
        .def("__len__", [](const ExpectationStore& s) { return s.entries.size(); });

    py::class_<ObservedEvent>(m, "ObservedEvent")
        .def(py::init<>())
        .def_readwrite("geo", &ObservedEvent::geo)
        .def_readwrite("maneuver", &ObservedEvent::maneuver)
        .def_readwrite("time_s", &ObservedEvent::time_s)
        .def_readwrite("alert", &ObservedEvent::alert);

    py::enum_<VerdictKind>(m, "VerdictKind")
        .value("ContextMismatch", VerdictKind::ContextMismatch)
        .value("ContextTimeWindow", VerdictKind::ContextTimeWindow)
        .value("PhysicsScore", VerdictKind::PhysicsScore);

    py::class_<AnomalyVerdict>(m, "AnomalyVerdict")
        .def_readonly("kind", &AnomalyVerdict::kind)
        .def_readonly("location", &AnomalyVerdict::location)
        .def_readonly("trace_id", &AnomalyVerdict::trace_id)
        .def_readonly("time_s", &AnomalyVerdict::time_s)
        .def_readonly("expected", &AnomalyVerdict::expected)
        .def_readonly("observed", &AnomalyVerdict::observed)
        .def_readonly("flagged", &AnomalyVerdict::flagged)
        .def_readonly("suppressed_by_alert", &AnomalyVerdict::suppressed_by_alert)
        .def_readonly("detail", &AnomalyVerdict::detail);

    m.def("build_expectation_store", &build_expectation_store, py::arg("route"),
          py::arg("match_radius_m") = 30.0);
    m.def("detect_incorrect_maneuver", &detect_incorrect_maneuver, py::arg("events"),
          py::arg("store"));
    m.def("detect_incorrect_time", &detect_incorrect_time, py::arg("events"), py::arg("store"),
          py::arg("default_window_s") = 300.0);
    m.def("detect_with_alert_filter", &detect_with_alert_filter, py::arg("events"),
          py::arg("store"), py::arg("default_window_s") = 300.0);
    m.def("parse_drive_log", &parse_drive_log, py::arg("path"));
    m.def("write_drive_log", &write_drive_log, py::arg("events"), py::arg("path"));

    // --- sequence classifiers ---------------------------------------------

    py::enum_<ml::ModelKind>(m, "ModelKind")
        .value("Tree", ml::ModelKind::Tree)
        .value("NarrowNN", ml::ModelKind::NarrowNN)
        .value("MediumNN", ml::ModelKind::MediumNN)
        .value("WideNN", ml::ModelKind::WideNN)
        .value("BiLayeredNN", ml::ModelKind::BiLayeredNN)
        .value("TriLayeredNN", ml::ModelKind::TriLayeredNN)
        .value("LSTM", ml::ModelKind::LSTM);

    py::class_<ml::WindowConfig>(m, "WindowConfig")
        .def(py::init<>())
        .def_static("full", &ml::WindowConfig::full)
        .def_readwrite("threshold_deg", &ml::WindowConfig::threshold_deg)
        .def_readwrite("persistence_s", &ml::WindowConfig::persistence_s)
        .def_readwrite("padding_s", &ml::WindowConfig::padding_s)
        .def("is_full", &ml::WindowConfig::is_full);

    py::class_<ml::SequenceSample>(m, "SequenceSample")
        .def(py::init<>())
        .def_readwrite("features", &ml::SequenceSample::features)
        .def_readwrite("label", &ml::SequenceSample::label)
        .def_readwrite("trace_id", &ml::SequenceSample::trace_id)
        .def("steps", &ml::SequenceSample::steps)
        .def("channels", &ml::SequenceSample::channels);

    py::class_<ml::ClassScores>(m, "ClassScores")
        .def(py::init<>())
        .def_readwrite("p", &ml::ClassScores::p)
        .def("log_p", &ml::ClassScores::log_p, py::arg("class_index"))
        .def("argmax", &ml::ClassScores::argmax);

    py::class_<ml::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("max_epochs", &ml::TrainConfig::max_epochs)
        .def_readwrite("batch_size", &ml::TrainConfig::batch_size)
        .def_readwrite("learning_rate", &ml::TrainConfig::learning_rate)
        .def_readwrite("grad_clip_norm", &ml::TrainConfig::grad_clip_norm)
        .def_readwrite("validation_fraction", &ml::TrainConfig::validation_fraction)
        .def_readwrite("patience", &ml::TrainConfig::patience)
        .def_readwrite("lstm_hidden", &ml::TrainConfig::lstm_hidden)
        .def_readwrite("lstm_readout_steps", &ml::TrainConfig::lstm_readout_steps)
        .def_readwrite("downsample_steps", &ml::TrainConfig::downsample_steps)
        .def_readwrite("tree_max_depth", &ml::TrainConfig::tree_max_depth)
        .def_readwrite("tree_min_leaf", &ml::TrainConfig::tree_min_leaf)
        .def_readwrite("seed", &ml::TrainConfig::seed);

    py::class_<ml::TrainedModel>(m, "TrainedModel")
        .def_readonly("kind", &ml::TrainedModel::kind)
        .def_readonly("digest", &ml::TrainedModel::digest)
        .def("predict_scores", &ml::TrainedModel::predict_scores, py::arg("sample"));

    m.def("extract_maneuver_window",
          static_cast<ml::SequenceSample (*)(const ToDInputTrace&, const ml::WindowConfig&)>(
              &ml::extract_maneuver_window),
          py::arg("trace"), py::arg("config"));
    m.def("extract_maneuver_window",
          static_cast<ml::SequenceSample (*)(const PhysicalParameterTrace&,
                                             const ml::WindowConfig&)>(
              &ml::extract_maneuver_window),
          py::arg("trace"), py::arg("config"));
    m.def("train", &ml::train, py::arg("samples"), py::arg("kind"),
          py::arg("config") = ml::TrainConfig{});
    m.def("save_model", &ml::save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &ml::load_model, py::arg("path"));

    // --- physics-based detection ------------------------------------------

    m.def("score_anomaly", &score_anomaly, py::arg("scores"), py::arg("expected"));

    py::class_<DetectionResult>(m, "DetectionResult")
        .def_readonly("trace_id", &DetectionResult::trace_id)
        .def_readonly("expected", &DetectionResult::expected)
        .def_readonly("window_steps", &DetectionResult::window_steps)
        .def_readonly("scores", &DetectionResult::scores)
        .def_readonly("predicted", &DetectionResult::predicted)
        .def_readonly("verdict", &DetectionResult::verdict);

    m.def("detect_trace", &detect_trace, py::arg("trace"), py::arg("model"), py::arg("window"),
          py::arg("expected") = std::nullopt);

    py::class_<AttackSetEvaluation>(m, "AttackSetEvaluation")
        .def_readonly("n_tested", &AttackSetEvaluation::n_tested)
        .def_readonly("n_detected", &AttackSetEvaluation::n_detected)
        .def_readonly("results", &AttackSetEvaluation::results);

    m.def("evaluate_attack_set", &evaluate_attack_set, py::arg("traces"), py::arg("model"),
          py::arg("window"));

    // --- metrics and the experiment driver --------------------------------

    py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
        .def(py::init<>())
        .def("add", &ConfusionMatrix::add, py::arg("truth"), py::arg("predicted"))
        .def("at", &ConfusionMatrix::at, py::arg("truth_idx"), py::arg("predicted_idx"))
        .def("total", &ConfusionMatrix::total)
        .def("diagonal", &ConfusionMatrix::diagonal);

    py::class_<ClassMetrics>(m, "ClassMetrics")
        .def_readonly("tp", &ClassMetrics::tp)
        .def_readonly("fp", &ClassMetrics::fp)
        .def_readonly("fn", &ClassMetrics::fn)
        .def_readonly("tn", &ClassMetrics::tn)
        .def_readonly("accuracy", &ClassMetrics::accuracy)
        .def_readonly("precision", &ClassMetrics::precision)
        .def_readonly("recall", &ClassMetrics::recall)
        .def_readonly("f1", &ClassMetrics::f1)
        .def_readonly("zero_division", &ClassMetrics::zero_division);

    m.def("confusion_matrix", &confusion_matrix, py::arg("predictions"), py::arg("truths"));
    m.def("metrics_per_class", &metrics_per_class, py::arg("cm"));
    m.def("macro_f1", &macro_f1, py::arg("cm"));
    m.def("format_metrics_table", &format_metrics_table, py::arg("cm"), py::arg("title"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("generator", &ExperimentConfig::generator)
        .def_readwrite("models", &ExperimentConfig::models)
        .def_readwrite("test_fraction", &ExperimentConfig::test_fraction)
        .def_readwrite("compare_full_sequence", &ExperimentConfig::compare_full_sequence)
        .def_readwrite("emit_plots", &ExperimentConfig::emit_plots);

    m.def("load_experiment_config", &load_experiment_config, py::arg("path"));
    m.def("smoke_experiment_config", &smoke_experiment_config);
    m.def("route_fixture", &route_fixture, py::arg("n_intersections"), py::arg("seed"));
    m.def("drive_log_with_flips", &drive_log_with_flips, py::arg("store"), py::arg("flips"),
          py::arg("alerts"), py::arg("seed"));

    py::class_<ContextSummary>(m, "ContextSummary")
        .def_readonly("n_intersections", &ContextSummary::n_intersections)
        .def_readonly("flips", &ContextSummary::flips)
        .def_readonly("alerts", &ContextSummary::alerts)
        .def_readonly("alg1_flags", &ContextSummary::alg1_flags)
        .def_readonly("alg3_flags", &ContextSummary::alg3_flags)
        .def_readonly("suppressed", &ContextSummary::suppressed);

    py::class_<CleanEval>(m, "CleanEval")
        .def_readonly("kind", &CleanEval::kind)
        .def_readonly("focused", &CleanEval::focused)
        .def_readonly("cm", &CleanEval::cm)
        .def_readonly("macro_f1", &CleanEval::macro_f1);

    py::class_<DetectionRow>(m, "DetectionRow")
        .def_readonly("kind", &DetectionRow::kind)
        .def_readonly("placement", &DetectionRow::placement)
        .def_readonly("n_tested", &DetectionRow::n_tested)
        .def_readonly("n_detected", &DetectionRow::n_detected);

    py::class_<ExperimentReport>(m, "ExperimentReport")
        .def_readonly("report_json", &ExperimentReport::report_json)
        .def_readonly("report_text", &ExperimentReport::report_text)
        .def_readonly("clean", &ExperimentReport::clean)
        .def_readonly("detection", &ExperimentReport::detection)
        .def_readonly("context", &ExperimentReport::context)
        .def_readonly("out_dir", &ExperimentReport::out_dir);

    m.def("run_experiment", &run_experiment, py::arg("config"), py::arg("out_dir"),
          py::call_guard<py::gil_scoped_release>());
}
