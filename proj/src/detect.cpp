#include "todsec/detect.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace todsec {

namespace {

std::string fmt_p(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

bool score_anomaly(const ml::ClassScores& scores, ManeuverClass expected) {
    if (!is_turn_class(expected)) {
        throw std::invalid_argument("expected maneuver must be a turn class");
    }
    const int exp_idx = turn_class_index(expected);
    double best_other = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (i != exp_idx) best_other = std::max(best_other, scores.log_p(i));
    }
    return scores.log_p(exp_idx) < best_other;
}

DetectionResult detect_trace(const PhysicalParameterTrace& trace, const ml::TrainedModel& model,
                             const ml::WindowConfig& window,
                             std::optional<ManeuverClass> expected) {
    std::optional<ManeuverClass> plan = expected ? expected : trace.label;
    if (!plan) {
        throw std::invalid_argument("trace '" + trace.trace_id +
                                    "' has no planned maneuver to check against");
    }

    DetectionResult r;
    r.trace_id = trace.trace_id;
    r.expected = *plan;

    const ml::SequenceSample sample = ml::extract_maneuver_window(trace, window);
    r.window_steps = static_cast<std::size_t>(sample.steps());
    r.scores = model.predict_scores(sample);
    r.predicted = turn_class_from_index(r.scores.argmax());
    const bool flagged = score_anomaly(r.scores, *plan);

    const std::string detail =
        "window " + std::to_string(r.window_steps) + " steps; expected " + to_string(*plan) +
        " p=" + fmt_p(r.scores.p[turn_class_index(*plan)]) + ", best " + to_string(r.predicted) +
        " p=" + fmt_p(r.scores.p[r.scores.argmax()]);
    r.verdict = make_verdict(VerdictKind::PhysicsScore, std::nullopt, trace.trace_id, flagged,
                             false, detail);
    r.verdict.expected = *plan;
    r.verdict.observed = r.predicted;
    return r;
}

AttackSetEvaluation evaluate_attack_set(const std::vector<PhysicalParameterTrace>& traces,
                                        const ml::TrainedModel& model,
                                        const ml::WindowConfig& window) {
    AttackSetEvaluation eval;
    eval.n_tested = traces.size();
    eval.results.reserve(traces.size());
    for (const PhysicalParameterTrace& trace : traces) {
        eval.results.push_back(detect_trace(trace, model, window));
        if (eval.results.back().verdict.flagged) ++eval.n_detected;
    }
    return eval;
}

void write_detection_summary(const AttackSetEvaluation& eval, const std::filesystem::path& path) {
    nlohmann::ordered_json by_class = nlohmann::ordered_json::object();
    for (int c = 0; c < 3; ++c) {
        std::size_t tested = 0, detected = 0;
        for (const DetectionResult& r : eval.results) {
            if (turn_class_index(r.expected) != c) continue;
            ++tested;
            if (r.verdict.flagged) ++detected;
        }
        by_class[to_string(turn_class_from_index(c))] = {{"tested", tested},
                                                         {"detected", detected}};
    }

    nlohmann::ordered_json j{
        {"n_tested", eval.n_tested},
        {"n_detected", eval.n_detected},
        {"detection_rate", eval.n_tested == 0 ? 0.0
                                              : static_cast<double>(eval.n_detected) /
                                                    static_cast<double>(eval.n_tested)},
        {"by_expected", std::move(by_class)}};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << "\n";
}

void write_detection_results(const std::vector<DetectionResult>& results,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    for (const DetectionResult& r : results) {
        nlohmann::ordered_json j{{"trace_id", r.trace_id},
                                 {"expected", to_string(r.expected)},
                                 {"predicted", to_string(r.predicted)},
                                 {"window_steps", r.window_steps},
                                 {"p", {r.scores.p[0], r.scores.p[1], r.scores.p[2]}},
                                 {"flagged", r.verdict.flagged},
                                 {"detail", r.verdict.detail}};
        out << j.dump() << "\n";
    }
}

std::vector<DetectionResult> parse_detection_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::vector<DetectionResult> results;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            DetectionResult r;
            r.trace_id = j.at("trace_id").get<std::string>();
            r.expected = maneuver_from_string(j.at("expected").get<std::string>());
            r.predicted = maneuver_from_string(j.at("predicted").get<std::string>());
            r.window_steps = j.at("window_steps").get<std::size_t>();
            const auto& p = j.at("p");
            if (!p.is_array() || p.size() != 3) {
                throw std::runtime_error("p must hold three probabilities");
            }
            for (int i = 0; i < 3; ++i) r.scores.p[i] = p[i].get<double>();
            r.verdict = make_verdict(VerdictKind::PhysicsScore, std::nullopt, r.trace_id,
                                     j.at("flagged").get<bool>(), false,
                                     j.value("detail", std::string()));
            r.verdict.expected = r.expected;
            r.verdict.observed = r.predicted;
            results.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("bad detection record at line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return results;
}

}  // namespace todsec
