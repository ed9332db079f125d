#include "todsec/trace_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "todsec/csv_util.hpp"

namespace todsec {

namespace {

constexpr double kStepTolS = 1e-9;

}  // namespace

std::filesystem::path trace_sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

ToDInputTrace parse_trace_stream(std::istream& csv, double sample_period_s,
                                 const std::string& trace_id,
                                 std::optional<ManeuverClass> label) {
    std::string line;
    if (!std::getline(csv, line)) {
        throw std::runtime_error("empty trace file for '" + trace_id + "'");
    }
    if (split_csv_row(line) != std::vector<std::string>{"t_s", "swa_deg", "app_pct", "bp"}) {
        throw std::runtime_error("bad trace header: '" + line + "'");
    }
    std::vector<CommandSample> samples;
    std::vector<double> times;
    std::size_t row = 1;
    while (std::getline(csv, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_csv_row(line);
        if (fields.size() != 4) {
            throw std::runtime_error("malformed CSV row " + std::to_string(row) + ": expected 4 fields, got " +
                                     std::to_string(fields.size()));
        }
        times.push_back(parse_csv_double("t_s", row, fields[0]));
        CommandSample s;
        s.swa_deg = parse_csv_double("swa_deg", row, fields[1]);
        s.app_pct = parse_csv_double("app_pct", row, fields[2]);
        const double bp = parse_csv_double("bp", row, fields[3]);
        s.bp = static_cast<int>(bp);
        if (static_cast<double>(s.bp) != bp) {
            throw std::runtime_error("malformed bp at row " + std::to_string(row) + ": must be integral");
        }
        samples.push_back(s);
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double step = times[i] - times[i - 1];
        if (std::abs(step - sample_period_s) > kStepTolS) {
            throw std::runtime_error("non-uniform sampling at row " + std::to_string(i + 2) +
                                     ": step " + format_double(step) + " s, expected " +
                                     format_double(sample_period_s) + " s");
        }
    }
    ToDInputTrace trace{sample_period_s, std::move(samples), label, trace_id};
    TraceValidation v = validate_trace(trace);
    if (!v.ok()) {
        const TraceViolation& first = v.violations.front();
        throw std::runtime_error("trace '" + trace_id + "' violates " + first.field +
                                 " range at sample " + std::to_string(first.sample_index));
    }
    return trace;
}

ToDInputTrace parse_trace(const std::filesystem::path& csv_path) {
    const auto sidecar = trace_sidecar_path(csv_path);
    std::ifstream meta_in(sidecar);
    if (!meta_in) {
        throw std::runtime_error("missing trace sidecar: " + sidecar.string());
    }
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    const double period = meta.at("sample_period_s").get<double>();
    const std::string trace_id = meta.at("trace_id").get<std::string>();
    std::optional<ManeuverClass> label;
    if (meta.contains("label") && !meta["label"].is_null()) {
        label = maneuver_from_string(meta["label"].get<std::string>());
    }
    std::ifstream csv(csv_path);
    if (!csv) {
        throw std::runtime_error("cannot open trace file: " + csv_path.string());
    }
    return parse_trace_stream(csv, period, trace_id, label);
}

void write_trace(const ToDInputTrace& trace, const std::filesystem::path& csv_path) {
    std::ofstream csv(csv_path);
    if (!csv) {
        throw std::runtime_error("cannot write trace file: " + csv_path.string());
    }
    csv << "t_s,swa_deg,app_pct,bp\n";
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const CommandSample& s = trace.samples[i];
        csv << format_double(static_cast<double>(i) * trace.sample_period_s) << ','
            << format_double(s.swa_deg) << ',' << format_double(s.app_pct) << ',' << s.bp << '\n';
    }
    nlohmann::json meta;
    meta["trace_id"] = trace.trace_id;
    meta["sample_period_s"] = trace.sample_period_s;
    meta["label"] = trace.label ? nlohmann::json(to_string(*trace.label)) : nlohmann::json(nullptr);
    std::ofstream meta_out(trace_sidecar_path(csv_path));
    if (!meta_out) {
        throw std::runtime_error("cannot write trace sidecar for: " + csv_path.string());
    }
    meta_out << meta.dump(2) << '\n';
}

}  // namespace todsec
