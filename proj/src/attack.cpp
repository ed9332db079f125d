#include "todsec/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "todsec/rng.hpp"

namespace todsec {

namespace {

double draw_noise(Rng& rng, const NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseKind::Gaussian:
            return spec.amplitude_deg * rng.gaussian();
        case NoiseKind::Uniform:
            return rng.uniform(-spec.amplitude_deg, spec.amplitude_deg);
        case NoiseKind::ConstantOffset:
            return spec.amplitude_deg;
    }
    throw std::logic_error("unknown noise kind");
}

}  // namespace

std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Uniform: return "uniform";
        case NoiseKind::ConstantOffset: return "constant_offset";
    }
    throw std::logic_error("unknown noise kind");
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "gaussian") return NoiseKind::Gaussian;
    if (s == "uniform") return NoiseKind::Uniform;
    if (s == "constant_offset") return NoiseKind::ConstantOffset;
    throw std::invalid_argument("unknown noise kind '" + s + "'");
}

std::string to_string(AttackPlacement p) {
    switch (p) {
        case AttackPlacement::P1_TurnOnset: return "P1";
        case AttackPlacement::P2_TurnMidpoint: return "P2";
        case AttackPlacement::Explicit: return "explicit";
    }
    throw std::logic_error("unknown attack placement");
}

AttackPlacement placement_from_string(const std::string& s) {
    if (s == "P1") return AttackPlacement::P1_TurnOnset;
    if (s == "P2") return AttackPlacement::P2_TurnMidpoint;
    if (s == "explicit") return AttackPlacement::Explicit;
    throw std::invalid_argument("unknown attack placement '" + s + "'");
}

std::size_t window_length_samples(double duration_s, double sample_period_s) {
    if (!(duration_s > 0.0)) throw std::invalid_argument("attack duration must be positive");
    if (!(sample_period_s > 0.0)) throw std::invalid_argument("sample period must be positive");
    // The ratio of two representable doubles can land a hair above the exact
    // integer value; nudge down so a true k never rounds up to k+1 samples.
    const double ratio = duration_s / sample_period_s;
    auto n = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
    return std::max<std::size_t>(n, 1);
}

std::size_t locate_turn_onset(const std::vector<double>& swa_deg, double sample_period_s,
                              double threshold_deg, double persistence_s) {
    const std::size_t n = swa_deg.size();
    if (n == 0) throw std::invalid_argument("empty trace");
    const std::size_t persist = window_length_samples(persistence_s, sample_period_s);

    if (n >= persist) {
        std::size_t run = 0;  // length of the above-threshold run ending at i
        for (std::size_t i = 0; i < n; ++i) {
            run = (std::abs(swa_deg[i]) > threshold_deg) ? run + 1 : 0;
            if (run >= persist) return i + 1 - run;  // start of the run
        }
    }

    // No sustained crossing: fall back to the steepest SWA step.
    double best_slope = 0.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double slope = std::abs(swa_deg[i + 1] - swa_deg[i]);
        if (slope > best_slope) {
            best_slope = slope;
            best_idx = i;
        }
    }
    if (best_slope == 0.0) throw std::runtime_error("no maneuver present");
    return best_idx;
}

std::size_t locate_turn_onset(const ToDInputTrace& trace, double threshold_deg,
                              double persistence_s) {
    std::vector<double> swa(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) swa[i] = trace.samples[i].swa_deg;
    return locate_turn_onset(swa, trace.sample_period_s, threshold_deg, persistence_s);
}

SwaRegion locate_turn_region(const std::vector<double>& swa_deg, double sample_period_s,
                             double threshold_deg, double persistence_s) {
    const std::size_t onset =
        locate_turn_onset(swa_deg, sample_period_s, threshold_deg, persistence_s);
    SwaRegion region{onset, onset};
    while (region.end + 1 < swa_deg.size() &&
           std::abs(swa_deg[region.end + 1]) > threshold_deg) {
        ++region.end;
    }
    return region;
}

SwaRegion locate_turn_region(const ToDInputTrace& trace, double threshold_deg,
                             double persistence_s) {
    std::vector<double> swa(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) swa[i] = trace.samples[i].swa_deg;
    return locate_turn_region(swa, trace.sample_period_s, threshold_deg, persistence_s);
}

std::size_t locate_turn_midpoint(const ToDInputTrace& trace, double threshold_deg,
                                 double persistence_s) {
    const SwaRegion region = locate_turn_region(trace, threshold_deg, persistence_s);
    return (region.begin + region.end) / 2;
}

WindowOfOpportunity resolve_window(const ToDInputTrace& trace, const AttackSpec& spec) {
    WindowOfOpportunity win = spec.window;
    switch (spec.placement) {
        case AttackPlacement::P1_TurnOnset:
            win.injection_index =
                locate_turn_onset(trace, spec.onset_threshold_deg, spec.persistence_s);
            break;
        case AttackPlacement::P2_TurnMidpoint:
            win.injection_index =
                locate_turn_midpoint(trace, spec.onset_threshold_deg, spec.persistence_s);
            break;
        case AttackPlacement::Explicit:
            break;
    }
    const std::size_t len = window_length_samples(win.duration_s, trace.sample_period_s);
    if (win.injection_index + len > trace.size()) {
        throw std::runtime_error("attack window [" + std::to_string(win.injection_index) + ", " +
                                 std::to_string(win.injection_index + len) +
                                 ") extends past end of trace '" + trace.trace_id + "' (" +
                                 std::to_string(trace.size()) + " samples)");
    }
    return win;
}

ToDInputTrace inject_fdi(const ToDInputTrace& trace, const AttackSpec& spec) {
    const WindowOfOpportunity win = resolve_window(trace, spec);
    const std::size_t len = window_length_samples(win.duration_s, trace.sample_period_s);

    ToDInputTrace out = trace;
    Rng rng(spec.noise.seed);
    for (std::size_t i = win.injection_index; i < win.injection_index + len; ++i) {
        const double eps = draw_noise(rng, spec.noise);
        out.samples[i].swa_deg =
            std::clamp(trace.samples[i].swa_deg + eps, kSwaMinDeg, kSwaMaxDeg);
    }
    return out;
}

AttackSet build_attack_set(const std::vector<ToDInputTrace>& dataset, std::size_t n_attacked,
                           const AttackSpec& spec_template, std::uint64_t seed) {
    if (n_attacked > dataset.size()) {
        throw std::invalid_argument("cannot attack " + std::to_string(n_attacked) + " of " +
                                    std::to_string(dataset.size()) + " traces");
    }

    Rng master(seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    master.shuffle(order);
    order.resize(n_attacked);
    std::sort(order.begin(), order.end());  // keep dataset order in the output

    AttackSet set;
    set.traces.reserve(n_attacked);
    set.manifest.reserve(n_attacked);
    for (std::size_t idx : order) {
        const ToDInputTrace& trace = dataset[idx];
        AttackSpec spec = spec_template;
        // Noise stream keyed by trace id, not by position, so the result is
        // independent of dataset ordering and of which other traces are hit.
        spec.noise.seed = master.fork(trace.trace_id).seed();
        const WindowOfOpportunity win = resolve_window(trace, spec);
        spec.placement = AttackPlacement::Explicit;
        spec.window = win;
        set.traces.push_back(inject_fdi(trace, spec));
        set.manifest.push_back({trace.trace_id, spec_template.placement, win.injection_index,
                                win.duration_s, spec.noise.kind, spec.noise.amplitude_deg,
                                spec.noise.seed});
    }
    return set;
}

void write_attack_manifest(const std::vector<AttackManifestEntry>& manifest,
                           const std::filesystem::path& path) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : manifest) {
        arr.push_back({{"trace_id", e.trace_id},
                       {"placement", to_string(e.placement)},
                       {"rho_index", e.rho_index},
                       {"duration_s", e.duration_s},
                       {"noise_kind", to_string(e.noise_kind)},
                       {"amplitude_deg", e.amplitude_deg},
                       {"seed", e.seed}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << arr.dump(2) << "\n";
}

std::vector<AttackManifestEntry> parse_attack_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    nlohmann::json arr;
    try {
        in >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed attack manifest '" + path.string() + "': " + e.what());
    }
    if (!arr.is_array()) throw std::runtime_error("attack manifest must be a JSON array");

    std::vector<AttackManifestEntry> manifest;
    manifest.reserve(arr.size());
    for (const auto& j : arr) {
        AttackManifestEntry e;
        try {
            e.trace_id = j.at("trace_id").get<std::string>();
            e.placement = placement_from_string(j.at("placement").get<std::string>());
            e.rho_index = j.at("rho_index").get<std::size_t>();
            e.duration_s = j.at("duration_s").get<double>();
            e.noise_kind = noise_kind_from_string(j.at("noise_kind").get<std::string>());
            e.amplitude_deg = j.at("amplitude_deg").get<double>();
            e.seed = j.at("seed").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& ex) {
            throw std::runtime_error("attack manifest entry missing field: " +
                                     std::string(ex.what()));
        }
        if (!(e.duration_s > 0.0)) {
            throw std::runtime_error("attack manifest entry for '" + e.trace_id +
                                     "' has non-positive duration");
        }
        manifest.push_back(e);
    }
    return manifest;
}

}  // namespace todsec
