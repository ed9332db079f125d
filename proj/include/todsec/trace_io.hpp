#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "todsec/types.hpp"

namespace todsec {

/// Sidecar path for a trace CSV: `name.csv` -> `name.meta.json`.
std::filesystem::path trace_sidecar_path(const std::filesystem::path& csv_path);

/// Reads a trace from CSV (`t_s,swa_deg,app_pct,bp`) plus its JSON sidecar
/// (trace_id, label, sample_period). Throws std::runtime_error on malformed
/// rows (with the row number), non-uniform sampling, or invariant violations.
ToDInputTrace parse_trace(const std::filesystem::path& csv_path);

/// Stream variant; sample period, id and label come from the caller since
/// there is no sidecar. Row numbers in errors count from 1 at the header.
ToDInputTrace parse_trace_stream(std::istream& csv, double sample_period_s,
                                 const std::string& trace_id,
                                 std::optional<ManeuverClass> label);

/// Writes CSV + sidecar. Floats are printed with round-trip precision so
/// parse(write(t)) == t field for field.
void write_trace(const ToDInputTrace& trace, const std::filesystem::path& csv_path);

}  // namespace todsec
