#pragma once

#include <filesystem>

#include "todsec/ml/train.hpp"

namespace todsec::ml {

/// Versioned JSON model file: kind, config digest, normalization statistics,
/// the parameter vector (or tree nodes) and the training history. Weights are
/// stored as decimal numbers with enough digits to round-trip exactly.
void save_model(const TrainedModel& model, const std::filesystem::path& path);

/// Throws std::runtime_error on unreadable files, unknown versions, or
/// shape/layout inconsistencies.
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace todsec::ml
