// SPDX-License-Identifier: Apache-2.0
#include "qfill/common/error.hpp"

namespace qfill {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::NonBinaryLabel: return "NonBinaryLabel";
    case ErrorKind::InvertedWindow: return "InvertedWindow";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::Io: return "Io";
    case ErrorKind::CalibrationFailure: return "CalibrationFailure";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonAdjacentSites: return "NonAdjacentSites";
    case ErrorKind::CapacityExceeded: return "CapacityExceeded";
    case ErrorKind::SingleClassTraining: return "SingleClassTraining";
    case ErrorKind::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorKind::SingleClassEval: return "SingleClassEval";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::SingleClassWindow: return "SingleClassWindow";
    case ErrorKind::NonPositiveDelta: return "NonPositiveDelta";
    case ErrorKind::MissingBaseline: return "MissingBaseline";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorKind::ConfigParse: return "ConfigParse";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string &message,
             std::optional<std::size_t> row)
    : std::runtime_error(row ? std::string(to_string(kind)) + " (row " +
                                   std::to_string(*row) + "): " + message
                             : std::string(to_string(kind)) + ": " + message),
      kind_(kind), row_(row), message_(message) {}

} // namespace qfill
