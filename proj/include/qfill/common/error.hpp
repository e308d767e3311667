// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qfill {

enum class ErrorKind {
    MissingColumn,
    NonMonotonicTime,
    RaggedRow,
    NonBinaryLabel,
    InvertedWindow,
    EmptyDataset,
    Io,
    CalibrationFailure,
    DimensionMismatch,
    NonAdjacentSites,
    CapacityExceeded,
    SingleClassTraining,
    NonFiniteFeature,
    SingleClassEval,
    InsufficientHistory,
    SingleClassWindow,
    NonPositiveDelta,
    MissingBaseline,
    UnknownPreset,
    UnknownSubcommand,
    ConfigParse,
    InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (and the
/// CLI's JSON error channel) can dispatch without parsing messages.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &message,
          std::optional<std::size_t> row = std::nullopt);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    /// Offending data row (0-based, header excluded) for dataset errors.
    [[nodiscard]] std::optional<std::size_t> row() const noexcept { return row_; }
    /// The message without the kind and row prefix.
    [[nodiscard]] const std::string &message() const noexcept { return message_; }

  private:
    ErrorKind kind_;
    std::optional<std::size_t> row_;
    std::string message_;
};

} // namespace qfill
