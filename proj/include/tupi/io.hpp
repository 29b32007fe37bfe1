#pragma once

// Plain-text formats used by the CLI.
//   features:    CSV, one row per instance, optional single header line
//   predictions: one value per line, optional header
//   pairs:       "q,r" per line, zero-based, meaning rank(q) > rank(r)
// Values are written with 17 significant digits so files round-trip exactly.

#include <filesystem>
#include <optional>
#include <string>

#include "tupi/types.hpp"

namespace tupi {

/// Throws IoError if the file cannot be read; ParseError (with line number)
/// on ragged rows, non-numeric or non-finite cells.
FeatureSet ingest_features(const std::filesystem::path& path);
Predictions ingest_predictions(const std::filesystem::path& path);

/// When `n` is given, indices must lie in [0, n).
RankPairs ingest_pairs(const std::filesystem::path& path, std::optional<std::size_t> n = {});

void write_features(const std::filesystem::path& path, const FeatureSet& features);
void write_predictions(const std::filesystem::path& path, const Predictions& p);
void write_pairs(const std::filesystem::path& path, const RankPairs& pairs);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Shortest exact decimal form ("%.17g").
std::string format_double(double v);

}  // namespace tupi
