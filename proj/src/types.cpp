#include "tupi/types.hpp"

#include <algorithm>
#include <string>

#include "tupi/error.hpp"

namespace tupi {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DegenerateScale: return "DegenerateScale";
    case ErrorKind::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorKind::DegenerateRange: return "DegenerateRange";
    case ErrorKind::SingularBasis: return "SingularBasis";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::NoOrderedPairs: return "NoOrderedPairs";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

void FeatureSet::validate() const {
  if (values.rows() < 2) {
    throw InvalidInput("feature set '" + name + "' needs at least 2 rows");
  }
  if (values.cols() < 1) {
    throw InvalidInput("feature set '" + name + "' has no columns");
  }
  require_finite(values, ("feature set '" + name + "'").c_str());
}

FeatureSet FeatureSet::from_predictions(std::string name, const Predictions& p) {
  return FeatureSet(std::move(name), Matrix(p));
}

void validate_pairs(const RankPairs& pairs, std::size_t n) {
  RankPairs sorted = pairs;
  for (const auto& p : pairs) {
    if (p.q >= n || p.r >= n) {
      throw InvalidInput("pair (" + std::to_string(p.q) + "," +
                         std::to_string(p.r) + ") out of range for n=" +
                         std::to_string(n));
    }
    if (p.q == p.r) {
      throw InvalidInput("pair compares instance " + std::to_string(p.q) +
                         " with itself");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidInput("duplicate rank pair");
  }
}

}  // namespace tupi
