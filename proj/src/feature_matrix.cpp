#include "dagdiff/feature_matrix.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "dagdiff/error.hpp"

namespace dagdiff {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                             FeatureRole role)
    : rows_(rows), cols_(cols), role_(role), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw Error(ErrorKind::ShapeMismatch,
                fmt::format("{} values for a {}x{} matrix", values_.size(), rows_, cols_));
  }
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& m) {
  std::string text = fmt::format("fm {} {}\n", m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) text += ' ';
      text += fmt::format("{:.17g}", row[c]);
    }
    text += '\n';
  }
  out << text;
}

FeatureMatrix read_feature_matrix(std::istream& in) {
  std::string magic;
  std::size_t rows = 0, cols = 0;
  if (!(in >> magic >> rows >> cols) || magic != "fm") {
    throw Error(ErrorKind::ParseError, "bad feature matrix header");
  }
  std::vector<double> values(rows * cols);
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::string token;
    if (!(in >> token)) {
      throw Error(ErrorKind::ParseError, fmt::format("feature matrix truncated at entry {}", k), k);
    }
    std::size_t used = 0;
    try {
      values[k] = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(values[k])) {
      throw Error(ErrorKind::ParseError, "non-finite or malformed entry '" + token + "'", k);
    }
  }
  return FeatureMatrix(rows, cols, std::move(values));
}

}  // namespace dagdiff
