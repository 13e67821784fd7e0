#include "hetknock/dataset.hpp"

#include <cmath>

#include "hetknock/errors.hpp"

namespace hetknock {

Dataset Dataset::subset(std::span<const int> rows) const {
  Dataset out;
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  out.x.resize(m, x.cols());
  out.y.resize(m);
  if (x_knock) out.x_knock.emplace(m, x.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    const int r = rows[static_cast<std::size_t>(i)];
    out.x.row(i) = x.row(r);
    out.y(i) = y(r);
    if (x_knock) out.x_knock->row(i) = x_knock->row(r);
  }
  return out;
}

void validate(const Dataset& ds) {
  if (ds.x.rows() < 2) fail(ErrorCode::TooFewRows, "need at least 2 rows");
  if (ds.x.cols() < 1) fail(ErrorCode::ShapeMismatch, "need at least 1 feature column");
  if (ds.y.size() != ds.x.rows())
    fail(ErrorCode::ShapeMismatch, "response length does not match row count");
  if (ds.x_knock && (ds.x_knock->rows() != ds.x.rows() || ds.x_knock->cols() != ds.x.cols()))
    fail(ErrorCode::ShapeMismatch, "knockoff matrix shape does not match features");
  if (!ds.x.allFinite()) fail(ErrorCode::NonFiniteValue, "non-finite feature value");
  if (!ds.y.allFinite()) fail(ErrorCode::NonFiniteValue, "non-finite response value");
  if (ds.x_knock && !ds.x_knock->allFinite())
    fail(ErrorCode::NonFiniteValue, "non-finite knockoff value");
}

}  // namespace hetknock
