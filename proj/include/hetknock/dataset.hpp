#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace hetknock {

// Feature matrix, optional knockoff copies, and response. Rows are
// observations; x_knock, when present, matches x column for column.
struct Dataset {
  Eigen::MatrixXd x;
  std::optional<Eigen::MatrixXd> x_knock;
  Eigen::VectorXd y;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }

  bool has_knockoffs() const { return x_knock.has_value(); }

  // Row subset in the given order; knockoffs travel with their rows.
  Dataset subset(std::span<const int> rows) const;
};

// Shape and finiteness checks shared by every consumer: n >= 2, p >= 1,
// y length n, knockoff shape equal to x, all values finite.
void validate(const Dataset& ds);

// Columns of a column-major Eigen matrix are contiguous; statistics take
// plain spans so they stay testable without Eigen in the call site.
inline std::span<const double> column_span(const Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

inline std::span<const double> vector_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace hetknock
