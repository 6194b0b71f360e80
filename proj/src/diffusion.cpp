#include "dagdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "dagdiff/error.hpp"

namespace dagdiff {

GlobalLaplacian assemble_laplacian(const Dag& dag, const GroupSchedule& schedule,
                                   const EdgeWeights& w) {
  check_schedule(schedule, dag);
  if (w.size() != dag.num_edges()) {
    throw Error(ErrorKind::ShapeMismatch, "edge weights not aligned with dag edges");
  }
  const std::size_t n = dag.num_vertices();
  if (n > kMaxDenseVertices) {
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("dense operator limited to {} vertices", kMaxDenseVertices));
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> degree(n, 0.0);
  for (VertexId i = 0; i < n; ++i) {
    for (const auto& in : dag.predecessors(i)) {
      degree[i] += w[in.edge];
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(in.src), -w[in.edge]);
    }
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), degree[i]);
  }
  GlobalLaplacian lap;
  lap.raw.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  lap.raw.setFromTriplets(triplets.begin(), triplets.end());

  // Row i of M = (1 - d(i)) e_i + sum_k g_ik * (row k of M), groups in order.
  lap.expanded = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& group : schedule.groups()) {
    for (VertexId i : group) {
      auto row = lap.expanded.row(i);
      row(i) = 1.0 - degree[i];
      for (const auto& in : dag.predecessors(i)) row += w[in.edge] * lap.expanded.row(in.src);
    }
  }
  return lap;
}

DiffusionReport verify_diffusion(const GlobalLaplacian& lap, const FeatureMatrix& u,
                                 const FeatureMatrix& h) {
  const auto n = lap.expanded.rows();
  if (static_cast<Eigen::Index>(u.rows()) != n || !h.same_shape(u)) {
    throw Error(ErrorKind::ShapeMismatch, "features do not match the operator");
  }
  DiffusionReport report;
  if (n == 0) return report;
  const Eigen::MatrixXd effective = lap.effective();
  report.effective_row_sum = effective.rowwise().sum().cwiseAbs().maxCoeff();

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto cols = static_cast<Eigen::Index>(u.cols());
  const Eigen::Map<const RowMatrix> U(u.values().data(), n, cols);
  const Eigen::Map<const RowMatrix> H(h.values().data(), n, cols);
  if (cols > 0) report.identity_residual = ((H - U) + effective * U).cwiseAbs().maxCoeff();

  for (Eigen::Index i = 0; i < lap.raw.outerSize(); ++i) {
    double sum = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(lap.raw, i); it; ++it) {
      sum += it.value();
    }
    report.raw_row_sum = std::max(report.raw_row_sum, std::abs(sum));
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  report.constant_residual = (lap.expanded * ones - ones).cwiseAbs().maxCoeff();
  return report;
}

}  // namespace dagdiff
