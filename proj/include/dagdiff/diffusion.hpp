#pragma once

#include <cstddef>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dagdiff/feature_matrix.hpp"
#include "dagdiff/graph.hpp"
#include "dagdiff/kernels.hpp"

namespace dagdiff {

/// Largest vertex count for which the dense operator is materialised.
inline constexpr std::size_t kMaxDenseVertices = 2000;

/// Matrices implied by one propagation sweep over a Dag.
///
/// `raw` is the per-edge Laplacian: raw(i,i) = d(i), raw(i,j) = -g for each
/// edge j->i. Because predecessors contribute their propagated values, the
/// sweep as a whole is H = M U with M obtained by back-substituting the
/// recurrence in topological order; I - M is the effective Laplacian.
struct GlobalLaplacian {
  Eigen::SparseMatrix<double, Eigen::RowMajor> raw;
  Eigen::MatrixXd expanded;

  Eigen::MatrixXd effective() const {
    return Eigen::MatrixXd::Identity(expanded.rows(), expanded.cols()) - expanded;
  }
};

/// Throws ScheduleMismatch, or InvalidArgument above kMaxDenseVertices.
GlobalLaplacian assemble_laplacian(const Dag& dag, const GroupSchedule& schedule,
                                   const EdgeWeights& w);

struct DiffusionReport {
  /// max_i |sum_j (I - M)(i,j)|, i.e. how far the rows of M are from summing to 1.
  double effective_row_sum = 0.0;
  /// max |(H - U) + (I - M) U|.
  double identity_residual = 0.0;
  /// max_i |sum_j raw(i,j)|.
  double raw_row_sum = 0.0;
  /// max |M c - c| for the all-ones input.
  double constant_residual = 0.0;

  bool passes(double tolerance = 1e-12) const noexcept {
    return effective_row_sum <= tolerance && identity_residual <= tolerance &&
           raw_row_sum <= tolerance && constant_residual <= tolerance;
  }
};

DiffusionReport verify_diffusion(const GlobalLaplacian& lap, const FeatureMatrix& u,
                                 const FeatureMatrix& h);

}  // namespace dagdiff
