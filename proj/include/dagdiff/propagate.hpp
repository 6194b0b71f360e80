#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dagdiff/feature_matrix.hpp"
#include "dagdiff/graph.hpp"
#include "dagdiff/kernels.hpp"

namespace dagdiff {

/// d(i): signed sum of the weights entering vertex i.
std::vector<double> compute_degree(const Dag& dag, const EdgeWeights& w);

/// Reference recurrence
///   h(i) = (1 - sum_k g_ik) u(i) + sum_k g_ik h(k)
/// evaluated vertex by vertex in a topological order of `dag`.
FeatureMatrix propagate_sequential(const Dag& dag, const EdgeWeights& w, const FeatureMatrix& u);

struct PropagationStats {
  std::size_t steps = 0;
};

/// Called after each batched step with the group index and the partially
/// filled output.
using StepObserver = std::function<void(std::size_t group, const FeatureMatrix& h)>;

/// Group-parallel form: one batched update per group, T steps in total.
/// Throws ScheduleMismatch when `schedule` does not fit `dag`.
FeatureMatrix propagate_grouped(const GroupSchedule& schedule, const Dag& dag,
                                const EdgeWeights& w, const FeatureMatrix& u,
                                PropagationStats* stats = nullptr,
                                const StepObserver& observer = {});

enum class FusionMode { Max, Mean };

FusionMode parse_fusion(std::string_view text);

/// Element-wise max or mean over per-direction results.
FeatureMatrix fuse_directions(std::span<const FeatureMatrix> hs, FusionMode mode);

/// Adjoint of fuse_directions: routes `grad` to the direction attaining the
/// max (first one on ties) or splits it evenly for the mean.
std::vector<FeatureMatrix> fuse_backward(std::span<const FeatureMatrix> hs, FusionMode mode,
                                         const FeatureMatrix& grad);

struct PropagationGradient {
  FeatureMatrix grad_u;
  std::vector<double> grad_w;
};

/// Reverse sweep over the groups of `schedule`. `h` must be the forward
/// output for (dag, w, u).
PropagationGradient propagate_backward(const GroupSchedule& schedule, const Dag& dag,
                                       const EdgeWeights& w, const FeatureMatrix& u,
                                       const FeatureMatrix& h, const FeatureMatrix& grad_h);

/// Propagates `u` along every Dag of `set` and fuses the results. With
/// sweeps > 1 the fused output becomes the next sweep's unary input.
FeatureMatrix propagate_all(const MultiDagSet& set, std::span<const EdgeWeights> weights,
                            const FeatureMatrix& u, FusionMode mode, std::size_t sweeps = 1);

}  // namespace dagdiff
