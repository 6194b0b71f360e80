#pragma once

#include <filesystem>

#include "dagdiff/feature_matrix.hpp"
#include "dagdiff/graph.hpp"
#include "dagdiff/kernels.hpp"
#include "dagdiff/point_cloud.hpp"

namespace dagdiff {

/// ASCII XYZ (`x y z [nx ny nz] [r g b]`) or ASCII PLY, chosen by extension.
/// XYZ colours above 1 are read as 0-255 values; PLY uchar colours likewise.
PointCloud read_point_cloud(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

/// One `<short-name>.dag` file per direction, e.g. px.dag.
void write_dag_set(const std::filesystem::path& dir, const MultiDagSet& set);
MultiDagSet read_dag_set(const std::filesystem::path& dir);

/// One `<short-name>.w` file per direction, aligned with the dag files.
void write_weight_set(const std::filesystem::path& dir, const MultiDagSet& set,
                      std::span<const EdgeWeights> weights);
std::vector<EdgeWeights> read_weight_set(const std::filesystem::path& dir, const MultiDagSet& set);

FeatureMatrix load_feature_matrix(const std::filesystem::path& path);
void save_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& m);

}  // namespace dagdiff
