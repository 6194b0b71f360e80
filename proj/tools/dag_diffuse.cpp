// dag-diffuse: command-line front end for the propagation engine.
#include <glob.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dagdiff/apps.hpp"
#include "dagdiff/builders.hpp"
#include "dagdiff/check.hpp"
#include "dagdiff/error.hpp"
#include "dagdiff/image.hpp"
#include "dagdiff/io.hpp"
#include "dagdiff/kernels.hpp"
#include "dagdiff/propagate.hpp"

namespace fs = std::filesystem;
using namespace dagdiff;

namespace {

struct KernelOptions {
  std::string kind = "prod";
  double bias = -0.5;
  std::string fuse = "max";
  std::size_t sweeps = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--kernel", kind, "prod|embed")->capture_default_str();
    cmd->add_option("--bias", bias, "bias of the embedded Gaussian")->capture_default_str();
    cmd->add_option("--fuse", fuse, "max|mean")->capture_default_str();
    cmd->add_option("--sweeps", sweeps)->capture_default_str();
  }

  PipelineConfig pipeline() const {
    PipelineConfig cfg;
    cfg.kernel.kind = parse_kernel_kind(kind);
    cfg.kernel.bias = bias;
    validate_kernel_config(cfg.kernel);
    cfg.fusion = parse_fusion(fuse);
    cfg.sweeps = sweeps;
    return cfg;
  }
};

PairwiseEmbedding embedding_or_default(const std::string& path, std::uint64_t seed) {
  if (!path.empty()) return load_embedding(path);
  return PairwiseEmbedding::random(8, 9, seed);
}

std::vector<EdgeWeights> weights_for(const MultiDagSet& graph, const FeatureMatrix& pairwise,
                                     const KernelConfig& kernel) {
  std::vector<EdgeWeights> weights;
  for (std::size_t d = 0; d < graph.size(); ++d) {
    weights.push_back(compute_edge_weights(pairwise, graph.dag(d), kernel));
  }
  return weights;
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<fs::path> paths;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  return paths;
}

void write_centroids(const fs::path& path, const SuperpixelDags& sp) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  for (const auto& c : sp.centroids) out << fmt::format("{:.17g} {:.17g}\n", c[0], c[1]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear propagation on directed acyclic graphs"};
  app.set_config("--config", "", "key=value overrides; [subcommand] sections apply to one command");
  app.require_subcommand(1);

  // build-grid
  std::size_t height = 0, width = 0;
  std::string out;
  auto* grid = app.add_subcommand("build-grid", "four 3-way DAGs over a pixel grid");
  grid->add_option("--height", height)->required();
  grid->add_option("--width", width)->required();
  grid->add_option("--out", out, "output directory")->required();

  // build-superpixels
  std::string labels_path;
  std::uint64_t seed = 0;
  auto* superpixels = app.add_subcommand("build-superpixels", "DAGs over a superpixel label map");
  superpixels->add_option("--labels", labels_path, "P5 label image")->required();
  superpixels->add_option("--seed", seed)->capture_default_str();
  superpixels->add_option("--out", out)->required();

  // build-cloud
  std::string cloud_path, mode_name = "euclidean";
  std::size_t k = 6, normal_k = 0;
  double radius = 0.0;
  auto* cloud_cmd = app.add_subcommand("build-cloud", "six axis DAGs over a point cloud");
  cloud_cmd->add_option("--cloud", cloud_path, ".ply or .xyz file")->required();
  cloud_cmd->add_option("--k", k)->capture_default_str();
  cloud_cmd->add_option("--radius", radius, "search radius (default: twice the median NN distance)");
  cloud_cmd->add_option("--mode", mode_name, "euclidean|tangent")->capture_default_str();
  cloud_cmd->add_option("--estimate-normals", normal_k, "PCA normals over this many points");
  cloud_cmd->add_option("--seed", seed, "jitter seed")->capture_default_str();
  cloud_cmd->add_option("--out", out)->required();

  // edge-weights
  std::string graph_dir, pairwise_path;
  KernelOptions kopt;
  auto* weights_cmd = app.add_subcommand("edge-weights", "stabilised kernel weights per direction");
  weights_cmd->add_option("--graph", graph_dir)->required();
  weights_cmd->add_option("--pairwise", pairwise_path)->required();
  weights_cmd->add_option("--kernel", kopt.kind, "prod|embed")->capture_default_str();
  weights_cmd->add_option("--bias", kopt.bias)->capture_default_str();
  weights_cmd->add_option("--out", out)->required();

  // propagate
  std::string weights_dir, unary_path, dump_dir;
  auto* prop = app.add_subcommand("propagate", "propagate a unary feature matrix");
  prop->add_option("--graph", graph_dir)->required();
  prop->add_option("--weights", weights_dir)->required();
  prop->add_option("--unary", unary_path)->required();
  prop->add_option("--fuse", kopt.fuse, "max|mean")->capture_default_str();
  prop->add_option("--sweeps", kopt.sweeps)->capture_default_str();
  prop->add_option("--dump-steps", dump_dir, "write the partial output after every group");
  prop->add_option("--out", out)->required();

  // colorize
  std::string image_path, embedding_path;
  double keep_ratio = 0.05;
  auto* color = app.add_subcommand("colorize", "restore chroma from a sparse sample of pixels");
  color->add_option("--image", image_path, "P6 colour image")->required();
  color->add_option("--keep-ratio", keep_ratio)->capture_default_str();
  color->add_option("--seed", seed)->capture_default_str();
  color->add_option("--embedding", embedding_path, "trained embedding (default: seeded random)");
  kopt.attach(color);
  color->add_option("--out", out)->required();

  // scribble
  std::string mask_path;
  auto* scribble = app.add_subcommand("scribble", "spread a scribble mask over an image");
  scribble->add_option("--image", image_path)->required();
  scribble->add_option("--mask", mask_path, "P5 mask, 0/255")->required();
  scribble->add_option("--embedding", embedding_path);
  scribble->add_option("--seed", seed, "seed of the default embedding")->capture_default_str();
  kopt.attach(scribble);
  scribble->add_option("--out", out)->required();

  // refine-labels
  std::string scores_path;
  auto* refine = app.add_subcommand("refine-labels", "propagate class scores and take the argmax");
  refine->add_option("--graph", graph_dir)->required();
  refine->add_option("--scores", scores_path)->required();
  refine->add_option("--pairwise", pairwise_path)->required();
  kopt.attach(refine);
  refine->add_option("--labels-out", labels_path, "one label per line");
  refine->add_option("--out", out)->required();

  // train
  std::string images_glob, trace_path;
  TrainConfig tcfg;
  auto* train = app.add_subcommand("train", "fit the pairwise embedding by gradient descent");
  train->add_option("--images", images_glob, "glob of P6 images")->required();
  train->add_option("--keep-ratio", tcfg.keep_ratio)->capture_default_str();
  train->add_option("--steps", tcfg.steps)->capture_default_str();
  train->add_option("--lr", tcfg.learning_rate)->capture_default_str();
  train->add_option("--seed", tcfg.seed)->capture_default_str();
  train->add_option("--kernel", kopt.kind, "prod|embed")->capture_default_str();
  train->add_option("--bias", kopt.bias)->capture_default_str();
  train->add_option("--fuse", kopt.fuse)->capture_default_str();
  train->add_option("--trace", trace_path, "write the loss trace here");
  train->add_option("--out", out)->required();

  // check
  auto* check = app.add_subcommand("check", "run the invariant suite");
  check->add_option("--seed", seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*grid) {
      const MultiDagSet set = build_grid_dags({height, width});
      write_dag_set(out, set);
    } else if (*superpixels) {
      const GrayLevels levels = read_pgm_levels(labels_path);
      const SuperpixelDags sp =
          build_superpixel_dags(SuperpixelMap(levels.height, levels.width, levels.values), seed);
      write_dag_set(out, sp.dags);
      write_centroids(fs::path(out) / "centroids.txt", sp);
    } else if (*cloud_cmd) {
      PointCloud cloud = read_point_cloud(cloud_path);
      if (normal_k > 0) cloud = cloud.with_normals(estimate_normals(cloud, normal_k));
      NeighborMode mode;
      if (mode_name == "euclidean") {
        mode.selection = NeighborSelection::Euclidean;
      } else if (mode_name == "tangent") {
        mode.selection = NeighborSelection::Tangent;
      } else {
        throw Error(ErrorKind::ParseError, "unknown mode '" + mode_name + "'");
      }
      mode.k = k;
      mode.radius = *cloud_cmd->get_option("--radius") ? radius : default_radius(cloud);
      write_dag_set(out, build_pointcloud_dags(cloud, mode, seed));
    } else if (*weights_cmd) {
      const MultiDagSet graph = read_dag_set(graph_dir);
      const FeatureMatrix pairwise = load_feature_matrix(pairwise_path);
      const auto weights = weights_for(graph, pairwise, kopt.pipeline().kernel);
      write_weight_set(out, graph, weights);
    } else if (*prop) {
      const MultiDagSet graph = read_dag_set(graph_dir);
      const auto weights = read_weight_set(weights_dir, graph);
      const FeatureMatrix unary = load_feature_matrix(unary_path);
      const FusionMode fusion = parse_fusion(kopt.fuse);
      if (dump_dir.empty()) {
        save_feature_matrix(out, propagate_all(graph, weights, unary, fusion, kopt.sweeps));
      } else {
        fs::create_directories(dump_dir);
        FeatureMatrix current = unary;
        for (std::size_t s = 0; s < kopt.sweeps; ++s) {
          std::vector<FeatureMatrix> hs;
          for (std::size_t d = 0; d < graph.size(); ++d) {
            const std::string prefix =
                fmt::format("sweep{}_{}", s, short_name(graph.dag(d).direction()));
            hs.push_back(propagate_grouped(
                graph.schedule(d), graph.dag(d), weights[d], current, nullptr,
                [&](std::size_t group, const FeatureMatrix& h) {
                  save_feature_matrix(fs::path(dump_dir) / fmt::format("{}_{:04}.fm", prefix, group), h);
                }));
          }
          current = fuse_directions(hs, fusion);
        }
        save_feature_matrix(out, current);
      }
    } else if (*color) {
      const ImageBuffer rgb = read_pnm(image_path);
      const ImageBuffer lab = rgb_to_lab(rgb);
      const SparseChroma hints = sparse_chroma(lab, sample_keep_mask(rgb.pixels(), keep_ratio, seed));
      const ColorizeResult res =
          colorize(lightness_of(lab), hints, embedding_or_default(embedding_path, seed), kopt.pipeline());
      write_pnm(out, res.rgb);
      double mse = 0.0;
      for (std::size_t p = 0; p < rgb.pixels(); ++p) {
        for (std::size_t ch = 0; ch < 2; ++ch) {
          const double e = (res.ab.data()[2 * p + ch] - lab.data()[3 * p + 1 + ch]) / 100.0;
          mse += e * e;
        }
      }
      fmt::print("ab mse {:.6e}\n", mse / static_cast<double>(2 * rgb.pixels()));
    } else if (*scribble) {
      const ImageBuffer rgb = read_pnm(image_path);
      const ImageBuffer lightness =
          rgb.channels() == 3 ? lightness_of(rgb_to_lab(rgb)) : [&] {
            ImageBuffer l(rgb.height(), rgb.width(), 1);
            for (std::size_t p = 0; p < rgb.pixels(); ++p) l.data()[p] = 100.0 * rgb.data()[p];
            return l;
          }();
      const ImageBuffer mask = read_pnm(mask_path);
      write_pnm(out, scribble_propagate(lightness, mask, embedding_or_default(embedding_path, seed),
                                        kopt.pipeline()));
    } else if (*refine) {
      const MultiDagSet graph = read_dag_set(graph_dir);
      const RefinedLabels res = refine_labels(load_feature_matrix(scores_path), graph,
                                              load_feature_matrix(pairwise_path), kopt.pipeline());
      save_feature_matrix(out, res.scores);
      if (!labels_path.empty()) {
        std::ofstream lo(labels_path);
        for (auto l : res.labels) lo << l << '\n';
      }
    } else if (*train) {
      const auto paths = expand_glob(images_glob);
      if (paths.empty()) throw Error(ErrorKind::IoError, "no images match " + images_glob);
      std::vector<ImageBuffer> images;
      for (const auto& p : paths) images.push_back(read_pnm(p));
      const PipelineConfig pc = kopt.pipeline();
      tcfg.kernel = pc.kernel;
      tcfg.fusion = pc.fusion;
      const TrainResult res = train_pairwise_embedding(images, tcfg);
      save_embedding(out, res.embedding);
      if (!trace_path.empty()) {
        std::ofstream t(trace_path);
        for (std::size_t s = 0; s < res.loss_trace.size(); ++s) {
          t << fmt::format("{} {:.17g}\n", s, res.loss_trace[s]);
        }
      }
      fmt::print("loss {:.6e} -> {:.6e} over {} steps\n", res.loss_trace.front(),
                 res.loss_trace.back(), tcfg.steps);
    } else if (*check) {
      const CheckReport report = run_invariant_suite(seed);
      std::fputs(report.to_text().c_str(), stdout);
      return report.all_passed() ? 0 : 1;
    }
  } catch (const Error& e) {
    if (e.index()) {
      fmt::print(stderr, "error [{} at {}]: {}\n", to_string(e.kind()), *e.index(), e.what());
    } else {
      fmt::print(stderr, "error [{}]: {}\n", to_string(e.kind()), e.what());
    }
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
