#include "dagdiff/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "dagdiff/error.hpp"

namespace dagdiff {

namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return out;
}

Vec3 unit(const Vec3& n) {
  const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  if (!(len > 0.0)) throw Error(ErrorKind::InvalidArgument, "zero-length normal in input");
  return {n[0] / len, n[1] / len, n[2] / len};
}

PointCloud assemble(std::vector<Vec3> pos, std::vector<Vec3> normals, std::vector<Vec3> colors,
                    bool byte_colors) {
  std::optional<std::vector<Vec3>> n, c;
  if (!normals.empty()) {
    for (Vec3& v : normals) v = unit(v);
    n = std::move(normals);
  }
  if (!colors.empty()) {
    if (byte_colors) {
      for (Vec3& v : colors) {
        for (double& x : v) x /= 255.0;
      }
    }
    c = std::move(colors);
  }
  return PointCloud(std::move(pos), std::move(n), std::move(c));
}

PointCloud read_xyz(std::istream& in) {
  std::vector<Vec3> pos, normals, colors;
  bool byte_colors = false;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::vector<double> v;
    double x;
    while (fields >> x) v.push_back(x);
    if (!fields.eof() || (v.size() != 3 && v.size() != 6 && v.size() != 9) ||
        (expected != 0 && v.size() != expected)) {
      throw Error(ErrorKind::ParseError, fmt::format("bad XYZ line {}", line_no), line_no);
    }
    expected = v.size();
    pos.push_back({v[0], v[1], v[2]});
    if (v.size() >= 6) normals.push_back({v[3], v[4], v[5]});
    if (v.size() == 9) {
      colors.push_back({v[6], v[7], v[8]});
      byte_colors = byte_colors || v[6] > 1.0 || v[7] > 1.0 || v[8] > 1.0;
    }
  }
  return assemble(std::move(pos), std::move(normals), std::move(colors), byte_colors);
}

PointCloud read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw Error(ErrorKind::ParseError, "missing ply magic");
  }
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  std::vector<std::string> props;
  bool byte_colors = false;
  while (std::getline(in, line)) {
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword == "format") {
      std::string kind;
      words >> kind;
      if (kind != "ascii") throw Error(ErrorKind::ParseError, "only ASCII PLY is supported");
    } else if (keyword == "element") {
      std::string name;
      words >> name;
      in_vertex = name == "vertex";
      if (in_vertex) words >> vertex_count;
    } else if (keyword == "property" && in_vertex) {
      std::string type, name;
      words >> type >> name;
      if (type == "list") throw Error(ErrorKind::ParseError, "list property on vertex element");
      if (name == "red" && (type == "uchar" || type == "uint8")) byte_colors = true;
      props.push_back(name);
    } else if (keyword == "end_header") {
      break;
    }
  }
  std::map<std::string, std::size_t> column;
  for (std::size_t k = 0; k < props.size(); ++k) column[props[k]] = k;
  auto has = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) {
      if (!column.contains(n)) return false;
    }
    return true;
  };
  if (!has({"x", "y", "z"})) throw Error(ErrorKind::ParseError, "PLY vertices lack x, y, z");
  const bool with_normals = has({"nx", "ny", "nz"});
  const bool with_colors = has({"red", "green", "blue"});

  std::vector<Vec3> pos, normals, colors;
  std::vector<double> row(props.size());
  for (std::size_t i = 0; i < vertex_count; ++i) {
    for (double& v : row) {
      if (!(in >> v)) throw Error(ErrorKind::ParseError, fmt::format("PLY vertex {} truncated", i), i);
    }
    auto pick = [&](const char* a, const char* b, const char* c) {
      return Vec3{row[column[a]], row[column[b]], row[column[c]]};
    };
    pos.push_back(pick("x", "y", "z"));
    if (with_normals) normals.push_back(pick("nx", "ny", "nz"));
    if (with_colors) colors.push_back(pick("red", "green", "blue"));
  }
  return assemble(std::move(pos), std::move(normals), std::move(colors), byte_colors);
}

}  // namespace

PointCloud read_point_cloud(const fs::path& path) {
  auto in = open_in(path);
  return path.extension() == ".ply" ? read_ply(in) : read_xyz(in);
}

void write_ply(const fs::path& path, const PointCloud& cloud) {
  auto out = open_out(path);
  std::string text = fmt::format("ply\nformat ascii 1.0\nelement vertex {}\n", cloud.size());
  text += "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_normals()) text += "property double nx\nproperty double ny\nproperty double nz\n";
  if (cloud.has_colors()) text += "property double red\nproperty double green\nproperty double blue\n";
  text += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions()[i];
    text += fmt::format("{:.17g} {:.17g} {:.17g}", p[0], p[1], p[2]);
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normals()[i];
      text += fmt::format(" {:.17g} {:.17g} {:.17g}", n[0], n[1], n[2]);
    }
    if (cloud.has_colors()) {
      const Vec3& c = cloud.colors()[i];
      text += fmt::format(" {:.17g} {:.17g} {:.17g}", c[0], c[1], c[2]);
    }
    text += '\n';
  }
  out << text;
}

void write_dag_set(const fs::path& dir, const MultiDagSet& set) {
  fs::create_directories(dir);
  for (const Dag& dag : set.dags()) {
    auto out = open_out(dir / (std::string(short_name(dag.direction())) + ".dag"));
    write_dag(out, dag);
  }
}

MultiDagSet read_dag_set(const fs::path& dir) {
  std::vector<Dag> dags;
  for (int d = 0; d < 6; ++d) {
    const fs::path file =
        dir / (std::string(short_name(static_cast<Direction>(d))) + ".dag");
    if (!fs::exists(file)) continue;
    auto in = open_in(file);
    dags.push_back(read_dag(in));
  }
  if (dags.empty()) throw Error(ErrorKind::IoError, "no .dag files in " + dir.string());
  return MultiDagSet(std::move(dags));
}

void write_weight_set(const fs::path& dir, const MultiDagSet& set,
                      std::span<const EdgeWeights> weights) {
  if (weights.size() != set.size()) {
    throw Error(ErrorKind::ShapeMismatch, "one weight vector per dag required");
  }
  fs::create_directories(dir);
  for (std::size_t d = 0; d < set.size(); ++d) {
    auto out = open_out(dir / (std::string(short_name(set.dag(d).direction())) + ".w"));
    write_edge_weights(out, weights[d]);
  }
}

std::vector<EdgeWeights> read_weight_set(const fs::path& dir, const MultiDagSet& set) {
  std::vector<EdgeWeights> out;
  for (const Dag& dag : set.dags()) {
    auto in = open_in(dir / (std::string(short_name(dag.direction())) + ".w"));
    out.push_back(read_edge_weights(in));
    if (out.back().size() != dag.num_edges()) {
      throw Error(ErrorKind::ShapeMismatch,
                  fmt::format("{} weights for the {} edges of {}", out.back().size(),
                              dag.num_edges(), to_string(dag.direction())));
    }
  }
  return out;
}

FeatureMatrix load_feature_matrix(const fs::path& path) {
  auto in = open_in(path);
  return read_feature_matrix(in);
}

void save_feature_matrix(const fs::path& path, const FeatureMatrix& m) {
  auto out = open_out(path);
  write_feature_matrix(out, m);
}

}  // namespace dagdiff
