#pragma once

// Published rule sets transcribed as networks, plus small helpers shared by
// the unit and acceptance suites.

#include "polygmdh/model.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

namespace fixtures {

using namespace polygmdh;

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Neuron bilinear(NeuronId id, InputRef a, InputRef b,
                       std::initializer_list<double> w) {
  return {id, TransferKind::bilinear, a, b, vec(w)};
}

inline InputRef x(int column) { return InputRef::feature(column); }
inline InputRef y(int layer, int index) { return InputRef::neuron({layer, index}); }

inline InputStage identity_stage(int input_count, std::initializer_list<int> columns) {
  InputStage s;
  s.input_count = input_count;
  for (int c : columns) s.features.push_back({c, "x" + std::to_string(c), 0.0, 1.0});
  return s;
}

/// Three-layer chain network over 76 band-power inputs.
inline PolyNetwork alzheimer_rule() {
  std::vector<Neuron> g{
      bilinear({1, 1}, x(11), x(69), {0.6965, 0.3916, 0.2484, -0.2312}),
      bilinear({2, 1}, y(1, 1), x(73), {0.3863, 0.5648, 0.5418, -0.4847}),
      bilinear({3, 1}, y(2, 1), x(76), {0.1914, 0.7763, 0.2378, -0.2042}),
  };
  return prune(identity_stage(76, {11, 69, 73, 76}), std::move(g), {3, 1});
}

/// Eleven-neuron, four-layer network over 72 inputs.
inline PolyNetwork artifact_rule() {
  std::vector<Neuron> g{
      bilinear({1, 1}, x(5), x(57), {0.9049, -0.1707, -0.1616, 0.0339}),
      bilinear({1, 2}, x(5), x(28), {0.9023, -0.2128, -0.1389, 0.0438}),
      bilinear({1, 3}, x(6), x(62), {0.9268, -0.1828, -0.1195, 0.0233}),
      bilinear({1, 4}, x(6), x(21), {0.9323, -0.2057, -0.0461, 0.0246}),
      bilinear({1, 5}, x(5), x(55), {0.9247, -0.1822, -0.0951, 0.0196}),
      bilinear({2, 1}, y(1, 1), y(1, 4), {0.0590, 0.2810, 0.3055, 0.3670}),
      bilinear({2, 2}, y(1, 2), y(1, 3), {0.0225, 0.4144, 0.3812, 0.1878}),
      bilinear({2, 3}, y(1, 1), y(1, 5), {0.0609, 0.2917, 0.2738, 0.3880}),
      bilinear({3, 1}, y(2, 1), y(2, 2), {0.0551, 0.3033, 0.3896, 0.2540}),
      bilinear({3, 2}, y(2, 2), y(2, 3), {0.0579, 0.4058, 0.2834, 0.2549}),
      bilinear({4, 1}, y(3, 1), y(3, 2), {-0.0400, 0.6196, 0.5702, -0.1504}),
  };
  return prune(identity_stage(72, {5, 6, 21, 28, 55, 57, 62}), std::move(g), {4, 1});
}

/// Directed evaluation of the three-layer chain at given inputs, written out
/// term by term.
inline double alzheimer_rule_by_hand(double x11, double x69, double x73, double x76) {
  const double y1 = 0.6965 + 0.3916 * x11 + 0.2484 * x69 - 0.2312 * x11 * x69;
  const double y2 = 0.3863 + 0.5648 * y1 + 0.5418 * x73 - 0.4847 * y1 * x73;
  return 0.1914 + 0.7763 * y2 + 0.2378 * x76 - 0.2042 * y2 * x76;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("polygmdh_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
