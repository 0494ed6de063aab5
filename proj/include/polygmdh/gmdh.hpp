#pragma once

#include "polygmdh/data.hpp"
#include "polygmdh/fit.hpp"
#include "polygmdh/model.hpp"
#include "polygmdh/neuron.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace polygmdh {

/// full:  layer r >= 2 pairs up the previous layer's selected neurons.
/// chain: one neuron survives per layer; layer r >= 2 pairs that neuron with
///        every raw feature.
enum class GrowthMode { full, chain };
enum class FitterKind { lsm, projection };
/// Selection score. `training` scores candidates on their own fitting rows and
/// exists for over-fitting comparisons only.
enum class SelectionCriterion { exterior, training };

struct GrowthConfig {
  int F = 40;  // selection width; chain mode always keeps 1
  int max_layers = 10;
  GrowthMode mode = GrowthMode::full;
  FitterKind fitter = FitterKind::lsm;
  TransferKind transfer = TransferKind::bilinear;
  FitConfig fit;  // projection parameters; fit.seed is ignored
  SelectionCriterion criterion = SelectionCriterion::exterior;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  int selection_width() const { return mode == GrowthMode::chain ? 1 : F; }
};

struct CandidateSpec {
  InputRef first;
  InputRef second;
};

/// Candidate inputs for layer `layer` (1-based). `previous_selected` is the
/// number of neurons kept at layer-1 (ignored for layer 1).
std::vector<CandidateSpec> generate_candidates(int layer, int feature_count,
                                               int previous_selected,
                                               GrowthMode mode);

struct Candidate {
  InputRef first;
  InputRef second;
  Eigen::VectorXd weights;
  double cr = 0.0;  // +inf when the fit failed
  bool rank_deficient = false;
  int fit_steps = 0;  // projection steps k*, 0 for least squares
};

struct LayerRecord {
  int layer = 0;
  std::vector<Candidate> candidates;
  std::vector<int> selected;  // candidate indices, ascending CR
  double cr_min = 0.0;
};

/// Stable ascending sort by CR (ties keep generation order); keeps the first
/// min(F, finite count). Throws DataError when no candidate has a finite CR.
LayerRecord select_best(int layer, std::vector<Candidate> candidates, int F);

enum class GrowthStop { cr_rose, max_layers, sources_exhausted };
const char* to_string(GrowthStop stop);

struct GrowthTrace {
  /// Every evaluated layer, including a final rejected one when growth
  /// stopped because CR_m rose.
  std::vector<LayerRecord> layers;
  GrowthStop stop = GrowthStop::max_layers;
  int final_layer = 0;  // last kept layer

  /// One line per layer: r, L_r, CR_m, selected count.
  std::string log() const;
};

struct GrowthResult {
  PolyNetwork network;
  GrowthTrace trace;
};

/// Grows a network on training rows (A), scoring candidates on examining
/// rows (B). Features are expected to be scaled already; the returned
/// network's features carry the identity range [0,1].
GrowthResult grow(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                  const Eigen::MatrixXd& x_examine,
                  const Eigen::VectorXd& y_examine, const GrowthConfig& cfg,
                  const std::vector<std::string>& feature_names = {});

GrowthResult grow(const LabeledDataset& train, const LabeledDataset& examine,
                  const GrowthConfig& cfg);

}  // namespace polygmdh
