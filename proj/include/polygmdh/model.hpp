#pragma once

#include "polygmdh/neuron.hpp"
#include "polygmdh/signal.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polygmdh {

/// A network input: source column (1-based) in the feature space the model
/// was trained on, its name, and the min-max range used to scale it.
struct FeatureInfo {
  int column = 0;
  std::string name;
  double min = 0.0;
  double max = 1.0;

  double scale(double raw) const { return (raw - min) / (max - min); }
};

/// Optional PCA stage: raw features are min-max scaled with `raw` ranges,
/// projected, and the projections become the model's features.
struct InputProjection {
  std::vector<FeatureInfo> raw;
  PCAModel pca;
};

/// Which CSV tokens map to class 0 and class 1, and the label column name.
struct LabelInfo {
  std::string column = "label";
  std::string negative = "0";
  std::string positive = "1";
};

/// Preprocessing shared by every persisted model kind.
struct InputStage {
  int input_count = 0;                 // width of the training feature space
  std::vector<FeatureInfo> features;   // sorted by column
  std::optional<InputProjection> projection;
  LabelInfo labels;

  const FeatureInfo* find_column(int column) const;
};

struct Neuron {
  NeuronId id;
  TransferKind kind = TransferKind::bilinear;
  InputRef first;
  InputRef second;
  Eigen::VectorXd weights;
};

/// Trained polynomial network. Neurons are kept in layer-major order and
/// every neuron is reachable from `output`.
struct PolyNetwork {
  InputStage inputs;
  std::vector<Neuron> neurons;
  NeuronId output;

  /// Throws IntegrityError on dangling refs, duplicate ids, refs that do not
  /// point to a lower layer, or unreachable neurons.
  void validate() const;
  const Neuron* find(NeuronId id) const;
  int depth() const;
  /// Distinct feature columns referenced by any neuron.
  std::vector<int> referenced_features() const;
};

/// Keeps only the neurons and features on paths into `output`, sorted
/// layer-major. Throws IntegrityError on dangling references.
PolyNetwork prune(InputStage inputs, std::vector<Neuron> graph, NeuronId output);

/// Maps the raw names a model needs onto the columns of an input table.
class InputBinding {
 public:
  InputBinding(const InputStage& stage, const std::vector<std::string>& header,
               const std::vector<int>& needed_columns);

  /// Scaled model features for one raw input row, indexed like
  /// `stage.features`. Features that were not needed are left at 0.
  Eigen::VectorXd features(std::span<const double> row) const;

 private:
  const InputStage* stage_;
  std::vector<std::ptrdiff_t> raw_position_;  // per raw/needed feature
  std::vector<bool> needed_;
};

/// Features whose value can change the output (non-zero coefficient on a
/// path into the output neuron).
struct FeatureUse {
  int column = 0;
  std::string name;
  int references = 0;  // neurons consuming it through a non-zero term
};
std::vector<FeatureUse> feature_report(const PolyNetwork& net);

/// Raw column names a row must provide for `predict`.
std::vector<std::string> required_inputs(const PolyNetwork& net);

InputBinding bind_inputs(const PolyNetwork& net,
                         const std::vector<std::string>& header);

/// Output for a row of already-scaled features indexed like
/// `net.inputs.features`.
double evaluate_scaled(const PolyNetwork& net,
                       const Eigen::Ref<const Eigen::VectorXd>& features);

/// Output for a raw row laid out as `header`.
double predict(const PolyNetwork& net, const InputBinding& binding,
               std::span<const double> row);
/// Output for a raw row given by name.
double predict(const PolyNetwork& net, const std::vector<std::string>& header,
               std::span<const double> row);

/// 1 when the output reaches the threshold (inclusive), else 0.
inline int classify_score(double score, double threshold = 0.5) {
  return score >= threshold ? 1 : 0;
}
int classify(const PolyNetwork& net, const std::vector<std::string>& header,
             std::span<const double> row, double threshold = 0.5);

std::string serialize(const PolyNetwork& net);
PolyNetwork deserialize(std::string_view text);

/// Reads only the `kind` line of a model document ("pnn" or "fnn").
std::string model_kind(std::string_view text);

/// One line per neuron in layer order, e.g.
///   y_1^{(1)} = 0.6965 + 0.3916·x11 + 0.2484·x69 - 0.2312·x11·x69
std::string render_rules(const PolyNetwork& net);

std::string neuron_name(NeuronId id);

}  // namespace polygmdh
