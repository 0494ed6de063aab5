#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace polygmdh {

/// Feature matrix (rows = examples) with binary targets.
struct LabeledDataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;
  std::vector<std::string> feature_names;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }

  /// Throws DataError when shapes disagree, a label is not 0/1, or a value
  /// is non-finite.
  void validate() const;

  LabeledDataset subset(std::span<const Eigen::Index> row_indices) const;
  std::size_t count_positive() const;
};

/// Label column chosen by header name or 0-based column index.
using LabelColumn = std::variant<std::string, std::size_t>;

/// Tokens that map to class 0 and class 1.
struct LabelMapping {
  std::string negative = "0";
  std::string positive = "1";
};

LabeledDataset load_csv(const std::filesystem::path& path,
                        const LabelColumn& label_column,
                        const LabelMapping& mapping = {});
LabeledDataset read_csv(std::istream& in, const LabelColumn& label_column,
                        const LabelMapping& mapping = {});

/// Feature-only table (no label column), e.g. rows to score.
struct FeatureTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};

FeatureTable read_feature_csv(std::istream& in);
FeatureTable load_feature_csv(const std::filesystem::path& path);

/// Writes features followed by a label column named `label_name`.
void write_csv(std::ostream& out, const LabeledDataset& d,
               const std::string& label_name = "label",
               const LabelMapping& mapping = {});

/// Column-wise min-max scaling to [0,1], fitted on training data.
/// Constant columns are not retained.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(Eigen::VectorXd min, Eigen::VectorXd max);

  static Normalizer fit(const Eigen::MatrixXd& x);

  /// Returns only the retained columns, scaled.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
  /// Maps scaled retained columns back to original units.
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& scaled) const;

  const Eigen::VectorXd& min() const { return min_; }
  const Eigen::VectorXd& max() const { return max_; }
  /// 0-based source columns that survive normalization.
  const std::vector<Eigen::Index>& retained() const { return retained_; }
  Eigen::Index input_count() const { return min_.size(); }

 private:
  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
  std::vector<Eigen::Index> retained_;
};

Normalizer fit_normalizer(const LabeledDataset& d);

/// Scaled copy holding only retained columns (and their names).
LabeledDataset apply(const Normalizer& norm, const LabeledDataset& d);

struct DatasetSplit {
  std::vector<Eigen::Index> train;    // D_A
  std::vector<Eigen::Index> examine;  // D_B
};

/// Seeded random partition into training and examining rows. Index lists are
/// returned in ascending order.
DatasetSplit split(const LabeledDataset& d, double fraction_train,
                   std::uint64_t seed, bool stratified = true);

}  // namespace polygmdh
