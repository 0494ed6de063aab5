#pragma once

// Fully connected reference classifier: one sigmoid hidden layer, one sigmoid
// output, trained on squared error with damped Gauss-Newton steps and early
// stopping on a validation set.

#include "polygmdh/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polygmdh {

struct FnnModel {
  InputStage inputs;
  Eigen::MatrixXd hidden;  // h x (m+1), column 0 is the bias
  Eigen::VectorXd output;  // h+1, entry 0 is the bias

  Eigen::Index input_count() const { return hidden.cols() - 1; }
  Eigen::Index hidden_count() const { return hidden.rows(); }
  Eigen::Index parameter_count() const { return hidden.size() + output.size(); }
};

/// Zero-weight network with m inputs and h hidden units.
FnnModel make_fnn(Eigen::Index inputs, Eigen::Index hidden);

/// Parameter vector layout: hidden weights row by row, then output weights.
Eigen::VectorXd pack_parameters(const FnnModel& model);
void unpack_parameters(FnnModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Output for one row of scaled inputs; strictly inside (0,1).
double fnn_predict(const FnnModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd fnn_predict_batch(const FnnModel& model, const Eigen::MatrixXd& x);

double fnn_sse(const FnnModel& model, const Eigen::MatrixXd& x,
               const Eigen::VectorXd& y);
/// Analytic gradient of fnn_sse with respect to pack_parameters().
Eigen::VectorXd fnn_sse_gradient(const FnnModel& model, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y);

struct FnnTrainConfig {
  int hidden = 2;
  int restarts = 100;
  int max_epochs = 500;
  int patience = 10;  // epochs without validation improvement
  double init_scale = 1.0;  // std-dev of the Gaussian initial weights
  double damping = 1e-3;
  double damping_factor = 10.0;
  double max_damping = 1e10;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct RestartSummary {
  int restart = 0;
  int epochs = 0;
  int best_epoch = 0;
  double train_sse = 0.0;       // at the returned snapshot
  double validation_sse = 0.0;  // at the returned snapshot
  double final_validation_sse = 0.0;  // at the last epoch run
  bool failed = false;
};

struct FnnTrainResult {
  FnnModel model;
  std::vector<RestartSummary> restarts;
  int best_restart = 0;
};

/// Trains `cfg.restarts` networks from independent Gaussian starts and returns
/// the one with the lowest validation error.
FnnTrainResult fnn_train(const Eigen::MatrixXd& x_train,
                         const Eigen::VectorXd& y_train,
                         const Eigen::MatrixXd& x_validation,
                         const Eigen::VectorXd& y_validation,
                         const FnnTrainConfig& cfg);

InputBinding bind_inputs(const FnnModel& model,
                         const std::vector<std::string>& header);
double fnn_predict(const FnnModel& model, const InputBinding& binding,
                   std::span<const double> row);

std::string serialize(const FnnModel& model);
FnnModel deserialize_fnn(std::string_view text);

}  // namespace polygmdh
