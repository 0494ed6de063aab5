#include "polygmdh/baseline.hpp"

#include "model_io.hpp"
#include "polygmdh/detail/parallel.hpp"
#include "polygmdh/detail/rng.hpp"
#include "polygmdh/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <random>

namespace polygmdh {

namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& z) {
  return 1.0 / (1.0 + (-z).exp());
}

struct Forward {
  Eigen::MatrixXd xa;      // n x (m+1)
  Eigen::MatrixXd hidden;  // n x h
  Eigen::MatrixXd ha;      // n x (h+1)
  Eigen::VectorXd out;     // n
};

Forward forward(const FnnModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.input_count())
    throw DataError("network expects " + std::to_string(model.input_count()) +
                    " inputs, got " + std::to_string(x.cols()));
  Forward f;
  f.xa.resize(x.rows(), x.cols() + 1);
  f.xa.col(0).setOnes();
  f.xa.rightCols(x.cols()) = x;
  f.hidden = sigmoid((f.xa * model.hidden.transpose()).array()).matrix();
  f.ha.resize(x.rows(), model.hidden_count() + 1);
  f.ha.col(0).setOnes();
  f.ha.rightCols(model.hidden_count()) = f.hidden;
  f.out = sigmoid((f.ha * model.output).array()).matrix();
  return f;
}

/// Jacobian of the outputs with respect to pack_parameters(), n x P.
Eigen::MatrixXd jacobian(const FnnModel& model, const Forward& f) {
  const auto n = f.xa.rows();
  const auto h = model.hidden_count();
  const auto m1 = model.hidden.cols();
  Eigen::MatrixXd j(n, model.parameter_count());
  const Eigen::ArrayXd d_out = f.out.array() * (1.0 - f.out.array());
  for (Eigen::Index u = 0; u < h; ++u) {
    const Eigen::ArrayXd d_hidden = d_out * model.output[u + 1] *
                                    f.hidden.col(u).array() *
                                    (1.0 - f.hidden.col(u).array());
    j.middleCols(u * m1, m1) =
        (f.xa.array().colwise() * d_hidden).matrix();
  }
  j.rightCols(h + 1) = (f.ha.array().colwise() * d_out).matrix();
  return j;
}

double clamp_open(double y) {
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::min(std::max(y, lo), hi);
}

struct RestartOutcome {
  RestartSummary summary;
  Eigen::VectorXd theta;
};

RestartOutcome train_one(const FnnModel& shape, int restart,
                         const Eigen::MatrixXd& xt, const Eigen::VectorXd& yt,
                         const Eigen::MatrixXd& xv, const Eigen::VectorXd& yv,
                         const FnnTrainConfig& cfg) {
  RestartOutcome out;
  out.summary.restart = restart;
  FnnModel model = shape;
  std::mt19937_64 rng(detail::derive_seed(cfg.seed, {static_cast<std::uint64_t>(restart)}));
  std::normal_distribution<double> gauss(0.0, cfg.init_scale);
  Eigen::VectorXd theta(model.parameter_count());
  for (auto& v : theta) v = gauss(rng);
  unpack_parameters(model, theta);

  auto sse_of = [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return (forward(model, x).out - y).squaredNorm();
  };
  double train_sse = sse_of(xt, yt);
  double val_sse = sse_of(xv, yv);
  if (!std::isfinite(train_sse) || !std::isfinite(val_sse)) {
    out.summary.failed = true;
    return out;
  }
  out.theta = theta;
  out.summary.train_sse = train_sse;
  out.summary.validation_sse = val_sse;
  out.summary.final_validation_sse = val_sse;

  double mu = cfg.damping;
  int stale = 0;
  const auto p = theta.size();
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const Forward f = forward(model, xt);
    const Eigen::MatrixXd j = jacobian(model, f);
    const Eigen::VectorXd r = f.out - yt;
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;

    bool accepted = false;
    while (mu <= cfg.max_damping) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(jtj + mu * Eigen::MatrixXd::Identity(p, p));
      Eigen::VectorXd step;
      if (ldlt.info() == Eigen::Success && ldlt.isPositive())
        step = -ldlt.solve(g);
      if (step.size() != p || !step.allFinite()) step = -g / mu;
      unpack_parameters(model, theta + step);
      const double trial = sse_of(xt, yt);
      if (std::isfinite(trial) && trial < train_sse) {
        theta += step;
        train_sse = trial;
        mu = std::max(mu / cfg.damping_factor, 1e-12);
        accepted = true;
        break;
      }
      unpack_parameters(model, theta);
      mu *= cfg.damping_factor;
    }
    if (!accepted) break;  // damping exhausted: local minimum

    out.summary.epochs = epoch;
    val_sse = sse_of(xv, yv);
    if (!std::isfinite(val_sse)) {
      out.summary.failed = true;
      return out;
    }
    out.summary.final_validation_sse = val_sse;
    if (val_sse < out.summary.validation_sse) {
      out.summary.validation_sse = val_sse;
      out.summary.train_sse = train_sse;
      out.summary.best_epoch = epoch;
      out.theta = theta;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return out;
}

}  // namespace

void FnnTrainConfig::validate() const {
  if (hidden < 1) throw ConfigError("hidden unit count must be >= 1");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(damping > 0.0) || !(damping_factor > 1.0))
    throw ConfigError("damping must be positive with factor > 1");
}

FnnModel make_fnn(Eigen::Index inputs, Eigen::Index hidden) {
  if (inputs < 1 || hidden < 1)
    throw ConfigError("network needs at least one input and one hidden unit");
  FnnModel m;
  m.hidden = Eigen::MatrixXd::Zero(hidden, inputs + 1);
  m.output = Eigen::VectorXd::Zero(hidden + 1);
  return m;
}

Eigen::VectorXd pack_parameters(const FnnModel& model) {
  Eigen::VectorXd theta(model.parameter_count());
  const auto m1 = model.hidden.cols();
  for (Eigen::Index u = 0; u < model.hidden_count(); ++u)
    theta.segment(u * m1, m1) = model.hidden.row(u).transpose();
  theta.tail(model.output.size()) = model.output;
  return theta;
}

void unpack_parameters(FnnModel& model,
                       const Eigen::Ref<const Eigen::VectorXd>& theta) {
  if (theta.size() != model.parameter_count())
    throw DataError("parameter vector has wrong length");
  const auto m1 = model.hidden.cols();
  for (Eigen::Index u = 0; u < model.hidden_count(); ++u)
    model.hidden.row(u) = theta.segment(u * m1, m1).transpose();
  model.output = theta.tail(model.output.size());
}

double fnn_predict(const FnnModel& model,
                   const Eigen::Ref<const Eigen::VectorXd>& x) {
  return fnn_predict_batch(model, x.transpose())[0];
}

Eigen::VectorXd fnn_predict_batch(const FnnModel& model,
                                  const Eigen::MatrixXd& x) {
  return forward(model, x).out.unaryExpr(&clamp_open);
}

double fnn_sse(const FnnModel& model, const Eigen::MatrixXd& x,
               const Eigen::VectorXd& y) {
  return (forward(model, x).out - y).squaredNorm();
}

Eigen::VectorXd fnn_sse_gradient(const FnnModel& model, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y) {
  const Forward f = forward(model, x);
  return 2.0 * jacobian(model, f).transpose() * (f.out - y);
}

FnnTrainResult fnn_train(const Eigen::MatrixXd& x_train,
                         const Eigen::VectorXd& y_train,
                         const Eigen::MatrixXd& x_validation,
                         const Eigen::VectorXd& y_validation,
                         const FnnTrainConfig& cfg) {
  cfg.validate();
  if (x_train.rows() < 1 || x_validation.rows() < 1)
    throw DataError("training and validation sets must be non-empty");
  if (x_train.cols() != x_validation.cols())
    throw DataError("training and validation widths differ");
  if (x_train.rows() != y_train.size() || x_validation.rows() != y_validation.size())
    throw DataError("feature rows and targets disagree");

  const FnnModel shape = make_fnn(x_train.cols(), cfg.hidden);
  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(cfg.restarts));
  detail::parallel_for(outcomes.size(), cfg.threads, [&](std::size_t r) {
    outcomes[r] = train_one(shape, static_cast<int>(r), x_train, y_train,
                            x_validation, y_validation, cfg);
  });

  FnnTrainResult result;
  int best = -1;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    result.restarts.push_back(outcomes[r].summary);
    if (outcomes[r].summary.failed) continue;
    if (best < 0 || outcomes[r].summary.validation_sse <
                        outcomes[static_cast<std::size_t>(best)].summary.validation_sse)
      best = static_cast<int>(r);
  }
  if (best < 0) throw DataError("every FNN restart failed (non-finite loss)");
  result.best_restart = best;
  result.model = shape;
  unpack_parameters(result.model, outcomes[static_cast<std::size_t>(best)].theta);
  result.model.inputs.input_count = static_cast<int>(x_train.cols());
  for (Eigen::Index j = 0; j < x_train.cols(); ++j)
    result.model.inputs.features.push_back(
        {static_cast<int>(j) + 1, fmt::format("x{}", j + 1), 0.0, 1.0});
  return result;
}

InputBinding bind_inputs(const FnnModel& model,
                         const std::vector<std::string>& header) {
  std::vector<int> all;
  for (const auto& f : model.inputs.features) all.push_back(f.column);
  return InputBinding(model.inputs, header, all);
}

double fnn_predict(const FnnModel& model, const InputBinding& binding,
                   std::span<const double> row) {
  return fnn_predict(model, binding.features(row));
}

std::string serialize(const FnnModel& model) {
  if (static_cast<Eigen::Index>(model.inputs.features.size()) != model.input_count())
    throw IntegrityError("FNN feature table does not match its input count");
  std::string out;
  io::write_preamble(out, "fnn", model.inputs);
  out += fmt::format("hidden {}\n", model.hidden_count());
  for (Eigen::Index u = 0; u < model.hidden_count(); ++u) {
    out += fmt::format("unit {}", u + 1);
    for (double w : model.hidden.row(u)) out += ' ' + io::hex(w);
    out += '\n';
  }
  out += "output_unit";
  for (double w : model.output) out += ' ' + io::hex(w);
  out += "\nend\n";
  return out;
}

FnnModel deserialize_fnn(std::string_view text) {
  io::Reader in(text);
  FnnModel model;
  model.inputs = io::read_preamble(in, "fnn");
  const auto m = static_cast<Eigen::Index>(model.inputs.features.size());
  if (m < 1) throw ModelFormatError("FNN document lists no features");

  const auto& hl = in.next();
  if (hl.tokens.front() != "hidden") in.fail(hl, "expected 'hidden'");
  in.expect_arity(hl, 2);
  const int h = in.integer(hl, 1);
  if (h < 1) in.fail(hl, "hidden count must be >= 1");
  model = [&] {
    FnnModel shaped = make_fnn(m, h);
    shaped.inputs = std::move(model.inputs);
    return shaped;
  }();
  for (int u = 0; u < h; ++u) {
    const auto& l = in.next();
    if (l.tokens.front() != "unit" || in.integer(l, 1) != u + 1)
      in.fail(l, "expected 'unit " + std::to_string(u + 1) + "'");
    in.expect_arity(l, static_cast<std::size_t>(m + 3));
    for (Eigen::Index i = 0; i <= m; ++i)
      model.hidden(u, i) = in.number(l, static_cast<std::size_t>(i + 2));
  }
  const auto& ol = in.next();
  if (ol.tokens.front() != "output_unit") in.fail(ol, "expected 'output_unit'");
  in.expect_arity(ol, static_cast<std::size_t>(h + 2));
  for (int i = 0; i <= h; ++i)
    model.output[i] = in.number(ol, static_cast<std::size_t>(i + 1));
  const auto& end = in.next();
  if (end.tokens.front() != "end") in.fail(end, "expected 'end'");
  if (!in.at_end()) in.fail(in.peek(), "content after 'end'");
  return model;
}

}  // namespace polygmdh
