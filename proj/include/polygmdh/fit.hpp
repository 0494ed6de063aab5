#pragma once

// Weight fitting for a single two-input neuron.
//
// Design matrices are p x n: each column is one example's input vector
// (1, u1, u2[, u1*u2]), so a neuron's outputs are U^T w.

#include "polygmdh/error.hpp"
#include "polygmdh/neuron.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace polygmdh {

struct FitConfig {
  double chi = 1.9;                // learning rate, 1 < chi <= 2
  std::optional<double> epsilon;   // stop once E_B <= epsilon (disables delta)
  double delta = 0.0015;           // stop once E_B drops by less than delta
  int max_steps = 100;
  std::uint64_t seed = 0;          // seeds the Gaussian initial weights
  /// Use (sum eta)^2 instead of sum eta^2 for the examining error.
  bool squared_sum_rse = false;

  void validate() const {
    if (!(chi > 1.0 && chi <= 2.0))
      throw ConfigError("learning rate chi must lie in (1, 2], got " +
                        std::to_string(chi));
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    if (epsilon && !(*epsilon >= 0.0))
      throw ConfigError("epsilon must be non-negative");
    if (max_steps < 1) throw ConfigError("max_steps must be at least 1");
  }
};

enum class FitStop { epsilon, delta, max_steps };

const char* to_string(FitStop stop);

template <typename Scalar>
struct FitTrace {
  std::vector<Scalar> e_b;  // E_B(0..steps)
  int steps = 0;            // k*
  FitStop stop = FitStop::max_steps;

  Scalar final_error() const { return e_b.back(); }
};

/// Training inputs/targets (A) and examining inputs/targets (B).
template <typename Scalar>
struct DesignPair {
  Matrix<Scalar> u_train;
  Vector<Scalar> y_train;
  Matrix<Scalar> u_examine;
  Vector<Scalar> y_examine;

  void validate() const {
    if (u_train.cols() != y_train.size() ||
        u_examine.cols() != y_examine.size() ||
        u_train.rows() != u_examine.rows())
      throw DataError("design pair dimensions do not match");
    if (!u_train.allFinite() || !y_train.allFinite() ||
        !u_examine.allFinite() || !y_examine.allFinite())
      throw DataError("design pair contains non-finite values");
  }
  bool underdetermined() const { return u_train.cols() < u_train.rows(); }
};

template <typename Scalar>
struct LsmResult {
  Vector<Scalar> weights;
  bool rank_deficient = false;  // solved with the ridge fallback
};

inline constexpr double kRidgeLambda = 1e-8;

/// Least-squares weights minimising sum_k (u_k . w - y_k)^2.
/// Rank-deficient systems fall back to (U U^T + 1e-8 I) w = U y.
template <typename DerivedU, typename DerivedY>
LsmResult<typename DerivedU::Scalar> lsm_fit(
    const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedU::Scalar;
  if (u.cols() < 1) throw DataError("least squares needs at least one example");
  if (u.cols() != y.size())
    throw DataError("least squares: " + std::to_string(u.cols()) +
                    " examples but " + std::to_string(y.size()) + " targets");
  LsmResult<Scalar> out;
  const Matrix<Scalar> ut = u.transpose();
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(ut);
  if (qr.rank() == u.rows()) {
    out.weights = qr.solve(y.derived().template cast<Scalar>());
    return out;
  }
  const Matrix<Scalar> gram =
      u * u.transpose() +
      Scalar(kRidgeLambda) * Matrix<Scalar>::Identity(u.rows(), u.rows());
  out.weights = gram.ldlt().solve(u * y);
  out.rank_deficient = true;
  return out;
}

/// Exterior criterion: squared error of w on the examining set.
template <typename DerivedW, typename DerivedU, typename DerivedY>
typename DerivedU::Scalar compute_cr(const Eigen::MatrixBase<DerivedW>& w,
                                     const Eigen::MatrixBase<DerivedU>& u,
                                     const Eigen::MatrixBase<DerivedY>& y) {
  if (u.rows() != w.size() || u.cols() != y.size())
    throw DataError("criterion dimensions do not match");
  return (u.transpose() * w - y).squaredNorm();
}

template <typename Scalar>
struct ProjectionResult {
  Vector<Scalar> weights;
  FitTrace<Scalar> trace;

  /// Criterion value of the fitted neuron, E_B(k*).
  Scalar criterion() const { return trace.final_error(); }
};

namespace detail {

template <typename Scalar>
Scalar examining_error(const DesignPair<Scalar>& d, const Vector<Scalar>& w,
                       bool squared_sum) {
  const Vector<Scalar> eta = d.u_examine.transpose() * w - d.y_examine;
  if (squared_sum) {
    const Scalar s = eta.sum();
    return s * s;
  }
  return eta.squaredNorm();
}

}  // namespace detail

/// Iterative projection fit:
///   w_k = w_{k-1} - chi / ||U_A||_F^2 * U_A (U_A^T w_{k-1} - y_A)
/// tracking E_B on the examining set after each step. Without an explicit
/// start, w_0 is drawn from a standard normal seeded by cfg.seed.
template <typename Scalar>
ProjectionResult<Scalar> projection_fit(
    const DesignPair<Scalar>& d, const FitConfig& cfg,
    const std::optional<Vector<Scalar>>& initial = std::nullopt) {
  cfg.validate();
  d.validate();
  const Scalar norm2 = d.u_train.squaredNorm();
  if (!(norm2 > Scalar(0)))
    throw DataError("projection fit: training design matrix has zero norm");

  ProjectionResult<Scalar> out;
  if (initial) {
    if (initial->size() != d.u_train.rows())
      throw DataError("initial weight length does not match design");
    out.weights = *initial;
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    out.weights.resize(d.u_train.rows());
    for (auto& v : out.weights) v = Scalar(gauss(rng));
  }

  auto& trace = out.trace;
  auto& w = out.weights;
  const Scalar rate = Scalar(cfg.chi) / norm2;

  auto record = [&](int step) {
    const Scalar e = detail::examining_error(d, w, cfg.squared_sum_rse);
    if (!std::isfinite(static_cast<double>(e)))
      throw DivergenceError(
          "projection fit diverged at step " + std::to_string(step), step);
    trace.e_b.push_back(e);
    return e;
  };

  const Scalar e0 = record(0);
  if (cfg.epsilon && e0 <= Scalar(*cfg.epsilon)) {
    trace.stop = FitStop::epsilon;
    return out;
  }
  for (int k = 1; k <= cfg.max_steps; ++k) {
    const Vector<Scalar> eta = d.u_train.transpose() * w - d.y_train;
    w.noalias() -= rate * (d.u_train * eta);
    const Scalar e = record(k);
    trace.steps = k;
    if (cfg.epsilon) {
      if (e <= Scalar(*cfg.epsilon)) {
        trace.stop = FitStop::epsilon;
        return out;
      }
    } else if (trace.e_b[static_cast<std::size_t>(k - 1)] - e <
               Scalar(cfg.delta)) {
      trace.stop = FitStop::delta;
      return out;
    }
  }
  trace.stop = FitStop::max_steps;
  return out;
}

}  // namespace polygmdh
