#pragma once

#include "polygmdh/error.hpp"

#include <Eigen/Dense>

#include <compare>
#include <string>
#include <utility>
#include <vector>

namespace polygmdh {

/// Two-input polynomial transfer.
///   linear:   w0 + w1*u1 + w2*u2
///   bilinear: w0 + w1*u1 + w2*u2 + w12*u1*u2
enum class TransferKind { linear, bilinear };

constexpr int arity(TransferKind kind) {
  return kind == TransferKind::bilinear ? 4 : 3;
}

const char* to_string(TransferKind kind);
TransferKind parse_transfer(const std::string& token);

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Neuron position: 1-based layer and 1-based rank within the layer's
/// selected set (rank 1 = lowest criterion).
struct NeuronId {
  int layer = 0;
  int index = 0;
  auto operator<=>(const NeuronId&) const = default;
};

/// A neuron input: a raw feature column (1-based) or an upstream neuron.
struct InputRef {
  enum class Source { feature, neuron };
  Source source = Source::feature;
  int layer = 0;  // 0 for features
  int index = 0;  // feature column or neuron rank

  static InputRef feature(int column) { return {Source::feature, 0, column}; }
  static InputRef neuron(NeuronId id) {
    return {Source::neuron, id.layer, id.index};
  }
  bool is_feature() const { return source == Source::feature; }
  NeuronId neuron_id() const { return {layer, index}; }
  auto operator<=>(const InputRef&) const = default;
};

template <typename Scalar>
Vector<Scalar> make_input_vector(Scalar u1, Scalar u2, TransferKind kind) {
  Vector<Scalar> u(arity(kind));
  u[0] = Scalar(1);
  u[1] = u1;
  u[2] = u2;
  if (kind == TransferKind::bilinear) u[3] = u1 * u2;
  return u;
}

/// Builds the p x n design matrix whose columns are input vectors for the
/// paired samples a[k], b[k].
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> make_design(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
    TransferKind kind) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size())
    throw DataError("design inputs have different lengths");
  Matrix<Scalar> u(arity(kind), a.size());
  u.row(0).setOnes();
  u.row(1) = a.transpose();
  u.row(2) = b.transpose();
  if (kind == TransferKind::bilinear)
    u.row(3) = a.cwiseProduct(b).transpose();
  return u;
}

template <typename DerivedU, typename DerivedW>
typename DerivedU::Scalar eval_neuron(const Eigen::MatrixBase<DerivedU>& u,
                                      const Eigen::MatrixBase<DerivedW>& w) {
  if (u.size() != w.size())
    throw DataError("input vector length " + std::to_string(u.size()) +
                    " does not match weight length " +
                    std::to_string(w.size()));
  return u.dot(w);
}

/// Neuron outputs for every column of a design matrix.
template <typename DerivedU, typename DerivedW>
Vector<typename DerivedU::Scalar> eval_neuron_batch(
    const Eigen::MatrixBase<DerivedU>& design,
    const Eigen::MatrixBase<DerivedW>& w) {
  if (design.rows() != w.size())
    throw DataError("design rows do not match weight length");
  return design.transpose() * w;
}

/// All unordered pairs (i1 < i2) of 0-based indices below `count`, in
/// lexicographic order.
std::vector<std::pair<int, int>> enumerate_pairs(int count);

}  // namespace polygmdh
