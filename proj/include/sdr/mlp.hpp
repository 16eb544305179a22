#pragma once

// Fully-connected tanh network u(x, z) with a forward pass that carries the
// spatial gradient along, and the matching reverse pass for parameter
// gradients of losses that depend on both the value and the gradient.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdr/error.hpp"
#include "sdr/rng.hpp"

namespace sdr {

enum class Activation { tanh };

/// Value of a scalar field and its gradient with respect to the first d
/// input coordinates (the spatial ones).
struct FieldEval {
  double value = 0.0;
  Eigen::VectorXd spatial_grad;
};

using NetworkEval = FieldEval;

/// Weights and biases of the network. `layer_sizes` = [N0, ..., NL] with
/// NL = 1; affine layer l maps R^{N(l-1)} -> R^{Nl}, tanh on every layer but
/// the last, identity on the output.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is N(l+1) x N(l)
  std::vector<Eigen::VectorXd> biases;   // biases[l] has N(l+1) entries
  Activation activation = Activation::tanh;

  int input_dim() const { return layer_sizes.front(); }
  std::size_t num_layers() const { return weights.size(); }

  int width() const {
    int w = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) w = std::max(w, layer_sizes[l]);
    return w;
  }

  std::size_t parameter_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
      count += static_cast<std::size_t>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
    return count;
  }

  void validate() const;

  bool operator==(const MlpParams& other) const {
    if (layer_sizes != other.layer_sizes || activation != other.activation) return false;
    for (std::size_t l = 0; l < weights.size(); ++l)
      if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
    return true;
  }
};

inline void validate_layer_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 3)
    throw InvalidArgument("network needs an input, at least one hidden layer and an output (" +
                          std::to_string(sizes.size()) + " sizes given)");
  for (int n : sizes)
    if (n <= 0) throw InvalidArgument("layer sizes must be positive");
  if (sizes.back() != 1) throw InvalidArgument("output layer must have size 1");
}

inline void MlpParams::validate() const {
  validate_layer_sizes(layer_sizes);
  if (weights.size() + 1 != layer_sizes.size() || biases.size() != weights.size())
    throw InvalidArgument("parameter list does not match layer_sizes");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l])
      throw InvalidArgument("weight " + std::to_string(l) + " has the wrong shape");
    if (biases[l].size() != layer_sizes[l + 1])
      throw InvalidArgument("bias " + std::to_string(l) + " has the wrong length");
    if (!weights[l].allFinite() || !biases[l].allFinite())
      throw NumericalError("non-finite parameter in layer " + std::to_string(l));
  }
}

/// Parameters shaped for `layer_sizes`, all zero.
inline MlpParams zero_params(const std::vector<int>& layer_sizes) {
  validate_layer_sizes(layer_sizes);
  MlpParams p;
  p.layer_sizes = layer_sizes;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
    p.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
  }
  return p;
}

/// Glorot-uniform weights, U(-r, r) with r = sqrt(6 / (fan_in + fan_out)),
/// zero biases. Entries are drawn layer by layer in row-major order from the
/// (seed, init) stream.
inline MlpParams init_params(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  MlpParams p = zero_params(layer_sizes);
  RngStream rng(seed, StreamId::init);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double r = std::sqrt(6.0 / (layer_sizes[l] + layer_sizes[l + 1]));
    auto& w = p.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-r, r);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Flat parameter vectors. Order: layer by layer; within a layer the weight
// matrix row-major, then the bias.

using FlatGradient = Eigen::VectorXd;

inline Eigen::VectorXd flatten(const MlpParams& p) {
  Eigen::VectorXd out(p.parameter_count());
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const auto& w = p.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) out(k++) = w(i, j);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) out(k++) = p.biases[l](i);
  }
  return out;
}

inline void unflatten(const Eigen::VectorXd& flat, MlpParams& p) {
  if (static_cast<std::size_t>(flat.size()) != p.parameter_count())
    throw InvalidArgument("flat vector length " + std::to_string(flat.size()) +
                          " does not match parameter count " + std::to_string(p.parameter_count()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    auto& w = p.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat(k++);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = flat(k++);
  }
}

// ---------------------------------------------------------------------------
// Batched passes. Inputs are (N0 x B) with one sample per column.

/// Value-only forward pass; returns the B outputs.
inline Eigen::VectorXd forward_batch(const MlpParams& p, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != p.input_dim())
    throw InvalidArgument("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                          std::to_string(p.input_dim()));
  Eigen::MatrixXd h = inputs;
  const std::size_t last = p.weights.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Eigen::MatrixXd a = p.weights[l] * h;
    a.colwise() += p.biases[l];
    h = a.array().tanh().matrix();
  }
  Eigen::MatrixXd out = p.weights[last] * h;
  out.array() += p.biases[last](0);
  return out.row(0).transpose();
}

/// Activations recorded by the extended forward pass.
///
/// For each layer the stored block is [h | dh_1 | ... | dh_d], each of width B:
/// the post-activation values and their derivatives along spatial input
/// directions e_1..e_d. `layers[0]` is the input block [x | e_1 | ... | e_d].
struct ExtendedTape {
  int spatial_dim = 0;
  Eigen::Index batch = 0;
  std::vector<Eigen::MatrixXd> layers;
  Eigen::VectorXd values;        // u for each sample
  Eigen::MatrixXd spatial_grads;  // (d x B)
};

inline ExtendedTape forward_extended(const MlpParams& p, const Eigen::MatrixXd& inputs, int d) {
  if (inputs.rows() != p.input_dim())
    throw InvalidArgument("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                          std::to_string(p.input_dim()));
  if (d < 0 || d > p.input_dim())
    throw InvalidArgument("spatial dimension " + std::to_string(d) + " out of range");
  const Eigen::Index B = inputs.cols();
  const Eigen::Index blocks = 1 + d;

  ExtendedTape tape;
  tape.spatial_dim = d;
  tape.batch = B;
  tape.layers.reserve(p.weights.size());

  Eigen::MatrixXd z0 = Eigen::MatrixXd::Zero(p.input_dim(), B * blocks);
  z0.leftCols(B) = inputs;
  for (int j = 0; j < d; ++j) z0.row(j).segment((1 + j) * B, B).setOnes();
  tape.layers.push_back(std::move(z0));

  const std::size_t last = p.weights.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Eigen::MatrixXd a = p.weights[l] * tape.layers.back();
    a.leftCols(B).colwise() += p.biases[l];
    a.leftCols(B) = a.leftCols(B).array().tanh().matrix();
    const Eigen::ArrayXXd slope = 1.0 - a.leftCols(B).array().square();
    for (int j = 0; j < d; ++j) a.middleCols((1 + j) * B, B).array() *= slope;
    tape.layers.push_back(std::move(a));
  }
  Eigen::MatrixXd out = p.weights[last] * tape.layers.back();
  tape.values = out.leftCols(B).row(0).transpose();
  tape.values.array() += p.biases[last](0);
  tape.spatial_grads.resize(d, B);
  for (int j = 0; j < d; ++j) tape.spatial_grads.row(j) = out.middleCols((1 + j) * B, B);
  return tape;
}

/// Reverse pass through `forward_extended`.
///
/// `value_adjoint` (B) holds dLoss/du per sample and `grad_adjoint` (d x B)
/// holds dLoss/d(grad_x u). The parameter gradient is accumulated into `out`
/// (flat layout), which must already have parameter_count() entries.
inline void backward_extended(const MlpParams& p, const ExtendedTape& tape,
                              const Eigen::VectorXd& value_adjoint, const Eigen::MatrixXd& grad_adjoint,
                              Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index B = tape.batch;
  const int d = tape.spatial_dim;
  const std::size_t L = p.weights.size();

  // Offsets of each layer inside the flat vector.
  std::vector<Eigen::Index> offset(L);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offset[l] = k;
    k += p.weights[l].size() + p.biases[l].size();
  }

  Eigen::MatrixXd adj(1, B * (1 + d));
  adj.leftCols(B) = value_adjoint.transpose();
  for (int j = 0; j < d; ++j) adj.middleCols((1 + j) * B, B) = grad_adjoint.row(j);

  for (std::size_t l = L; l-- > 0;) {
    const Eigen::MatrixXd& below = tape.layers[l];
    const Eigen::MatrixXd dW = adj * below.transpose();
    const Eigen::Index rows = dW.rows(), cols = dW.cols();
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) out(offset[l] + i * cols + j) += dW(i, j);
    out.segment(offset[l] + rows * cols, rows) += adj.leftCols(B).rowwise().sum();

    if (l == 0) break;
    Eigen::MatrixXd back = p.weights[l].transpose() * adj;
    // below = [h | dh_1..dh_d] with dh_j = (1 - h^2) * da_j. The value adjoint
    // picks up the derivative of the slope through every tangent block.
    const auto h = below.leftCols(B).array();
    const Eigen::ArrayXXd slope = 1.0 - h.square();
    Eigen::ArrayXXd curvature = Eigen::ArrayXXd::Zero(h.rows(), B);
    for (int j = 0; j < d; ++j)
      curvature += back.middleCols((1 + j) * B, B).array() * below.middleCols((1 + j) * B, B).array();
    back.leftCols(B) = (slope * back.leftCols(B).array() - 2.0 * h * curvature).matrix();
    for (int j = 0; j < d; ++j) back.middleCols((1 + j) * B, B).array() *= slope;
    adj = std::move(back);
  }
}

// ---------------------------------------------------------------------------
// Single-input convenience wrappers.

inline double forward(const MlpParams& p, std::span<const double> input) {
  if (static_cast<int>(input.size()) != p.input_dim())
    throw InvalidArgument("input length " + std::to_string(input.size()) + " != " +
                          std::to_string(p.input_dim()));
  const Eigen::Map<const Eigen::MatrixXd> x(input.data(), p.input_dim(), 1);
  return forward_batch(p, x)(0);
}

inline NetworkEval forward_with_spatial_grad(const MlpParams& p, std::span<const double> input, int d) {
  if (static_cast<int>(input.size()) != p.input_dim())
    throw InvalidArgument("input length " + std::to_string(input.size()) + " != " +
                          std::to_string(p.input_dim()));
  if (d < 1 || d > p.input_dim()) throw InvalidArgument("spatial dimension out of range");
  const Eigen::Map<const Eigen::MatrixXd> x(input.data(), p.input_dim(), 1);
  const ExtendedTape tape = forward_extended(p, x, d);
  return {tape.values(0), tape.spatial_grads.col(0)};
}

}  // namespace sdr
