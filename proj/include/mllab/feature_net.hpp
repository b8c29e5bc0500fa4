#pragma once

// Small fully connected network used to warp kernel inputs.

#include "mllab/numerics.hpp"

#include <string>
#include <vector>

namespace mllab {

enum class Activation { tanh, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Layer widths (input first, output last) and one activation per layer
/// transition, so activations.size() == widths.size() - 1.
struct NetSpec {
  std::vector<int> widths;
  std::vector<Activation> activations;

  NetSpec() = default;
  NetSpec(std::vector<int> widths, std::vector<Activation> activations);

  std::size_t num_layers() const { return activations.size(); }
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  std::size_t num_params() const;

  /// [input_dim -> hidden... -> output] with tanh hidden layers and a linear
  /// output layer.
  static NetSpec mlp(int input_dim, const std::vector<int>& hidden, int output_dim);
  /// [D -> 16 -> 16 -> 2].
  static NetSpec dkl_default(int input_dim);

  bool operator==(const NetSpec&) const = default;
};

/// Parameters stored as one flat vector. For each layer l in order: the
/// out x in weight matrix in row-major order, then the out-vector of biases.
class NetWeights {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit NetWeights(NetSpec spec);  // all zeros
  NetWeights(NetSpec spec, Vector flat);

  const NetSpec& spec() const noexcept { return spec_; }
  const Vector& flat() const noexcept { return flat_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(flat_.size()); }

  Eigen::Map<const RowMatrix> weight(std::size_t layer) const;
  Eigen::Map<RowMatrix> weight(std::size_t layer);
  Eigen::Map<const Vector> bias(std::size_t layer) const;
  Eigen::Map<Vector> bias(std::size_t layer);

  /// Offset of layer l's weight block in flat().
  Index offset(std::size_t layer) const { return offsets_[layer]; }

 private:
  NetSpec spec_;
  Vector flat_;
  std::vector<Index> offsets_;
};

/// Uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)); zero biases.
NetWeights net_init(const NetSpec& spec, Seed seed);

Vector net_forward(const NetWeights& w, const Vector& x);

struct NetGradient {
  Vector weights;  // same layout as NetWeights::flat()
  Vector input;
};

/// Reverse-mode gradient of upstream^T net_forward(w, x).
NetGradient net_vjp(const NetWeights& w, const Vector& x, const Vector& upstream);

}  // namespace mllab
