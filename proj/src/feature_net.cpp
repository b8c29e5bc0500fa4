#include "mllab/feature_net.hpp"

#include "mllab/error.hpp"

#include <cmath>

namespace mllab {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw InputError("unknown activation '" + s + "'");
}

NetSpec::NetSpec(std::vector<int> w, std::vector<Activation> a)
    : widths(std::move(w)), activations(std::move(a)) {
  if (widths.size() < 2) throw InputError("network needs at least one layer transition");
  if (activations.size() != widths.size() - 1) {
    throw InputError("network needs one activation per layer transition");
  }
  for (int width : widths) {
    if (width < 1) throw InputError("network widths must be positive");
  }
}

std::size_t NetSpec::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    n += static_cast<std::size_t>(widths[l + 1]) * static_cast<std::size_t>(widths[l] + 1);
  }
  return n;
}

NetSpec NetSpec::mlp(int input_dim, const std::vector<int>& hidden, int output_dim) {
  std::vector<int> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  std::vector<Activation> acts(hidden.size(), Activation::tanh);
  acts.push_back(Activation::identity);
  return NetSpec(std::move(widths), std::move(acts));
}

NetSpec NetSpec::dkl_default(int input_dim) { return mlp(input_dim, {16, 16}, 2); }

NetWeights::NetWeights(NetSpec spec) : NetWeights(spec, Vector::Zero(static_cast<Index>(spec.num_params()))) {}

NetWeights::NetWeights(NetSpec spec, Vector flat) : spec_(std::move(spec)), flat_(std::move(flat)) {
  if (static_cast<std::size_t>(flat_.size()) != spec_.num_params()) {
    throw DimensionMismatch("network parameter vector has " + std::to_string(flat_.size()) +
                            " entries, spec needs " + std::to_string(spec_.num_params()));
  }
  if (!flat_.allFinite()) throw NonFiniteValue("network weights must be finite");
  Index off = 0;
  for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
    offsets_.push_back(off);
    off += static_cast<Index>(spec_.widths[l + 1]) * (spec_.widths[l] + 1);
  }
}

Eigen::Map<const NetWeights::RowMatrix> NetWeights::weight(std::size_t l) const {
  return {flat_.data() + offsets_[l], spec_.widths[l + 1], spec_.widths[l]};
}

Eigen::Map<NetWeights::RowMatrix> NetWeights::weight(std::size_t l) {
  return {flat_.data() + offsets_[l], spec_.widths[l + 1], spec_.widths[l]};
}

Eigen::Map<const Vector> NetWeights::bias(std::size_t l) const {
  return {flat_.data() + offsets_[l] + Index{spec_.widths[l + 1]} * spec_.widths[l], spec_.widths[l + 1]};
}

Eigen::Map<Vector> NetWeights::bias(std::size_t l) {
  return {flat_.data() + offsets_[l] + Index{spec_.widths[l + 1]} * spec_.widths[l], spec_.widths[l + 1]};
}

NetWeights net_init(const NetSpec& spec, Seed seed) {
  NetWeights w(spec);
  Rng rng(seed, 0x6e6574);
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const double a = std::sqrt(6.0 / (spec.widths[l] + spec.widths[l + 1]));
    auto wl = w.weight(l);
    for (Index i = 0; i < wl.rows(); ++i)
      for (Index j = 0; j < wl.cols(); ++j) wl(i, j) = rng.uniform(-a, a);
  }
  return w;
}

namespace {

Vector activate(Activation a, Vector v) {
  if (a == Activation::tanh) v = v.array().tanh().matrix();
  return v;
}

}  // namespace

Vector net_forward(const NetWeights& w, const Vector& x) {
  const NetSpec& spec = w.spec();
  if (x.size() != spec.input_dim()) {
    throw DimensionMismatch("network input has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(spec.input_dim()));
  }
  Vector h = x;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    h = activate(spec.activations[l], w.weight(l) * h + w.bias(l));
  }
  return h;
}

NetGradient net_vjp(const NetWeights& w, const Vector& x, const Vector& upstream) {
  const NetSpec& spec = w.spec();
  if (x.size() != spec.input_dim()) throw DimensionMismatch("network input dimension");
  if (upstream.size() != spec.output_dim()) throw DimensionMismatch("upstream gradient dimension");

  const std::size_t layers = spec.num_layers();
  std::vector<Vector> inputs(layers);   // input to each layer
  std::vector<Vector> outputs(layers);  // post-activation output of each layer
  Vector h = x;
  for (std::size_t l = 0; l < layers; ++l) {
    inputs[l] = h;
    h = activate(spec.activations[l], w.weight(l) * h + w.bias(l));
    outputs[l] = h;
  }

  NetGradient g{Vector::Zero(static_cast<Index>(w.size())), Vector()};
  NetWeights grad(spec, Vector::Zero(static_cast<Index>(w.size())));
  Vector delta = upstream;
  for (std::size_t l = layers; l-- > 0;) {
    if (spec.activations[l] == Activation::tanh) {
      delta = (delta.array() * (1.0 - outputs[l].array().square())).matrix();
    }
    grad.weight(l) = delta * inputs[l].transpose();
    grad.bias(l) = delta;
    delta = w.weight(l).transpose() * delta;
  }
  g.weights = grad.flat();
  g.input = delta;
  return g;
}

}  // namespace mllab
