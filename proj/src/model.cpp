#include "spml/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "spml/rng.hpp"

namespace spml {

ModelParams mlp_init(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("mlp_init: dims needs at least (D, M)");
  for (int d : dims)
    if (d <= 0) throw std::invalid_argument("mlp_init: dims must be positive");
  ModelParams p;
  p.dims = dims;
  Rng root(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    Layer layer;
    layer.weights = Matrix(fan_in, fan_out);
    layer.biases.assign(fan_out, 0.0);
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Rng rng = root.child(l);
    for (int i = 0; i < fan_in; ++i)
      for (int j = 0; j < fan_out; ++j) layer.weights(i, j) = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
    p.lr_multipliers.push_back(1.0);
  }
  return p;
}

ForwardTrace forward(const ModelParams& params, const Matrix& x) {
  if (static_cast<int>(x.cols()) != params.input_dim())
    throw std::invalid_argument("forward: input dim " + std::to_string(x.cols()) +
                                " != model D " + std::to_string(params.input_dim()));
  ForwardTrace t;
  Matrix act = x;
  const std::size_t n_layers = params.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    t.layer_inputs.push_back(act);
    const Layer& layer = params.layers[l];
    Matrix z = matmul(act, layer.weights);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += layer.biases[j];
    if (l + 1 < n_layers) {
      for (double& v : z.data()) v = v > 0.0 ? v : 0.0;  // ReLU
      act = std::move(z);
    } else {
      t.logits = std::move(z);
    }
  }
  // embedding = final hidden activation; input itself for a linear model
  t.embedding = n_layers >= 2 ? t.layer_inputs.back() : x;
  t.probs = Matrix(t.logits.rows(), t.logits.cols());
  for (std::size_t i = 0; i < t.logits.rows(); ++i)
    for (std::size_t j = 0; j < t.logits.cols(); ++j)
      t.probs(i, j) = clamp_prob(1.0 / (1.0 + std::exp(-t.logits(i, j))));
  return t;
}

ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& grad_logits,
                    const Matrix& grad_embedding) {
  const std::size_t n_layers = params.layers.size();
  ParamGrads g;
  g.d_weights.resize(n_layers);
  g.d_biases.resize(n_layers);

  Matrix delta = grad_logits;  // gradient flowing into layer l's output
  for (std::size_t li = n_layers; li-- > 0;) {
    const Layer& layer = params.layers[li];
    const Matrix& input = trace.layer_inputs[li];
    g.d_weights[li] = matmul_at_b(input, delta);
    g.d_biases[li].assign(layer.biases.size(), 0.0);
    for (std::size_t i = 0; i < delta.rows(); ++i)
      for (std::size_t j = 0; j < delta.cols(); ++j) g.d_biases[li][j] += delta(i, j);
    if (li == 0) break;
    Matrix prev = matmul_a_bt(delta, layer.weights);
    // the input of layer li is the ReLU output of layer li-1
    for (std::size_t i = 0; i < prev.rows(); ++i)
      for (std::size_t j = 0; j < prev.cols(); ++j)
        if (input(i, j) <= 0.0) prev(i, j) = 0.0;
    if (li == n_layers - 1 && !grad_embedding.empty()) {
      // embedding-level gradient joins at the last hidden activation,
      // gated by the same ReLU mask
      for (std::size_t i = 0; i < prev.rows(); ++i)
        for (std::size_t j = 0; j < prev.cols(); ++j)
          if (input(i, j) > 0.0) prev(i, j) += grad_embedding(i, j);
    }
    delta = std::move(prev);
  }
  return g;
}

AdamState adam_init(const ModelParams& params) {
  AdamState s;
  for (const Layer& l : params.layers) {
    s.m_weights.emplace_back(l.weights.rows(), l.weights.cols());
    s.v_weights.emplace_back(l.weights.rows(), l.weights.cols());
    s.m_biases.emplace_back(l.biases.size(), 0.0);
    s.v_biases.emplace_back(l.biases.size(), 0.0);
  }
  return s;
}

namespace {
inline void adam_one(double& value, double grad, double& m, double& v, double lr, double beta1,
                     double beta2, double eps, double bc1, double bc2) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double mhat = m / bc1;
  const double vhat = v / bc2;
  value -= lr * mhat / (std::sqrt(vhat) + eps);
}
}  // namespace

void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state, double base_lr,
               double beta1, double beta2, double eps) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const double lr = base_lr * params.lr_multipliers[l];
    Layer& layer = params.layers[l];
    auto& w = layer.weights.data();
    const auto& gw = grads.d_weights[l].data();
    auto& mw = state.m_weights[l].data();
    auto& vw = state.v_weights[l].data();
    for (std::size_t i = 0; i < w.size(); ++i)
      adam_one(w[i], gw[i], mw[i], vw[i], lr, beta1, beta2, eps, bc1, bc2);
    for (std::size_t i = 0; i < layer.biases.size(); ++i)
      adam_one(layer.biases[i], grads.d_biases[l][i], state.m_biases[l][i], state.v_biases[l][i],
               lr, beta1, beta2, eps, bc1, bc2);
  }
}

void adam_update_inplace(std::vector<double>& values, const std::vector<double>& grads,
                         std::vector<double>& m, std::vector<double>& v, long step, double lr,
                         double beta1, double beta2, double eps) {
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < values.size(); ++i)
    adam_one(values[i], grads[i], m[i], v[i], lr, beta1, beta2, eps, bc1, bc2);
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  nlohmann::ordered_json j;
  j["dims"] = params.dims;
  j["lr_multipliers"] = params.lr_multipliers;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const Layer& l : params.layers) {
    nlohmann::ordered_json jl;
    jl["weights"] = l.weights.data();
    jl["biases"] = l.biases;
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << '\n';
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::ordered_json j;
  in >> j;
  ModelParams p;
  p.dims = j.at("dims").get<std::vector<int>>();
  p.lr_multipliers = j.at("lr_multipliers").get<std::vector<double>>();
  const auto& layers = j.at("layers");
  for (std::size_t l = 0; l + 1 < p.dims.size(); ++l) {
    Layer layer;
    layer.weights = Matrix(p.dims[l], p.dims[l + 1]);
    layer.weights.data() = layers.at(l).at("weights").get<std::vector<double>>();
    if (layer.weights.data().size() != static_cast<std::size_t>(p.dims[l]) * p.dims[l + 1])
      throw std::runtime_error("checkpoint layer " + std::to_string(l) + " has wrong weight count");
    layer.biases = layers.at(l).at("biases").get<std::vector<double>>();
    p.layers.push_back(std::move(layer));
  }
  return p;
}

}  // namespace spml
