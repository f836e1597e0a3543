#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spml/matrix.hpp"

namespace spml {

inline constexpr double kProbMin = 1e-7;

inline double clamp_prob(double p) {
  if (p < kProbMin) return kProbMin;
  if (p > 1.0 - kProbMin) return 1.0 - kProbMin;
  return p;
}

struct Layer {
  Matrix weights;  // (fan_in, fan_out)
  std::vector<double> biases;
};

// Small MLP with ReLU hidden activations and a sigmoid head. Float64
// throughout; the gradient checks demand it.
struct ModelParams {
  std::vector<Layer> layers;
  std::vector<int> dims;  // (D, hidden..., M)
  std::vector<double> lr_multipliers;  // per layer

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
};

struct ForwardTrace {
  Matrix logits;      // (B, M)
  Matrix probs;       // sigmoid(logits), clamped to [1e-7, 1 - 1e-7]
  Matrix embedding;   // last hidden activation; the input when no hidden layers
  // cached per-layer inputs (activations feeding each layer) for backprop
  std::vector<Matrix> layer_inputs;
};

struct ParamGrads {
  std::vector<Matrix> d_weights;
  std::vector<std::vector<double>> d_biases;
};

ModelParams mlp_init(const std::vector<int>& dims, std::uint64_t seed);

ForwardTrace forward(const ModelParams& params, const Matrix& x);

// Exact reverse-mode gradients from d(objective)/d(logits); grad_embedding,
// when non-empty, is added to the flowing gradient at the last hidden
// activation (embedding-level regularizers enter here).
ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& grad_logits,
                    const Matrix& grad_embedding = Matrix());

struct AdamState {
  std::vector<Matrix> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;
  long step = 0;
};

AdamState adam_init(const ModelParams& params);

// Standard bias-corrected Adam; per-layer learning rate is
// base_lr * lr_multipliers[layer].
void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state, double base_lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Generic single-tensor Adam update, reused for pseudo-label tables.
void adam_update_inplace(std::vector<double>& values, const std::vector<double>& grads,
                         std::vector<double>& m, std::vector<double>& v, long step, double lr,
                         double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace spml
