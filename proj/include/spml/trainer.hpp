#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spml/evaluation.hpp"
#include "spml/labelspace.hpp"
#include "spml/losses.hpp"
#include "spml/model.hpp"
#include "spml/regularizers.hpp"

namespace spml {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 16;
  double base_lr = 1e-3;
  LossSpec loss;
  RegConfig reg;
  std::uint64_t seed = 0;
  int eval_every = 1;  // validation mAP every k epochs
  std::vector<int> hidden_dims = {128};
  std::uint64_t model_seed = 0;
  double last_layer_lr_mult = 1.0;

  void validate() const;
};

struct RunRecord {
  std::vector<double> train_loss;               // one per epoch
  std::vector<std::optional<double>> val_map;   // one per epoch; set at eval epochs
  int best_epoch = 0;                           // 1-based; 0 = final-epoch fallback
  double best_val_map = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ModelParams best;    // parameters at the best validation epoch
  ModelParams final;   // parameters after the last epoch
  RunRecord record;
  // mutable training state, checkpointable alongside the model
  RoleState role_state;          // ROLE only
  FlipStore flip_store;          // LL-Cp only
  PseudoTargetStore pseudo_targets;  // R_P / R_E only
};

// Deterministic experiment loop: seeded per-epoch shuffle, constant learning
// rate, Adam, validation-based model selection. Throws on non-finite loss
// with a diagnostic naming the epoch, batch, and loss kind.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set);

struct SweepResult {
  std::size_t best_index = 0;
  std::vector<RunRecord> records;
  std::vector<double> best_val_maps;
};

// Deterministic argmax of best validation mAP; ties broken by config order.
SweepResult sweep(const std::vector<TrainConfig>& configs, const Dataset& train_set,
                  const Dataset& val_set);

struct GradCheckOptions {
  int trials = 100;
  std::uint64_t seed = 0;
  double h = 1e-5;
  double tolerance = 1e-4;
  RegKind reg = RegKind::None;  // include an asset regularizer in the objective
  double reg_alpha = 0.1;
  // test hook: additive corruption of one analytic gradient entry
  double corrupt_delta = 0.0;
  int corrupt_entry = -1;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  int failures = 0;
  int comparisons = 0;
};

// Analytic d(objective)/d(logits) vs central finite differences on random
// small instances (B <= 4, M <= 6). Large-loss masks are frozen per instance.
GradCheckReport gradcheck(const LossSpec& spec, const GradCheckOptions& opt);

// ROLE estimate-table gradients; pinned (observed positive) entries are
// constants and are skipped.
GradCheckReport gradcheck_role_estimates(double lambda_role, int expected_positives_k,
                                         const GradCheckOptions& opt);

// Embedding-level gradient of the R_E term.
GradCheckReport gradcheck_re(const GradCheckOptions& opt);

// Full-objective gradients at the parameter level through the MLP.
GradCheckReport gradcheck_params(const LossSpec& spec, const GradCheckOptions& opt);

}  // namespace spml
