#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "spml/labelspace.hpp"
#include "spml/matrix.hpp"
#include "spml/model.hpp"

namespace spml {

enum class LossKind { BCEFull, AN, WAN, LS, ROLE, EM, LLR, LLCt, LLCp };

const char* loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& name);

struct LossSpec {
  LossKind kind = LossKind::AN;
  double gamma = 1.0;        // WAN: weight on assumed-negative terms
  double eps_ls = 0.1;       // LS: smoothing coefficient
  double alpha_em = 0.1;     // EM: entropy weight
  double lambda_role = 1.0;  // ROLE: expected-positive regularizer weight
  double delta_rel = 0.0;    // LL: percent of terms rejected per epoch past the first
  int expected_positives_k = 1;  // ROLE: k
  int a = 1;       // prior combinator: weight on unknown terms
  double b = 1.0;  // prior combinator: weight on known-negative terms

  void validate() const;  // throws std::invalid_argument
};

// Named presets mirroring the reported per-dataset hyperparameters.
LossSpec loss_preset(const std::string& name);
std::vector<std::string> loss_preset_names();

struct BceTerm {
  double value;
  double d_dp;
};

// L+ = -log(p)
BceTerm term_bce_pos(double p);
// L- = -log(1 - p)
BceTerm term_bce_neg(double p);

// Permanent positive flips made by LL-Cp; keyed by (example_id, class).
class FlipStore {
 public:
  bool is_flipped(std::int64_t example_id, int cls) const {
    auto it = flips_.find(example_id);
    return it != flips_.end() && it->second.count(cls) > 0;
  }
  void flip(std::int64_t example_id, int cls) { flips_[example_id].insert(cls); }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [id, s] : flips_) n += s.size();
    return n;
  }
  const std::map<std::int64_t, std::set<int>>& entries() const { return flips_; }
  void clear() { flips_.clear(); }

 private:
  std::map<std::int64_t, std::set<int>> flips_;
};

// Jointly trained pseudo-label table; one row per training example.
struct RoleState {
  Matrix estimates;  // (num train examples, M), values in (0, 1]; observed positives pinned to 1

  static RoleState init(std::size_t num_examples, int num_classes, std::uint64_t seed);
};

struct BatchContext {
  int epoch = 1;  // t >= 1
  std::vector<std::int64_t> example_ids;
  std::vector<TriStateLabelVector> labels;
  Matrix probs;  // (B, M), clamped to [1e-7, 1 - 1e-7]
  FlipStore* flip_store = nullptr;  // required for LLCp

  std::size_t batch_size() const { return labels.size(); }
  std::size_t num_classes() const { return probs.cols(); }
};

struct LossOutput {
  double value = 0.0;           // full objective value
  double value_logit_path = 0.0;     // parts through which d/dz flows
  double value_estimate_path = 0.0;  // parts through which d/destimates flows (ROLE)
  Matrix grad_logits;           // (B, M) = d(value_logit_path)/dz
  Matrix grad_estimates;        // (B, M), ROLE only; rows align with ctx order
  std::vector<char> ll_mask;    // flat (B*M); 1 = rejected/corrected this batch
  int ll_selected_count = 0;
  bool ll_schedule_clamped = false;  // (t-1)*delta_rel/100 exceeded 1
};

// Marks the k = floor(clamp((t-1)*delta_rel/100, 0, 1) * n) largest losses;
// ties broken by lower flat index first.
std::vector<char> ll_select(const std::vector<double>& losses, int epoch, double delta_rel,
                            bool* schedule_clamped = nullptr);

// Per-(example, class) terms by label state, averaged over all M classes per
// example and then over the batch. Known negatives contribute b * L-; unknown
// terms carry the combinator weight a. For LL kinds, known negatives are
// excluded from rejection/correction candidacy.
LossOutput spml_loss(const LossSpec& spec, const BatchContext& ctx, const RoleState* role_state = nullptr);

// Same, but with the large-loss mask fixed up front (the mask is a constant
// of the step; gradient checks re-evaluate the value under the frozen mask).
LossOutput spml_loss_masked(const LossSpec& spec, const BatchContext& ctx,
                            const std::vector<char>& frozen_mask, const RoleState* role_state = nullptr);

// ROLE objective on a batch: positives contribute L+, unknowns the symmetric
// stop-gradient BCE pair against the estimates, plus
// lambda * mean_i (mean_c estimate - k/M)^2.
LossOutput role_step(const RoleState& role_state, const BatchContext& ctx, double lambda_role,
                     int expected_positives_k);

// Standard BCE on a fully labeled batch; throws if any label is Unknown.
LossOutput loss_bce_full(const BatchContext& ctx);

}  // namespace spml
