#include "spml/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spml/rng.hpp"

namespace spml {

namespace {
constexpr double kEstimateMin = 1e-4;

double clamp_estimate(double y) {
  if (y < kEstimateMin) return kEstimateMin;
  if (y > 1.0 - kEstimateMin) return 1.0 - kEstimateMin;
  return y;
}
}  // namespace

const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::BCEFull: return "bce-full";
    case LossKind::AN: return "an";
    case LossKind::WAN: return "wan";
    case LossKind::LS: return "ls";
    case LossKind::ROLE: return "role";
    case LossKind::EM: return "em";
    case LossKind::LLR: return "ll-r";
    case LossKind::LLCt: return "ll-ct";
    case LossKind::LLCp: return "ll-cp";
  }
  return "?";
}

LossKind loss_kind_from_name(const std::string& name) {
  for (LossKind k : {LossKind::BCEFull, LossKind::AN, LossKind::WAN, LossKind::LS, LossKind::ROLE,
                     LossKind::EM, LossKind::LLR, LossKind::LLCt, LossKind::LLCp})
    if (name == loss_kind_name(k)) return k;
  throw std::invalid_argument("unknown loss kind: " + name);
}

void LossSpec::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("loss: gamma must be in (0, 1]");
  if (!(eps_ls >= 0.0 && eps_ls < 1.0)) throw std::invalid_argument("loss: eps_ls must be in [0, 1)");
  if (!(alpha_em > 0.0)) throw std::invalid_argument("loss: alpha_em must be > 0");
  if (!(delta_rel >= 0.0)) throw std::invalid_argument("loss: delta_rel must be >= 0");
  if (!(lambda_role >= 0.0)) throw std::invalid_argument("loss: lambda_role must be >= 0");
  if (expected_positives_k < 1) throw std::invalid_argument("loss: expected_positives_k must be >= 1");
  if (a != 0 && a != 1) throw std::invalid_argument("loss: a must be 0 or 1");
  if (!(b >= 0.0)) throw std::invalid_argument("loss: b must be >= 0");
}

BceTerm term_bce_pos(double p) { return {-std::log(p), -1.0 / p}; }

BceTerm term_bce_neg(double p) { return {-std::log1p(-p), 1.0 / (1.0 - p)}; }

RoleState RoleState::init(std::size_t num_examples, int num_classes, std::uint64_t seed) {
  RoleState s;
  s.estimates = Matrix(num_examples, num_classes);
  Rng root(seed);
  for (std::size_t i = 0; i < num_examples; ++i) {
    Rng rng = root.child(i);
    for (int c = 0; c < num_classes; ++c) s.estimates(i, c) = rng.uniform(0.4, 0.6);
  }
  return s;
}

std::vector<char> ll_select(const std::vector<double>& losses, int epoch, double delta_rel,
                            bool* schedule_clamped) {
  if (epoch < 1) throw std::invalid_argument("ll_select: epoch must be >= 1");
  double fraction = static_cast<double>(epoch - 1) * delta_rel / 100.0;
  bool clamped = fraction > 1.0;
  if (schedule_clamped) *schedule_clamped = clamped;
  fraction = std::clamp(fraction, 0.0, 1.0);
  const std::size_t n = losses.size();
  const std::size_t k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  std::vector<char> mask(n, 0);
  if (k == 0) return mask;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (losses[x] != losses[y]) return losses[x] > losses[y];
    return x < y;
  });
  for (std::size_t i = 0; i < k; ++i) mask[order[i]] = 1;
  return mask;
}

namespace {

struct EntryTerm {
  double v_logit = 0.0;     // value through which d/dz flows
  double d_dp = 0.0;        // derivative of v_logit wrt p
  double v_est = 0.0;       // ROLE: value through which d/destimate flows
  double d_dest = 0.0;      // ROLE: derivative of v_est wrt the estimate
};

EntryTerm positive_term(const LossSpec& spec, double p) {
  EntryTerm t;
  if (spec.kind == LossKind::LS) {
    const BceTerm pos = term_bce_pos(p);
    const BceTerm neg = term_bce_neg(p);
    const double cp = (1.0 - spec.eps_ls) / 2.0;
    const double cn = spec.eps_ls / 2.0;
    t.v_logit = cp * pos.value + cn * neg.value;
    t.d_dp = cp * pos.d_dp + cn * neg.d_dp;
  } else {
    const BceTerm pos = term_bce_pos(p);
    t.v_logit = pos.value;
    t.d_dp = pos.d_dp;
  }
  return t;
}

EntryTerm negative_term(const LossSpec& spec, double p) {
  EntryTerm t;
  if (spec.kind == LossKind::BCEFull) {
    const BceTerm neg = term_bce_neg(p);
    t.v_logit = neg.value;
    t.d_dp = neg.d_dp;
  } else {
    const BceTerm neg = term_bce_neg(p);
    t.v_logit = spec.b * neg.value;
    t.d_dp = spec.b * neg.d_dp;
  }
  return t;
}

EntryTerm unknown_term(const LossSpec& spec, double p, bool selected, double estimate) {
  EntryTerm t;
  const double a = static_cast<double>(spec.a);
  switch (spec.kind) {
    case LossKind::BCEFull:
      throw std::invalid_argument("bce-full: Unknown label present in batch");
    case LossKind::AN: {
      const BceTerm neg = term_bce_neg(p);
      t.v_logit = a * neg.value;
      t.d_dp = a * neg.d_dp;
      break;
    }
    case LossKind::WAN: {
      const BceTerm neg = term_bce_neg(p);
      t.v_logit = a * spec.gamma * neg.value;
      t.d_dp = a * spec.gamma * neg.d_dp;
      break;
    }
    case LossKind::LS: {
      const BceTerm pos = term_bce_pos(p);
      const BceTerm neg = term_bce_neg(p);
      const double cn = (1.0 - spec.eps_ls) / 2.0;
      const double cp = spec.eps_ls / 2.0;
      t.v_logit = a * (cn * neg.value + cp * pos.value);
      t.d_dp = a * (cn * neg.d_dp + cp * pos.d_dp);
      break;
    }
    case LossKind::EM: {
      // -alpha * (p L+ + (1-p) L-) = -alpha * H(p)
      const BceTerm pos = term_bce_pos(p);
      const BceTerm neg = term_bce_neg(p);
      t.v_logit = a * -spec.alpha_em * (p * pos.value + (1.0 - p) * neg.value);
      t.d_dp = a * -spec.alpha_em * std::log((1.0 - p) / p);
      break;
    }
    case LossKind::LLR: {
      if (!selected) {
        const BceTerm neg = term_bce_neg(p);
        t.v_logit = a * neg.value;
        t.d_dp = a * neg.d_dp;
      }
      break;
    }
    case LossKind::LLCt:
    case LossKind::LLCp: {
      const BceTerm term = selected ? term_bce_pos(p) : term_bce_neg(p);
      t.v_logit = a * term.value;
      t.d_dp = a * term.d_dp;
      break;
    }
    case LossKind::ROLE: {
      const double y = clamp_estimate(estimate);
      // model side: BCE(p, stop(estimate))
      const double v_model = -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
      const double d_model = -y / p + (1.0 - y) / (1.0 - p);
      // estimate side: BCE(estimate, stop(p))
      const double v_est = -(p * std::log(y) + (1.0 - p) * std::log1p(-y));
      const double d_est = -p / y + (1.0 - p) / (1.0 - y);
      t.v_logit = a * 0.5 * v_model;
      t.d_dp = a * 0.5 * d_model;
      t.v_est = a * 0.5 * v_est;
      t.d_dest = a * 0.5 * d_est;
      break;
    }
  }
  return t;
}

bool is_ll_kind(LossKind k) {
  return k == LossKind::LLR || k == LossKind::LLCt || k == LossKind::LLCp;
}

}  // namespace

LossOutput spml_loss_masked(const LossSpec& spec, const BatchContext& ctx,
                            const std::vector<char>& frozen_mask, const RoleState* role_state) {
  spec.validate();
  const std::size_t batch = ctx.batch_size();
  const std::size_t m = ctx.num_classes();
  if (ctx.probs.rows() != batch) throw std::invalid_argument("spml_loss: probs/labels mismatch");
  if (ctx.epoch < 1) throw std::invalid_argument("spml_loss: epoch must be >= 1");
  if (spec.kind == LossKind::ROLE) {
    if (role_state == nullptr) throw std::invalid_argument("role: role_state is required");
    for (std::size_t i = 0; i < ctx.example_ids.size(); ++i) {
      const std::int64_t id = ctx.example_ids[i];
      if (id < 0 || static_cast<std::size_t>(id) >= role_state->estimates.rows())
        throw std::invalid_argument("role: no estimate row for example_id " + std::to_string(id));
    }
  }
  if (spec.kind == LossKind::LLCp && ctx.flip_store == nullptr)
    throw std::invalid_argument("ll-cp: flip_store is required");
  if (is_ll_kind(spec.kind) && frozen_mask.size() != batch * m)
    throw std::invalid_argument("spml_loss: mask size mismatch");

  LossOutput out;
  out.grad_logits = Matrix(batch, m);
  if (spec.kind == LossKind::ROLE) out.grad_estimates = Matrix(batch, m);
  out.ll_mask.assign(batch * m, 0);

  const double norm = 1.0 / (static_cast<double>(batch) * static_cast<double>(m));
  for (std::size_t i = 0; i < batch; ++i) {
    if (ctx.labels[i].size() != m) throw std::invalid_argument("spml_loss: label vector length != M");
    const std::int64_t id = i < ctx.example_ids.size() ? ctx.example_ids[i] : static_cast<std::int64_t>(i);
    for (std::size_t c = 0; c < m; ++c) {
      const double p = ctx.probs(i, c);
      LabelState state = ctx.labels[i][c];
      bool flipped = false;
      if (spec.kind == LossKind::LLCp && state == LabelState::Unknown &&
          ctx.flip_store->is_flipped(id, static_cast<int>(c))) {
        flipped = true;
      }
      EntryTerm t;
      if (state == LabelState::Positive || flipped) {
        t = positive_term(spec, p);
        if (flipped) {
          t.v_logit *= static_cast<double>(spec.a);
          t.d_dp *= static_cast<double>(spec.a);
        }
      } else if (state == LabelState::Negative) {
        t = negative_term(spec, p);
      } else {
        const bool selected = is_ll_kind(spec.kind) && frozen_mask[i * m + c] != 0;
        if (selected) {
          out.ll_mask[i * m + c] = 1;
          ++out.ll_selected_count;
          if (spec.kind == LossKind::LLCp) ctx.flip_store->flip(id, static_cast<int>(c));
        }
        const double estimate =
            spec.kind == LossKind::ROLE ? role_state->estimates(static_cast<std::size_t>(id), c) : 0.0;
        t = unknown_term(spec, p, selected, estimate);
      }
      out.value_logit_path += norm * t.v_logit;
      out.grad_logits(i, c) = norm * t.d_dp * p * (1.0 - p);
      if (spec.kind == LossKind::ROLE) {
        out.value_estimate_path += norm * t.v_est;
        out.grad_estimates(i, c) = norm * t.d_dest;
      }
    }
  }

  if (spec.kind == LossKind::ROLE) {
    // expected-positive regularizer on the estimate rows of this batch
    const double target = static_cast<double>(spec.expected_positives_k) / static_cast<double>(m);
    for (std::size_t i = 0; i < batch; ++i) {
      const std::int64_t id = i < ctx.example_ids.size() ? ctx.example_ids[i] : static_cast<std::int64_t>(i);
      double mean = 0.0;
      for (std::size_t c = 0; c < m; ++c) mean += role_state->estimates(static_cast<std::size_t>(id), c);
      mean /= static_cast<double>(m);
      const double diff = mean - target;
      out.value_estimate_path += spec.lambda_role * diff * diff / static_cast<double>(batch);
      const double d = spec.lambda_role * 2.0 * diff /
                       (static_cast<double>(m) * static_cast<double>(batch));
      for (std::size_t c = 0; c < m; ++c) {
        // pinned entries (observed positives) take no estimate gradient
        if (ctx.labels[i][c] == LabelState::Positive) continue;
        out.grad_estimates(i, c) += d;
      }
    }
  }

  out.value = out.value_logit_path + out.value_estimate_path;
  return out;
}

LossOutput spml_loss(const LossSpec& spec, const BatchContext& ctx, const RoleState* role_state) {
  spec.validate();
  const std::size_t batch = ctx.batch_size();
  const std::size_t m = ctx.num_classes();
  std::vector<char> mask;
  bool clamped = false;
  if (is_ll_kind(spec.kind)) {
    // candidates: Unknown entries not yet flipped; known labels are excluded
    std::vector<std::size_t> candidate_pos;
    std::vector<double> candidate_losses;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::int64_t id = i < ctx.example_ids.size() ? ctx.example_ids[i] : static_cast<std::int64_t>(i);
      for (std::size_t c = 0; c < m; ++c) {
        if (ctx.labels[i][c] != LabelState::Unknown) continue;
        if (spec.kind == LossKind::LLCp && ctx.flip_store != nullptr &&
            ctx.flip_store->is_flipped(id, static_cast<int>(c)))
          continue;
        candidate_pos.push_back(i * m + c);
        candidate_losses.push_back(term_bce_neg(ctx.probs(i, c)).value);
      }
    }
    std::vector<char> selected = ll_select(candidate_losses, ctx.epoch, spec.delta_rel, &clamped);
    mask.assign(batch * m, 0);
    for (std::size_t k = 0; k < candidate_pos.size(); ++k)
      if (selected[k]) mask[candidate_pos[k]] = 1;
  }
  LossOutput out = spml_loss_masked(spec, ctx, mask, role_state);
  out.ll_schedule_clamped = clamped;
  return out;
}

LossOutput role_step(const RoleState& role_state, const BatchContext& ctx, double lambda_role,
                     int expected_positives_k) {
  LossSpec spec;
  spec.kind = LossKind::ROLE;
  spec.lambda_role = lambda_role;
  spec.expected_positives_k = expected_positives_k;
  return spml_loss(spec, ctx, &role_state);
}

LossOutput loss_bce_full(const BatchContext& ctx) {
  LossSpec spec;
  spec.kind = LossKind::BCEFull;
  return spml_loss(spec, ctx);
}

LossSpec loss_preset(const std::string& name) {
  LossSpec s;
  const auto set = [&s](LossKind k, double gamma, double eps, double lambda, double alpha,
                        double delta, int a, double b) {
    s.kind = k;
    s.gamma = gamma;
    s.eps_ls = eps;
    s.lambda_role = lambda;
    s.alpha_em = alpha;
    s.delta_rel = delta;
    s.a = a;
    s.b = b;
  };
  // target-only presets
  if (name == "coco-targetonly-bce-full") set(LossKind::BCEFull, 1, 0.1, 1, 0.1, 0, 1, 1);
  else if (name == "coco-targetonly-an") set(LossKind::AN, 1, 0.1, 1, 0.1, 0, 1, 1);
  else if (name == "coco-targetonly-wan") set(LossKind::WAN, 1.0 / 79.0, 0.1, 1, 0.1, 0, 1, 1);
  else if (name == "coco-targetonly-ls") set(LossKind::LS, 1, 0.1, 1, 0.1, 0, 1, 1);
  else if (name == "coco-targetonly-role") set(LossKind::ROLE, 1, 0.1, 1.0, 0.1, 0, 1, 1);
  else if (name == "coco-targetonly-em") set(LossKind::EM, 1, 0.1, 1, 0.1, 0, 1, 1);
  else if (name == "coco-targetonly-ll-r") set(LossKind::LLR, 1, 0.1, 1, 0.1, 0.4, 1, 1);
  else if (name == "coco-targetonly-ll-ct") set(LossKind::LLCt, 1, 0.1, 1, 0.1, 0.2, 1, 1);
  else if (name == "coco-targetonly-ll-cp") set(LossKind::LLCp, 1, 0.1, 1, 0.1, 0.2, 1, 1);
  else if (name == "l48-targetonly-bce-full") set(LossKind::BCEFull, 1, 0.1, 1, 0.2, 0, 1, 1);
  else if (name == "l48-targetonly-an") set(LossKind::AN, 1, 0.1, 1, 0.2, 0, 1, 1);
  else if (name == "l48-targetonly-wan") set(LossKind::WAN, 1.0 / 99.0, 0.1, 1, 0.2, 0, 1, 1);
  else if (name == "l48-targetonly-ls") set(LossKind::LS, 1, 0.1, 1, 0.2, 0, 1, 1);
  else if (name == "l48-targetonly-role") set(LossKind::ROLE, 1, 0.1, 1.0, 0.2, 0, 1, 1);
  else if (name == "l48-targetonly-em") set(LossKind::EM, 1, 0.1, 1, 0.2, 0, 1, 1);
  else if (name == "l48-targetonly-ll-r") set(LossKind::LLR, 1, 0.1, 1, 0.2, 0.1, 1, 1);
  else if (name == "l48-targetonly-ll-ct") set(LossKind::LLCt, 1, 0.1, 1, 0.2, 0.1, 1, 1);
  else if (name == "l48-targetonly-ll-cp") set(LossKind::LLCp, 1, 0.1, 1, 0.2, 0.1, 1, 1);
  // geo / checklist presets (a, b tuned per method and dataset)
  else if (name == "coco-geo-wan") set(LossKind::WAN, 0.1, 0.1, 1, 0.1, 0, 0, 0.01);
  else if (name == "coco-geo-ls") set(LossKind::LS, 1, 0.2, 1, 0.1, 0, 0, 0.05);
  else if (name == "coco-geo-role") set(LossKind::ROLE, 1, 0.1, 0.1, 0.1, 0, 0, 0.01);
  else if (name == "coco-geo-em") set(LossKind::EM, 1, 0.1, 1, 0.1, 0, 1, 0.01);
  else if (name == "coco-geo-ll-r") set(LossKind::LLR, 1, 0.1, 1, 0.1, 0.4, 1, 1);
  else if (name == "coco-geo-ll-ct") set(LossKind::LLCt, 1, 0.1, 1, 0.1, 0.2, 1, 1);
  else if (name == "coco-geo-ll-cp") set(LossKind::LLCp, 1, 0.1, 1, 0.1, 0.2, 1, 1);
  else if (name == "coco-checklist-wan") set(LossKind::WAN, 0.1, 0.1, 1, 0.1, 0, 1, 0.01);
  else if (name == "coco-checklist-ls") set(LossKind::LS, 1, 0.1, 1, 0.1, 0, 1, 0.5);
  else if (name == "coco-checklist-role") set(LossKind::ROLE, 1, 0.1, 1.0, 0.1, 0, 1, 1);
  else if (name == "coco-checklist-em") set(LossKind::EM, 1, 0.1, 1, 0.1, 0, 1, 0.02);
  else if (name == "coco-checklist-ll-r") set(LossKind::LLR, 1, 0.1, 1, 0.1, 0.4, 1, 1);
  else if (name == "coco-checklist-ll-ct") set(LossKind::LLCt, 1, 0.1, 1, 0.1, 0.2, 1, 1);
  else if (name == "coco-checklist-ll-cp") set(LossKind::LLCp, 1, 0.1, 1, 0.1, 0.2, 1, 1);
  else if (name == "l48-geo-wan") set(LossKind::WAN, 0.05, 0.1, 1, 0.1, 0, 1, 0.5);
  else if (name == "l48-geo-ls") set(LossKind::LS, 1, 0.1, 1, 0.1, 0, 1, 0.2);
  else if (name == "l48-geo-role") set(LossKind::ROLE, 1, 0.1, 0.5, 0.1, 0, 0, 0.05);
  else if (name == "l48-geo-em") set(LossKind::EM, 1, 0.1, 1, 0.1, 0, 0, 0.01);
  else if (name == "l48-geo-ll-r") set(LossKind::LLR, 1, 0.1, 1, 0.1, 0.1, 1, 1);
  else if (name == "l48-geo-ll-ct") set(LossKind::LLCt, 1, 0.1, 1, 0.1, 0.1, 1, 1);
  else if (name == "l48-geo-ll-cp") set(LossKind::LLCp, 1, 0.1, 1, 0.1, 0.1, 1, 1);
  else if (name == "l48-checklist-wan") set(LossKind::WAN, 1.0 / 99.0, 0.1, 1, 0.1, 0, 0, 0.5);
  else if (name == "l48-checklist-ls") set(LossKind::LS, 1, 0.1, 1, 0.1, 0, 1, 1);
  else if (name == "l48-checklist-role") set(LossKind::ROLE, 1, 0.1, 2.0, 0.1, 0, 0, 0.05);
  else if (name == "l48-checklist-em") set(LossKind::EM, 1, 0.1, 1, 0.02, 0, 1, 0.01);
  else if (name == "l48-checklist-ll-r") set(LossKind::LLR, 1, 0.1, 1, 0.1, 0.1, 1, 1);
  else if (name == "l48-checklist-ll-ct") set(LossKind::LLCt, 1, 0.1, 1, 0.1, 0.1, 1, 1);
  else if (name == "l48-checklist-ll-cp") set(LossKind::LLCp, 1, 0.1, 1, 0.1, 0.1, 1, 1);
  else throw std::invalid_argument("unknown loss preset: " + name);
  return s;
}

std::vector<std::string> loss_preset_names() {
  std::vector<std::string> names;
  const char* kinds[] = {"bce-full", "an", "wan", "ls", "role", "em", "ll-r", "ll-ct", "ll-cp"};
  for (const char* ds : {"coco", "l48"})
    for (const char* kind : kinds)
      names.push_back(std::string(ds) + "-targetonly-" + kind);
  const char* spml_kinds[] = {"wan", "ls", "role", "em", "ll-r", "ll-ct", "ll-cp"};
  for (const char* ds : {"coco", "l48"})
    for (const char* regime : {"geo", "checklist"})
      for (const char* kind : spml_kinds)
        names.push_back(std::string(ds) + "-" + regime + "-" + kind);
  return names;
}

}  // namespace spml
