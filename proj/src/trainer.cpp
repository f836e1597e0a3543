#include "spml/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "spml/rng.hpp"

namespace spml {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(base_lr > 0.0)) throw std::invalid_argument("train: base_lr must be > 0");
  if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
  loss.validate();
}

namespace {

// EMA stores are keyed by asset; flat datasets fall back to per-clip keys.
std::int64_t reg_key(const ClipRecord& c) { return c.asset_id >= 0 ? c.asset_id : c.clip_id; }

struct BatchSlice {
  Matrix x;
  std::vector<std::int64_t> ids;
  std::vector<TriStateLabelVector> labels;
  std::vector<const ClipRecord*> clips;
};

BatchSlice gather_batch(const Dataset& ds, const std::vector<std::size_t>& order, std::size_t lo,
                        std::size_t hi) {
  BatchSlice b;
  const std::size_t n = hi - lo;
  b.x = Matrix(n, ds.meta.feature_dim);
  for (std::size_t r = 0; r < n; ++r) {
    const ClipRecord& clip = ds.clips[order[lo + r]];
    b.clips.push_back(&clip);
    b.ids.push_back(static_cast<std::int64_t>(order[lo + r]));
    b.labels.push_back(clip.labels);
    for (int d = 0; d < ds.meta.feature_dim; ++d) b.x(r, d) = clip.features[d];
  }
  return b;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val_set) {
  config.validate();
  if (train_set.clips.empty()) throw std::invalid_argument("train: empty training set");
  const int m = train_set.meta.num_classes;
  const int d = train_set.meta.feature_dim;
  const std::size_t n = train_set.clips.size();

  std::vector<int> dims;
  dims.push_back(d);
  for (int h : config.hidden_dims) dims.push_back(h);
  dims.push_back(m);

  TrainResult result;
  result.record.seed = config.seed;
  ModelParams params = mlp_init(dims, config.model_seed);
  params.lr_multipliers.back() = config.last_layer_lr_mult;
  AdamState opt = adam_init(params);

  const bool use_role = config.loss.kind == LossKind::ROLE;
  const bool use_llcp = config.loss.kind == LossKind::LLCp;
  const bool use_reg = config.reg.kind != RegKind::None;
  const int embed_dim = dims.size() >= 3 ? dims[dims.size() - 2] : d;

  Matrix role_m, role_v;  // Adam moments for the estimate table
  long role_steps = 0;
  if (use_role) {
    result.role_state = RoleState::init(n, m, Rng::mix_seed(config.seed, 0x726F6C65ULL));
    role_m = Matrix(n, m);
    role_v = Matrix(n, m);
    // observed positives pinned from the start
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < m; ++c)
        if (train_set.clips[i].labels[c] == LabelState::Positive) result.role_state.estimates(i, c) = 1.0;
  }
  if (use_reg) {
    std::vector<std::int64_t> keys;
    for (const ClipRecord& c : train_set.clips) keys.push_back(reg_key(c));
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    result.pseudo_targets = init_pseudo_targets(keys, m, embed_dim,
                                                Rng::mix_seed(config.seed, 0x656D61ULL),
                                                config.reg.eps_ema, config.reg.embed_eps());
  }

  const auto t0 = std::chrono::steady_clock::now();
  Rng shuffle_root(Rng::mix_seed(config.seed, 0x73687566ULL));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  double best_map = -1.0;
  int best_epoch = 0;
  ModelParams best_params = params;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng erng = shuffle_root.child(static_cast<std::uint64_t>(epoch));
    std::iota(order.begin(), order.end(), 0);
    erng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t lo = 0; lo < n; lo += config.batch_size, ++batch_index) {
      const std::size_t hi = std::min(n, lo + config.batch_size);
      const std::size_t bsz = hi - lo;
      BatchSlice batch = gather_batch(train_set, order, lo, hi);
      ForwardTrace trace = forward(params, batch.x);

      BatchContext ctx;
      ctx.epoch = epoch;
      ctx.example_ids = batch.ids;
      ctx.labels = std::move(batch.labels);
      ctx.probs = trace.probs;
      ctx.flip_store = use_llcp ? &result.flip_store : nullptr;

      LossOutput lo_out = spml_loss(config.loss, ctx, use_role ? &result.role_state : nullptr);

      double batch_value = lo_out.value;
      Matrix grad_z = lo_out.grad_logits;
      Matrix grad_embed;

      if (use_reg && config.reg.kind == RegKind::Rp) {
        // gradient first, against the pre-update targets
        double reg_value = 0.0;
        for (std::size_t r = 0; r < bsz; ++r) {
          const PseudoTargetEntry& entry = result.pseudo_targets.at(reg_key(*batch.clips[r]));
          std::vector<double> p(m);
          for (int c = 0; c < m; ++c) p[c] = ctx.probs(r, c);
          RegTerm rt = rp_term(p, entry.y_bar);
          reg_value += rt.value / static_cast<double>(bsz);
          for (int c = 0; c < m; ++c) {
            const double pc = p[c];
            grad_z(r, c) += config.reg.alpha * rt.grad[c] * pc * (1.0 - pc) / static_cast<double>(bsz);
          }
        }
        batch_value += config.reg.alpha * reg_value;
      } else if (use_reg && config.reg.kind == RegKind::Re) {
        grad_embed = Matrix(bsz, embed_dim);
        double reg_value = 0.0;
        for (std::size_t r = 0; r < bsz; ++r) {
          const PseudoTargetEntry& entry = result.pseudo_targets.at(reg_key(*batch.clips[r]));
          std::vector<double> emb(embed_dim);
          for (int e = 0; e < embed_dim; ++e) emb[e] = trace.embedding(r, e);
          RegTerm rt = re_term(emb, entry.d_bar);
          reg_value += rt.value / static_cast<double>(bsz);
          for (int e = 0; e < embed_dim; ++e)
            grad_embed(r, e) = config.reg.alpha * rt.grad[e] / static_cast<double>(bsz);
        }
        batch_value += config.reg.alpha * reg_value;
      }

      if (!std::isfinite(batch_value)) {
        const char* term = !std::isfinite(lo_out.value) ? loss_kind_name(config.loss.kind)
                                                        : reg_kind_name(config.reg.kind);
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index) + " (" + term +
                                 " term)");
      }

      ParamGrads grads = backward(params, trace, grad_z, grad_embed);
      adam_step(params, grads, opt, config.base_lr);

      if (use_role) {
        // joint update of the touched estimate rows, then pin and clamp
        ++role_steps;
        const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(role_steps));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(role_steps));
        for (std::size_t r = 0; r < bsz; ++r) {
          const std::size_t row = static_cast<std::size_t>(ctx.example_ids[r]);
          for (int c = 0; c < m; ++c) {
            const double g = lo_out.grad_estimates(r, c);
            double& mm = role_m(row, c);
            double& vv = role_v(row, c);
            mm = 0.9 * mm + 0.1 * g;
            vv = 0.999 * vv + 0.001 * g * g;
            double& value = result.role_state.estimates(row, c);
            value -= config.base_lr * (mm / bc1) / (std::sqrt(vv / bc2) + 1e-8);
            if (ctx.labels[r][c] == LabelState::Positive) {
              value = 1.0;
            } else {
              value = std::clamp(value, 1e-4, 1.0 - 1e-4);
            }
          }
        }
      }

      if (use_reg) {
        // EMA after the gradient, sequential in ascending clip order
        std::vector<std::size_t> upd(bsz);
        std::iota(upd.begin(), upd.end(), 0);
        std::sort(upd.begin(), upd.end(), [&](std::size_t x, std::size_t y) {
          const ClipRecord& cx = *batch.clips[x];
          const ClipRecord& cy = *batch.clips[y];
          if (cx.asset_id != cy.asset_id) return cx.asset_id < cy.asset_id;
          return cx.order_index < cy.order_index;
        });
        for (std::size_t r : upd) {
          PseudoTargetEntry& entry = result.pseudo_targets.at(reg_key(*batch.clips[r]));
          if (config.reg.kind == RegKind::Rp) {
            std::vector<double> p(m);
            for (int c = 0; c < m; ++c) p[c] = ctx.probs(r, c);
            entry.y_bar = ema_update(entry.y_bar, p, result.pseudo_targets.eps_ema);
          } else {
            std::vector<double> emb(embed_dim);
            for (int e = 0; e < embed_dim; ++e) emb[e] = trace.embedding(r, e);
            entry.d_bar = ema_update(entry.d_bar, emb, result.pseudo_targets.eps_ema_embed);
          }
        }
      }

      loss_sum += batch_value * static_cast<double>(bsz);
    }

    result.record.train_loss.push_back(loss_sum / static_cast<double>(n));
    std::optional<double> vmap;
    if (!val_set.clips.empty() && epoch % config.eval_every == 0) {
      EvalReport rep = evaluate(params, val_set, /*filter_fully_labeled=*/true);
      vmap = rep.map;
      if (rep.map > best_map) {
        best_map = rep.map;
        best_epoch = epoch;
        best_params = params;
      }
    }
    result.record.val_map.push_back(vmap);
  }

  result.record.best_epoch = best_epoch;
  result.record.best_val_map = best_map;
  result.final = std::move(params);
  result.best = best_epoch > 0 ? std::move(best_params) : result.final;
  result.record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

SweepResult sweep(const std::vector<TrainConfig>& configs, const Dataset& train_set,
                  const Dataset& val_set) {
  if (configs.empty()) throw std::invalid_argument("sweep: no configurations");
  SweepResult r;
  double best = -1.0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    TrainResult tr = train(configs[i], train_set, val_set);
    const double score = tr.record.best_epoch > 0 ? tr.record.best_val_map
                                                  : -1.0;
    r.records.push_back(tr.record);
    r.best_val_maps.push_back(score);
    if (score > best) {
      best = score;
      r.best_index = i;
    }
  }
  return r;
}

namespace {

struct Instance {
  BatchContext ctx;
  RoleState role;
  std::vector<std::vector<double>> y_bars;  // per example, for the R_P objective
};

Instance random_instance(const LossSpec& spec, Rng& rng) {
  Instance inst;
  const std::size_t batch = 1 + rng.uniform_below(4);
  const std::size_t m = 2 + rng.uniform_below(5);
  inst.ctx.epoch = 1 + static_cast<int>(rng.uniform_below(12));
  inst.ctx.probs = Matrix(batch, m);
  for (std::size_t i = 0; i < batch; ++i) {
    TriStateLabelVector labels(m, LabelState::Unknown);
    const std::size_t pos = rng.uniform_below(m);
    for (std::size_t c = 0; c < m; ++c) {
      if (c == pos) {
        labels.set(c, LabelState::Positive);
      } else if (spec.kind == LossKind::BCEFull) {
        labels.set(c, rng.uniform() < 0.5 ? LabelState::Positive : LabelState::Negative);
      } else {
        const double u = rng.uniform();
        if (u < 0.2)
          labels.set(c, LabelState::Negative);  // known negative (prior regimes)
        else if (u < 0.3)
          labels.set(c, LabelState::Positive);
      }
      inst.ctx.probs(i, c) = clamp_prob(1.0 / (1.0 + std::exp(-rng.uniform(-3.0, 3.0))));
    }
    inst.ctx.labels.push_back(labels);
    inst.ctx.example_ids.push_back(static_cast<std::int64_t>(i));
  }
  if (spec.kind == LossKind::ROLE) {
    inst.role.estimates = Matrix(batch, m);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t c = 0; c < m; ++c)
        inst.role.estimates(i, c) =
            inst.ctx.labels[i][c] == LabelState::Positive ? 1.0 : rng.uniform(0.1, 0.9);
  }
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<double> yb(m);
    for (std::size_t c = 0; c < m; ++c) yb[c] = rng.uniform(0.1, 0.9);
    inst.y_bars.push_back(std::move(yb));
  }
  return inst;
}

double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

void record_err(GradCheckReport& rep, double analytic, double numeric, double tolerance) {
  const double e = rel_err(analytic, numeric);
  rep.max_rel_err = std::max(rep.max_rel_err, e);
  ++rep.comparisons;
  if (e > tolerance) ++rep.failures;
}

}  // namespace

GradCheckReport gradcheck(const LossSpec& spec, const GradCheckOptions& opt) {
  GradCheckReport rep;
  Rng root(opt.seed);
  for (int trial = 0; trial < opt.trials; ++trial) {
    Rng rng = root.child(static_cast<std::uint64_t>(trial));
    Instance inst = random_instance(spec, rng);
    FlipStore flips;
    inst.ctx.flip_store = &flips;
    const std::size_t batch = inst.ctx.batch_size();
    const std::size_t m = inst.ctx.num_classes();
    RoleState* role = spec.kind == LossKind::ROLE ? &inst.role : nullptr;

    // logits recovered from the clamped probabilities
    Matrix logits(batch, m);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t c = 0; c < m; ++c)
        logits(i, c) = std::log(inst.ctx.probs(i, c) / (1.0 - inst.ctx.probs(i, c)));

    LossOutput base = spml_loss(spec, inst.ctx, role);
    const std::vector<char> mask = base.ll_mask;

    auto value_at = [&](const Matrix& z) {
      BatchContext ctx = inst.ctx;
      ctx.probs = Matrix(batch, m);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t c = 0; c < m; ++c)
          ctx.probs(i, c) = clamp_prob(1.0 / (1.0 + std::exp(-z(i, c))));
      LossOutput out = spml_loss_masked(spec, ctx, mask, role);
      double v = out.value_logit_path;
      if (opt.reg == RegKind::Rp) {
        for (std::size_t i = 0; i < batch; ++i) {
          std::vector<double> p(m);
          for (std::size_t c = 0; c < m; ++c) p[c] = ctx.probs(i, c);
          v += opt.reg_alpha * rp_term(p, inst.y_bars[i]).value / static_cast<double>(batch);
        }
      }
      return v;
    };

    Matrix analytic = base.grad_logits;
    if (opt.reg == RegKind::Rp) {
      for (std::size_t i = 0; i < batch; ++i) {
        std::vector<double> p(m);
        for (std::size_t c = 0; c < m; ++c) p[c] = inst.ctx.probs(i, c);
        RegTerm rt = rp_term(p, inst.y_bars[i]);
        for (std::size_t c = 0; c < m; ++c)
          analytic(i, c) +=
              opt.reg_alpha * rt.grad[c] * p[c] * (1.0 - p[c]) / static_cast<double>(batch);
      }
    }
    if (opt.corrupt_entry >= 0 && trial == 0) {
      analytic.data()[static_cast<std::size_t>(opt.corrupt_entry) % analytic.data().size()] +=
          opt.corrupt_delta;
    }

    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t c = 0; c < m; ++c) {
        Matrix zp = logits, zm = logits;
        zp(i, c) += opt.h;
        zm(i, c) -= opt.h;
        const double numeric = (value_at(zp) - value_at(zm)) / (2.0 * opt.h);
        record_err(rep, analytic(i, c), numeric, opt.tolerance);
      }
    }
  }
  return rep;
}

GradCheckReport gradcheck_role_estimates(double lambda_role, int expected_positives_k,
                                         const GradCheckOptions& opt) {
  GradCheckReport rep;
  LossSpec spec;
  spec.kind = LossKind::ROLE;
  spec.lambda_role = lambda_role;
  spec.expected_positives_k = expected_positives_k;
  Rng root(opt.seed);
  for (int trial = 0; trial < opt.trials; ++trial) {
    Rng rng = root.child(static_cast<std::uint64_t>(trial));
    Instance inst = random_instance(spec, rng);
    const std::size_t batch = inst.ctx.batch_size();
    const std::size_t m = inst.ctx.num_classes();

    LossOutput base = spml_loss(spec, inst.ctx, &inst.role);
    auto value_at = [&](const RoleState& state) {
      LossOutput out = spml_loss_masked(spec, inst.ctx, {}, &state);
      return out.value_estimate_path;
    };

    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t c = 0; c < m; ++c) {
        // pinned entries are constants, not degrees of freedom
        if (inst.ctx.labels[i][c] == LabelState::Positive) continue;
        RoleState sp = inst.role, sm = inst.role;
        sp.estimates(i, c) += opt.h;
        sm.estimates(i, c) -= opt.h;
        const double numeric = (value_at(sp) - value_at(sm)) / (2.0 * opt.h);
        record_err(rep, base.grad_estimates(i, c), numeric, opt.tolerance);
      }
    }
  }
  return rep;
}

GradCheckReport gradcheck_re(const GradCheckOptions& opt) {
  GradCheckReport rep;
  Rng root(opt.seed);
  for (int trial = 0; trial < opt.trials; ++trial) {
    Rng rng = root.child(static_cast<std::uint64_t>(trial));
    const std::size_t e = 2 + rng.uniform_below(7);
    std::vector<double> d(e), d_bar(e);
    for (std::size_t i = 0; i < e; ++i) {
      d[i] = rng.uniform(-2.0, 2.0);
      d_bar[i] = rng.uniform(-2.0, 2.0);
    }
    RegTerm base = re_term(d, d_bar);
    for (std::size_t i = 0; i < e; ++i) {
      std::vector<double> dp = d, dm = d;
      dp[i] += opt.h;
      dm[i] -= opt.h;
      const double numeric = (re_term(dp, d_bar).value - re_term(dm, d_bar).value) / (2.0 * opt.h);
      record_err(rep, base.grad[i], numeric, opt.tolerance);
    }
  }
  return rep;
}

GradCheckReport gradcheck_params(const LossSpec& spec, const GradCheckOptions& opt) {
  GradCheckReport rep;
  Rng root(opt.seed);
  for (int trial = 0; trial < opt.trials; ++trial) {
    Rng rng = root.child(static_cast<std::uint64_t>(trial));
    Instance inst = random_instance(spec, rng);
    FlipStore flips;
    inst.ctx.flip_store = &flips;
    const std::size_t batch = inst.ctx.batch_size();
    const std::size_t m = inst.ctx.num_classes();
    const int d = 3 + static_cast<int>(rng.uniform_below(3));
    const int h = 4 + static_cast<int>(rng.uniform_below(3));
    ModelParams params = mlp_init({d, h, static_cast<int>(m)}, rng.next_u64());
    Matrix x(batch, d);
    for (auto& v : x.data()) v = rng.uniform(-1.0, 1.0);

    RoleState* role = spec.kind == LossKind::ROLE ? &inst.role : nullptr;
    ForwardTrace trace0 = forward(params, x);
    BatchContext ctx0 = inst.ctx;
    ctx0.probs = trace0.probs;
    LossOutput base = spml_loss(spec, ctx0, role);
    const std::vector<char> mask = base.ll_mask;

    auto objective = [&](const ModelParams& p) {
      ForwardTrace tr = forward(p, x);
      BatchContext ctx = inst.ctx;
      ctx.probs = tr.probs;
      LossOutput out = spml_loss_masked(spec, ctx, mask, role);
      double v = out.value_logit_path;
      if (opt.reg == RegKind::Rp) {
        for (std::size_t i = 0; i < batch; ++i) {
          std::vector<double> probs(m);
          for (std::size_t c = 0; c < m; ++c) probs[c] = tr.probs(i, c);
          v += opt.reg_alpha * rp_term(probs, inst.y_bars[i]).value / static_cast<double>(batch);
        }
      }
      if (opt.reg == RegKind::Re) {
        for (std::size_t i = 0; i < batch; ++i) {
          std::vector<double> emb(h);
          for (int k = 0; k < h; ++k) emb[k] = tr.embedding(i, k);
          std::vector<double> zero(h, 0.0);
          v += opt.reg_alpha * re_term(emb, zero).value / static_cast<double>(batch);
        }
      }
      return v;
    };

    Matrix grad_z = base.grad_logits;
    Matrix grad_embed;
    if (opt.reg == RegKind::Rp) {
      for (std::size_t i = 0; i < batch; ++i) {
        std::vector<double> probs(m);
        for (std::size_t c = 0; c < m; ++c) probs[c] = trace0.probs(i, c);
        RegTerm rt = rp_term(probs, inst.y_bars[i]);
        for (std::size_t c = 0; c < m; ++c)
          grad_z(i, c) +=
              opt.reg_alpha * rt.grad[c] * probs[c] * (1.0 - probs[c]) / static_cast<double>(batch);
      }
    }
    if (opt.reg == RegKind::Re) {
      grad_embed = Matrix(batch, h);
      for (std::size_t i = 0; i < batch; ++i) {
        std::vector<double> emb(h);
        for (int k = 0; k < h; ++k) emb[k] = trace0.embedding(i, k);
        std::vector<double> zero(h, 0.0);
        RegTerm rt = re_term(emb, zero);
        for (int k = 0; k < h; ++k)
          grad_embed(i, k) = opt.reg_alpha * rt.grad[k] / static_cast<double>(batch);
      }
    }
    ParamGrads grads = backward(params, trace0, grad_z, grad_embed);

    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      auto check_array = [&](std::vector<double>& values, const std::vector<double>& analytic) {
        for (std::size_t i = 0; i < values.size(); ++i) {
          const double keep = values[i];
          values[i] = keep + opt.h;
          const double vp = objective(params);
          values[i] = keep - opt.h;
          const double vm = objective(params);
          values[i] = keep;
          record_err(rep, analytic[i], (vp - vm) / (2.0 * opt.h), opt.tolerance);
        }
      };
      check_array(params.layers[l].weights.data(), grads.d_weights[l].data());
      check_array(params.layers[l].biases, grads.d_biases[l]);
    }
  }
  return rep;
}

}  // namespace spml
