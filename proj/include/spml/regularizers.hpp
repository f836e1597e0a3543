#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spml/matrix.hpp"

namespace spml {

enum class RegKind { None, Rp, Re };

const char* reg_kind_name(RegKind k);
RegKind reg_kind_from_name(const std::string& name);

struct RegConfig {
  RegKind kind = RegKind::None;
  double alpha = 0.1;            // weight on the regularization term
  double eps_ema = 0.01;         // prediction EMA rate
  double eps_ema_embed = -1.0;   // embedding EMA rate; < 0 means "same as eps_ema"

  double embed_eps() const { return eps_ema_embed < 0.0 ? eps_ema : eps_ema_embed; }
};

// Per-asset EMA targets: prediction average y_bar and embedding average d_bar.
struct PseudoTargetEntry {
  std::vector<double> y_bar;  // length M, values in (0, 1)
  std::vector<double> d_bar;  // length E
};

struct PseudoTargetStore {
  std::map<std::int64_t, PseudoTargetEntry> entries;
  double eps_ema = 0.01;
  double eps_ema_embed = 0.01;

  PseudoTargetEntry& at(std::int64_t asset_id);
  const PseudoTargetEntry& at(std::int64_t asset_id) const;
};

// y_bar ~ U(0.4, 0.6) per entry, seeded per asset; d_bar = 0.
PseudoTargetStore init_pseudo_targets(const std::vector<std::int64_t>& asset_ids, int num_classes,
                                      int embed_dim, std::uint64_t seed, double eps_ema,
                                      double eps_ema_embed);

struct RegTerm {
  double value = 0.0;
  std::vector<double> grad;  // d(value)/d(p) for rp, d(value)/d(d) for re
};

// Soft-target BCE against the asset average; the target is a constant of the
// step (no gradient flows through the moving average).
RegTerm rp_term(const std::vector<double>& probs, const std::vector<double>& y_bar);

// y_bar' = (1 - eps) * y_bar + eps * p, elementwise.
std::vector<double> ema_update(const std::vector<double>& y_bar, const std::vector<double>& p,
                               double eps_ema);

// Mean squared distance to the asset's average embedding.
RegTerm re_term(const std::vector<double>& embedding, const std::vector<double>& d_bar);

struct ValueGrad {
  double value = 0.0;
  Matrix grad;
};

// combined = base + alpha_reg * reg; shapes must align.
ValueGrad attach_regularizer(const ValueGrad& base, const ValueGrad& reg, double alpha_reg);

void save_pseudo_targets(const PseudoTargetStore& store, const std::string& path);
PseudoTargetStore load_pseudo_targets(const std::string& path);

}  // namespace spml
