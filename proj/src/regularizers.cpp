#include "spml/regularizers.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "spml/rng.hpp"

namespace spml {

const char* reg_kind_name(RegKind k) {
  switch (k) {
    case RegKind::None: return "none";
    case RegKind::Rp: return "rp";
    case RegKind::Re: return "re";
  }
  return "?";
}

RegKind reg_kind_from_name(const std::string& name) {
  if (name == "none") return RegKind::None;
  if (name == "rp") return RegKind::Rp;
  if (name == "re") return RegKind::Re;
  throw std::invalid_argument("unknown regularizer kind: " + name);
}

PseudoTargetEntry& PseudoTargetStore::at(std::int64_t asset_id) {
  auto it = entries.find(asset_id);
  if (it == entries.end())
    throw std::invalid_argument("pseudo-target store has no entry for asset " + std::to_string(asset_id));
  return it->second;
}

const PseudoTargetEntry& PseudoTargetStore::at(std::int64_t asset_id) const {
  auto it = entries.find(asset_id);
  if (it == entries.end())
    throw std::invalid_argument("pseudo-target store has no entry for asset " + std::to_string(asset_id));
  return it->second;
}

PseudoTargetStore init_pseudo_targets(const std::vector<std::int64_t>& asset_ids, int num_classes,
                                      int embed_dim, std::uint64_t seed, double eps_ema,
                                      double eps_ema_embed) {
  if (eps_ema < 0.0 || eps_ema > 1.0) throw std::invalid_argument("eps_ema must be in [0, 1]");
  PseudoTargetStore store;
  store.eps_ema = eps_ema;
  store.eps_ema_embed = eps_ema_embed;
  Rng root(seed);
  for (std::int64_t id : asset_ids) {
    PseudoTargetEntry e;
    e.y_bar.resize(num_classes);
    Rng rng = root.child(static_cast<std::uint64_t>(id));
    for (int c = 0; c < num_classes; ++c) e.y_bar[c] = rng.uniform(0.4, 0.6);
    e.d_bar.assign(embed_dim, 0.0);
    store.entries.emplace(id, std::move(e));
  }
  return store;
}

RegTerm rp_term(const std::vector<double>& probs, const std::vector<double>& y_bar) {
  if (probs.size() != y_bar.size()) throw std::invalid_argument("rp_term: dimension mismatch");
  const double m = static_cast<double>(probs.size());
  RegTerm t;
  t.grad.resize(probs.size());
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double p = probs[c];
    const double y = y_bar[c];
    t.value += -(y * std::log(p) + (1.0 - y) * std::log1p(-p)) / m;
    t.grad[c] = (-y / p + (1.0 - y) / (1.0 - p)) / m;
  }
  return t;
}

std::vector<double> ema_update(const std::vector<double>& y_bar, const std::vector<double>& p,
                               double eps_ema) {
  if (y_bar.size() != p.size()) throw std::invalid_argument("ema_update: dimension mismatch");
  if (eps_ema < 0.0 || eps_ema > 1.0) throw std::invalid_argument("eps_ema must be in [0, 1]");
  std::vector<double> out(y_bar.size());
  for (std::size_t i = 0; i < y_bar.size(); ++i)
    out[i] = (1.0 - eps_ema) * y_bar[i] + eps_ema * p[i];
  return out;
}

RegTerm re_term(const std::vector<double>& embedding, const std::vector<double>& d_bar) {
  if (embedding.size() != d_bar.size()) throw std::invalid_argument("re_term: dimension mismatch");
  const double e = static_cast<double>(embedding.size());
  RegTerm t;
  t.grad.resize(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    const double diff = embedding[i] - d_bar[i];
    t.value += diff * diff / e;
    t.grad[i] = 2.0 * diff / e;
  }
  return t;
}

ValueGrad attach_regularizer(const ValueGrad& base, const ValueGrad& reg, double alpha_reg) {
  if (!reg.grad.empty() && !base.grad.empty() &&
      (base.grad.rows() != reg.grad.rows() || base.grad.cols() != reg.grad.cols()))
    throw std::invalid_argument("attach_regularizer: gradient shapes do not align");
  ValueGrad out;
  out.value = base.value + alpha_reg * reg.value;
  out.grad = base.grad.empty() ? Matrix(reg.grad.rows(), reg.grad.cols()) : base.grad;
  for (std::size_t i = 0; i < reg.grad.rows(); ++i)
    for (std::size_t j = 0; j < reg.grad.cols(); ++j)
      out.grad(i, j) += alpha_reg * reg.grad(i, j);
  return out;
}

void save_pseudo_targets(const PseudoTargetStore& store, const std::string& path) {
  nlohmann::ordered_json j;
  j["eps_ema"] = store.eps_ema;
  j["eps_ema_embed"] = store.eps_ema_embed;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& [id, e] : store.entries) {
    nlohmann::ordered_json je;
    je["asset_id"] = id;
    je["y_bar"] = e.y_bar;
    je["d_bar"] = e.d_bar;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pseudo-target store: " + path);
  out << j.dump() << '\n';
}

PseudoTargetStore load_pseudo_targets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open pseudo-target store: " + path);
  nlohmann::ordered_json j;
  in >> j;
  PseudoTargetStore store;
  store.eps_ema = j.at("eps_ema").get<double>();
  store.eps_ema_embed = j.at("eps_ema_embed").get<double>();
  for (const auto& je : j.at("entries")) {
    PseudoTargetEntry e;
    e.y_bar = je.at("y_bar").get<std::vector<double>>();
    e.d_bar = je.at("d_bar").get<std::vector<double>>();
    store.entries.emplace(je.at("asset_id").get<std::int64_t>(), std::move(e));
  }
  return store;
}

}  // namespace spml
