#include "spml/regimes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "spml/io_util.hpp"
#include "spml/matrix.hpp"
#include "spml/rng.hpp"

namespace spml {

const char* regime_kind_name(RegimeKind k) {
  switch (k) {
    case RegimeKind::Full: return "full";
    case RegimeKind::TargetOnly: return "target-only";
    case RegimeKind::Geo: return "geo";
    case RegimeKind::Checklist: return "checklist";
  }
  return "?";
}

RegimeKind regime_kind_from_name(const std::string& name) {
  if (name == "full") return RegimeKind::Full;
  if (name == "target-only") return RegimeKind::TargetOnly;
  if (name == "geo") return RegimeKind::Geo;
  if (name == "checklist") return RegimeKind::Checklist;
  throw std::invalid_argument("unknown regime: " + name);
}

void GeneratorConfig::validate() const {
  if (num_classes < 2) throw std::invalid_argument("generator: M must be >= 2");
  if (num_assets < 1) throw std::invalid_argument("generator: A must be >= 1");
  if (clips_per_asset_min < 1 || clips_per_asset_max < clips_per_asset_min)
    throw std::invalid_argument("generator: bad clips_per_asset range");
  if (feature_dim < 1) throw std::invalid_argument("generator: D must be >= 1");
  if (p_bg < 0.0 || p_bg > 1.0) throw std::invalid_argument("generator: p_bg must be in [0, 1]");
  if (confusable_pairs < 0 || confusable_pairs > num_classes / 2)
    throw std::invalid_argument("generator: confusable_pairs must be <= M/2");
  if (confusable_offset < 0.0)
    throw std::invalid_argument("generator: confusable_offset must be >= 0");
  if (regions < 1) throw std::invalid_argument("generator: regions must be >= 1");
  if (species_per_region < 1 || species_per_region > num_classes)
    throw std::invalid_argument("generator: species_per_region must be in [1, M]");
  if (community_size < 0) throw std::invalid_argument("generator: community_size must be >= 0");
  if (checklist_extra < 0.0) throw std::invalid_argument("generator: checklist_extra must be >= 0");
  if (noise_sigma < 0.0) throw std::invalid_argument("generator: noise_sigma must be >= 0");
  if (!(amp_min > 0.0 && amp_min <= 1.0))
    throw std::invalid_argument("generator: amp_min must be in (0, 1]");
}

Dataset make_target_only(const Dataset& ds, std::uint64_t seed) {
  Dataset out;
  out.meta = ds.meta;
  Rng root(seed);
  if (!ds.flat()) {
    out.assets = ds.assets;
    std::map<std::int64_t, int> target_of;
    for (const AssetRecord& a : ds.assets) target_of[a.asset_id] = a.target_class;
    std::set<std::int64_t> kept;
    for (const ClipRecord& c : ds.clips) {
      const int target = target_of.at(c.asset_id);
      if (c.labels[target] != LabelState::Positive) continue;  // not in T_k
      ClipRecord nc = c;
      nc.labels = TriStateLabelVector(ds.meta.num_classes, LabelState::Unknown);
      nc.labels.set(target, LabelState::Positive);
      nc.fully_labeled = false;
      kept.insert(nc.clip_id);
      out.clips.push_back(std::move(nc));
    }
    for (AssetRecord& a : out.assets) {
      std::vector<std::int64_t> ids;
      for (std::int64_t cid : a.clip_ids)
        if (kept.count(cid)) ids.push_back(cid);
      a.clip_ids = std::move(ids);
    }
  } else {
    for (const ClipRecord& c : ds.clips) {
      const std::vector<std::size_t> pos = c.labels.positives();
      if (pos.empty()) continue;  // zero-positive images are removed
      std::size_t chosen = pos[0];
      if (pos.size() > 1) {
        Rng rng = root.child(static_cast<std::uint64_t>(c.clip_id));
        chosen = pos[rng.uniform_below(pos.size())];
      }
      ClipRecord nc = c;
      nc.labels = TriStateLabelVector(ds.meta.num_classes, LabelState::Unknown);
      nc.labels.set(chosen, LabelState::Positive);
      nc.fully_labeled = false;
      out.clips.push_back(std::move(nc));
    }
  }
  return out;
}

namespace {

Dataset apply_mask_negatives(const Dataset& ds, bool use_checklist) {
  if (ds.flat())
    throw std::invalid_argument("mask priors require an asset-structured dataset");
  Dataset out;
  out.meta = ds.meta;
  out.assets = ds.assets;
  std::map<std::int64_t, const AssetRecord*> asset_of;
  for (const AssetRecord& a : ds.assets) asset_of[a.asset_id] = &a;
  const int m = ds.meta.num_classes;
  for (const ClipRecord& c : ds.clips) {
    const AssetRecord& a = *asset_of.at(c.asset_id);
    if (!a.possible_mask[a.target_class])
      throw std::invalid_argument("asset " + std::to_string(a.asset_id) +
                                  ": possible_mask is false at the target class");
    if (use_checklist && !(a.observed_mask[a.target_class] && a.possible_mask[a.target_class]))
      throw std::invalid_argument("asset " + std::to_string(a.asset_id) +
                                  ": checklist excludes the target class");
    ClipRecord nc = c;
    for (int cls = 0; cls < m; ++cls) {
      const bool allowed =
          use_checklist ? (a.observed_mask[cls] && a.possible_mask[cls]) : a.possible_mask[cls];
      if (!allowed && nc.labels[cls] == LabelState::Unknown)
        nc.labels.set(cls, LabelState::Negative);
    }
    nc.fully_labeled = nc.labels.fully_labeled();
    out.clips.push_back(std::move(nc));
  }
  return out;
}

// Ridge regression with an unpenalized intercept, solved in closed form via
// Cholesky on the centered normal equations.
struct RidgeModel {
  Matrix weights;               // (K, M)
  std::vector<double> intercept;  // (M)
  std::vector<double> x_mean;     // (K)
};

void cholesky_solve_inplace(Matrix& a, Matrix& b) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
    if (diag <= 0.0) throw std::runtime_error("ridge system is not positive definite");
    diag = std::sqrt(diag);
    a(j, j) = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
      a(i, j) = v / diag;
    }
  }
  // forward then backward substitution on each rhs column
  for (std::size_t col = 0; col < b.cols(); ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = b(i, col);
      for (std::size_t k = 0; k < i; ++k) v -= a(i, k) * b(k, col);
      b(i, col) = v / a(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = b(i, col);
      for (std::size_t k = i + 1; k < n; ++k) v -= a(k, i) * b(k, col);
      b(i, col) = v / a(i, i);
    }
  }
}

RidgeModel fit_ridge(const Matrix& x, const Matrix& y, double lambda) {
  const std::size_t n = x.rows(), k = x.cols(), m = y.cols();
  RidgeModel model;
  model.x_mean.assign(k, 0.0);
  std::vector<double> y_mean(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) model.x_mean[j] += x(i, j);
    for (std::size_t c = 0; c < m; ++c) y_mean[c] += y(i, c);
  }
  for (double& v : model.x_mean) v /= static_cast<double>(n);
  for (double& v : y_mean) v /= static_cast<double>(n);

  Matrix xc(n, k), yc(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) xc(i, j) = x(i, j) - model.x_mean[j];
    for (std::size_t c = 0; c < m; ++c) yc(i, c) = y(i, c) - y_mean[c];
  }
  Matrix gram = matmul_at_b(xc, xc);
  for (std::size_t j = 0; j < k; ++j) gram(j, j) += lambda;
  Matrix rhs = matmul_at_b(xc, yc);
  cholesky_solve_inplace(gram, rhs);
  model.weights = std::move(rhs);
  model.intercept.assign(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    double dot = 0.0;
    for (std::size_t j = 0; j < k; ++j) dot += model.x_mean[j] * model.weights(j, c);
    model.intercept[c] = y_mean[c] - dot;
  }
  return model;
}

}  // namespace

Dataset apply_geo_prior(const Dataset& ds) { return apply_mask_negatives(ds, false); }

Dataset apply_checklist_prior(const Dataset& ds) { return apply_mask_negatives(ds, true); }

ContextProvider random_projection_provider(int feature_dim, int context_dim, std::uint64_t seed) {
  // fixed projection matrix, shared across calls
  auto proj = std::make_shared<Matrix>(context_dim, feature_dim);
  Rng rng(Rng::mix_seed(seed, 0x6374785F70726F6AULL));
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (int i = 0; i < context_dim; ++i)
    for (int j = 0; j < feature_dim; ++j) (*proj)(i, j) = rng.gaussian() * scale;
  return [proj, context_dim](const ClipRecord& clip) {
    std::vector<double> ctx(context_dim, 0.0);
    for (int i = 0; i < context_dim; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < clip.features.size(); ++j) s += (*proj)(i, j) * clip.features[j];
      ctx[i] = s;
    }
    return ctx;
  };
}

Dataset simulate_context_priors(const Dataset& flat_target_only, const Dataset& full_truth,
                                const PriorSimConfig& cfg, const ContextProvider& provider) {
  if (!(cfg.fit_fraction > 0.0 && cfg.fit_fraction <= 1.0))
    throw std::invalid_argument("prior sim: fit_fraction must be in (0, 1]");
  if (!(cfg.target_known_negative_fraction > 0.0 && cfg.target_known_negative_fraction < 1.0))
    throw std::invalid_argument("prior sim: target fraction must be in (0, 1)");
  const Dataset& ds = flat_target_only;
  if (!ds.flat()) throw std::invalid_argument("prior sim: input must be a flat dataset");
  const int m = ds.meta.num_classes;
  const std::size_t n = ds.clips.size();
  if (n == 0) throw std::invalid_argument("prior sim: empty dataset");

  ContextProvider ctx_of = provider;
  if (!ctx_of)
    ctx_of = random_projection_provider(ds.meta.feature_dim, cfg.context_dim, cfg.seed);

  Matrix contexts(n, 0);
  {
    std::vector<double> first = ctx_of(ds.clips[0]);
    contexts = Matrix(n, first.size());
    for (std::size_t j = 0; j < first.size(); ++j) contexts(0, j) = first[j];
    for (std::size_t i = 1; i < n; ++i) {
      std::vector<double> v = ctx_of(ds.clips[i]);
      if (v.size() != contexts.cols())
        throw std::invalid_argument("context provider returned inconsistent dimensions");
      for (std::size_t j = 0; j < v.size(); ++j) contexts(i, j) = v[j];
    }
  }

  // hidden truth per clip id
  std::map<std::int64_t, const TriStateLabelVector*> truth;
  for (const ClipRecord& c : full_truth.clips) truth[c.clip_id] = &c.labels;
  for (const ClipRecord& c : ds.clips)
    if (truth.find(c.clip_id) == truth.end())
      throw std::invalid_argument("prior sim: clip " + std::to_string(c.clip_id) +
                                  " missing from the full-label dataset");

  // seeded fit subset
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::mix_seed(cfg.seed, 0x666974ULL));
  rng.shuffle(order);
  std::size_t n_fit = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                   std::floor(cfg.fit_fraction * static_cast<double>(n))));
  Matrix x_fit(n_fit, contexts.cols()), y_fit(n_fit, m);
  for (std::size_t r = 0; r < n_fit; ++r) {
    const std::size_t i = order[r];
    for (std::size_t j = 0; j < contexts.cols(); ++j) x_fit(r, j) = contexts(i, j);
    const TriStateLabelVector& t = *truth.at(ds.clips[i].clip_id);
    for (int c = 0; c < m; ++c) y_fit(r, c) = t[c] == LabelState::Positive ? 1.0 : 0.0;
  }
  RidgeModel model = fit_ridge(x_fit, y_fit, cfg.ridge_lambda);

  // score every (example, class) pair
  Matrix scores(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < m; ++c) {
      double s = model.intercept[c];
      for (std::size_t j = 0; j < contexts.cols(); ++j) s += contexts(i, j) * model.weights(j, c);
      scores(i, c) = s;
    }

  // Threshold the lowest-scoring unknowns. Entries whose hidden truth is
  // Positive never become Negative (they are reverted), so the negative
  // budget is spent on truth-negative unknowns only, lowest score first,
  // ties by flat index.
  struct Candidate {
    double score;
    std::size_t flat;
  };
  std::vector<Candidate> eligible;
  for (std::size_t i = 0; i < n; ++i) {
    const TriStateLabelVector& t = *truth.at(ds.clips[i].clip_id);
    for (int c = 0; c < m; ++c) {
      if (ds.clips[i].labels[c] != LabelState::Unknown) continue;
      if (t[c] == LabelState::Positive) continue;
      eligible.push_back({scores(i, c), i * static_cast<std::size_t>(m) + c});
    }
  }
  const double total = static_cast<double>(n) * static_cast<double>(m);
  const std::size_t want =
      static_cast<std::size_t>(std::llround(cfg.target_known_negative_fraction * total));
  if (want > eligible.size())
    throw std::runtime_error(
        "prior sim: target fraction unreachable; only " + std::to_string(eligible.size()) +
        " eligible entries for " + std::to_string(want) + " negatives");
  std::sort(eligible.begin(), eligible.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.flat < b.flat;
  });

  Dataset out;
  out.meta = ds.meta;
  out.clips = ds.clips;
  for (std::size_t k = 0; k < want; ++k) {
    const std::size_t flat = eligible[k].flat;
    out.clips[flat / m].labels.set(flat % m, LabelState::Negative);
  }
  for (ClipRecord& c : out.clips) c.fully_labeled = c.labels.fully_labeled();
  const double achieved = static_cast<double>(want) / total;
  if (std::abs(achieved - cfg.target_known_negative_fraction) > 0.02)
    throw std::runtime_error("prior sim: achieved fraction " + format_double(achieved) +
                             " misses the target by more than 0.02");
  return out;
}

SyntheticBenchmark gen_synthetic_assets(const GeneratorConfig& cfg) {
  cfg.validate();
  const int m = cfg.num_classes;
  Rng root(cfg.seed);

  // home regions round-robin; confusable pair members land in adjacent
  // regions, mirroring vocally similar but geographically separated species
  std::vector<int> home_region(m);
  for (int c = 0; c < m; ++c) home_region[c] = c % cfg.regions;

  // region species sets: home species plus seeded padding up to the quota
  std::vector<std::vector<int>> region_species(cfg.regions);
  {
    Rng rng = root.child(0x7265ULL);  // region padding stream
    for (int r = 0; r < cfg.regions; ++r) {
      std::set<int> members;
      for (int c = 0; c < m; ++c)
        if (home_region[c] == r) members.insert(c);
      std::vector<int> others;
      for (int c = 0; c < m; ++c)
        if (!members.count(c)) others.push_back(c);
      rng.shuffle(others);
      for (int c : others) {
        if (static_cast<int>(members.size()) >= cfg.species_per_region) break;
        members.insert(c);
      }
      region_species[r].assign(members.begin(), members.end());
      if (region_species[r].empty())
        throw std::runtime_error("generator: region " + std::to_string(r) + " has zero species");
    }
  }

  // prototypes; confusable pairs (2i, 2i+1) share a base plus a small offset
  Matrix prototypes(m, cfg.feature_dim);
  {
    Rng rng = root.child(0x70726FULL);  // prototype stream
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.feature_dim));
    for (int c = 0; c < m; ++c)
      for (int d = 0; d < cfg.feature_dim; ++d) prototypes(c, d) = rng.gaussian() * scale;
    for (int pair = 0; pair < cfg.confusable_pairs; ++pair) {
      const int base = 2 * pair, twin = 2 * pair + 1;
      for (int d = 0; d < cfg.feature_dim; ++d)
        prototypes(twin, d) = prototypes(base, d) + rng.gaussian() * scale * cfg.confusable_offset;
    }
  }

  SyntheticBenchmark bench;
  Dataset& ds = bench.full;
  ds.meta.num_classes = m;
  ds.meta.feature_dim = cfg.feature_dim;
  for (int c = 0; c < m; ++c) ds.meta.class_names.push_back("species_" + std::to_string(c));

  std::int64_t next_clip_id = 0;
  for (int ai = 0; ai < cfg.num_assets; ++ai) {
    Rng rng = root.child(0x61737365ULL + static_cast<std::uint64_t>(ai));
    // balanced target assignment: the real benchmark fixes the asset count
    // per species, and its target-only label distribution is uniform
    const int target = ai % m;
    const int region = home_region[target];
    const std::vector<int>& pool = region_species[region];

    // background community: region species other than the target
    std::vector<int> candidates;
    for (int c : pool)
      if (c != target) candidates.push_back(c);
    rng.shuffle(candidates);
    const int community_n = std::min<int>(cfg.community_size, candidates.size());
    std::vector<int> community(candidates.begin(), candidates.begin() + community_n);
    std::sort(community.begin(), community.end());
    bench.communities[ai] = community;

    const int n_clips =
        cfg.clips_per_asset_min +
        static_cast<int>(rng.uniform_below(cfg.clips_per_asset_max - cfg.clips_per_asset_min + 1));

    AssetRecord asset;
    asset.asset_id = ai;
    asset.target_class = target;
    asset.possible_mask.assign(m, false);
    for (int c : pool) asset.possible_mask[c] = true;
    asset.observed_mask.assign(m, false);

    std::set<int> present_in_asset;
    present_in_asset.insert(target);
    for (int k = 0; k < n_clips; ++k) {
      ClipRecord clip;
      clip.clip_id = next_clip_id++;
      clip.asset_id = ai;
      clip.order_index = k;
      std::vector<int> present;
      present.push_back(target);
      for (int c : community)
        if (rng.uniform() < cfg.p_bg) present.push_back(c);
      clip.features.assign(cfg.feature_dim, 0.0);
      for (int c : present) {
        present_in_asset.insert(c);
        const double amp = cfg.amp_min < 1.0 ? rng.uniform(cfg.amp_min, 1.0) : 1.0;
        for (int d = 0; d < cfg.feature_dim; ++d) clip.features[d] += amp * prototypes(c, d);
      }
      for (int d = 0; d < cfg.feature_dim; ++d) clip.features[d] += rng.gaussian() * cfg.noise_sigma;
      clip.labels = TriStateLabelVector(m, LabelState::Negative);
      for (int c : present) clip.labels.set(c, LabelState::Positive);
      clip.fully_labeled = true;
      asset.clip_ids.push_back(clip.clip_id);
      ds.clips.push_back(std::move(clip));
    }

    // checklist: everything that vocalized plus extra observed-only species
    for (int c : present_in_asset) asset.observed_mask[c] = true;
    {
      std::vector<int> extras_pool;
      for (int c : pool)
        if (!present_in_asset.count(c)) extras_pool.push_back(c);
      rng.shuffle(extras_pool);
      const int extras = std::min<int>(rng.poisson(cfg.checklist_extra), extras_pool.size());
      for (int i = 0; i < extras; ++i) asset.observed_mask[extras_pool[i]] = true;
    }
    ds.assets.push_back(std::move(asset));
  }
  validate_dataset(ds);
  return bench;
}

Dataset flatten(const Dataset& ds) {
  Dataset out;
  out.meta = ds.meta;
  out.clips = ds.clips;
  for (ClipRecord& c : out.clips) c.asset_id = -1;
  return out;
}

RegimeStats regime_stats(const Dataset& ds) {
  RegimeStats s;
  s.n_examples = ds.clips.size();
  if (ds.clips.empty()) return s;
  bool first = true;
  for (const ClipRecord& c : ds.clips) {
    const std::size_t np = c.labels.num_positive();
    const std::size_t nn = c.labels.num_negative();
    const std::size_t nu = c.labels.num_unknown();
    s.mean_pos += static_cast<double>(np);
    s.mean_neg += static_cast<double>(nn);
    s.mean_unk += static_cast<double>(nu);
    if (first) {
      s.min_pos = s.max_pos = np;
      s.min_neg = s.max_neg = nn;
      s.min_unk = s.max_unk = nu;
      first = false;
    } else {
      s.min_pos = std::min(s.min_pos, np);
      s.max_pos = std::max(s.max_pos, np);
      s.min_neg = std::min(s.min_neg, nn);
      s.max_neg = std::max(s.max_neg, nn);
      s.min_unk = std::min(s.min_unk, nu);
      s.max_unk = std::max(s.max_unk, nu);
    }
  }
  const double n = static_cast<double>(ds.clips.size());
  s.mean_pos /= n;
  s.mean_neg /= n;
  s.mean_unk /= n;
  return s;
}

std::string regime_stats_csv_header() { return "split,regime,mean_pos,mean_neg,mean_unk,min,max"; }

std::string regime_stats_csv_row(const RegimeStats& s, const std::string& split,
                                 const std::string& regime) {
  std::ostringstream out;
  out << split << ',' << regime << ',' << format_double(s.mean_pos) << ','
      << format_double(s.mean_neg) << ',' << format_double(s.mean_unk) << ',' << s.min_pos << ','
      << s.max_pos;
  return out.str();
}

}  // namespace spml
