#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spml/labelspace.hpp"

namespace spml {

enum class RegimeKind { Full, TargetOnly, Geo, Checklist };

const char* regime_kind_name(RegimeKind k);
RegimeKind regime_kind_from_name(const std::string& name);

struct GeneratorConfig {
  int num_classes = 100;      // M
  int num_assets = 250;       // A
  int clips_per_asset_min = 8;
  int clips_per_asset_max = 16;
  int feature_dim = 64;       // D
  double p_bg = 0.28;         // background recurrence probability per clip
  int confusable_pairs = 10;  // pairs of classes sharing a prototype + small offset
  double confusable_offset = 0.25;  // twin offset scale relative to prototype scale
  int regions = 4;
  int species_per_region = 58;
  int community_size = 12;    // background species drawn per asset
  double checklist_extra = 8.0;  // mean extra non-vocalizing species per checklist
  double noise_sigma = 0.75;
  // per-(clip, species) vocalization strength drawn from U(amp_min, 1);
  // at 1.0 every occurrence contributes its prototype at full strength
  double amp_min = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PriorSimConfig {
  double target_known_negative_fraction = 0.45;
  double fit_fraction = 0.10;
  int context_dim = 16;
  double ridge_lambda = 1.0;
  std::uint64_t seed = 0;
};

using ContextProvider = std::function<std::vector<double>(const ClipRecord&)>;

// Seeded random projection of the clip features; stands in for scene
// similarity when no external context source exists.
ContextProvider random_projection_provider(int feature_dim, int context_dim, std::uint64_t seed);

// Keeps one positive per example and marks everything else Unknown. On
// asset-structured data, clips lacking the asset's target class are dropped;
// on flat data, one of each clip's positives is sampled uniformly (clips with
// none are dropped).
Dataset make_target_only(const Dataset& ds, std::uint64_t seed);

// Classes outside the asset's possible set become Negative (Unknown entries
// only; positives are untouched).
Dataset apply_geo_prior(const Dataset& ds);

// As apply_geo_prior with the allowed set = observed_mask AND possible_mask.
Dataset apply_checklist_prior(const Dataset& ds);

// COCO-style simulated priors: ridge-fit context scores, global threshold on
// the lowest-scoring unknowns, true positives reverted to Unknown. Requires a
// flat target-only dataset and the hidden full labels for reverting.
Dataset simulate_context_priors(const Dataset& flat_target_only, const Dataset& full_truth,
                                const PriorSimConfig& cfg, const ContextProvider& provider = nullptr);

struct SyntheticBenchmark {
  Dataset full;  // fully labeled ground truth; regime ops derive partial views
  // hidden truth beyond the labels: the background community drawn per asset
  std::map<std::int64_t, std::vector<int>> communities;
};

// Asset-structured synthetic benchmark with full tri-state ground truth
// (no Unknowns); regime ops above derive the partial views.
SyntheticBenchmark gen_synthetic_assets(const GeneratorConfig& cfg);

// Drops the asset structure; clips keep their ids and labels, asset_id = -1.
Dataset flatten(const Dataset& ds);

struct RegimeStats {
  double mean_pos = 0.0, mean_neg = 0.0, mean_unk = 0.0;
  std::size_t min_pos = 0, max_pos = 0;
  std::size_t min_neg = 0, max_neg = 0;
  std::size_t min_unk = 0, max_unk = 0;
  std::size_t n_examples = 0;
};

RegimeStats regime_stats(const Dataset& ds);

// CSV row with columns (split, regime, mean_pos, mean_neg, mean_unk, min, max);
// min/max report per-example positives.
std::string regime_stats_csv_header();
std::string regime_stats_csv_row(const RegimeStats& s, const std::string& split,
                                 const std::string& regime);

}  // namespace spml
