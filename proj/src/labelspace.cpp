#include "spml/labelspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spml/rng.hpp"

namespace spml {

using ordered_json = nlohmann::ordered_json;

int label_to_int(LabelState s) {
  switch (s) {
    case LabelState::Positive: return 1;
    case LabelState::Negative: return 0;
    case LabelState::Unknown: return -1;
  }
  return -1;
}

LabelState label_from_int(int v) {
  switch (v) {
    case 1: return LabelState::Positive;
    case 0: return LabelState::Negative;
    case -1: return LabelState::Unknown;
  }
  throw ManifestError("label value must be one of {1, 0, -1}, got " + std::to_string(v));
}

std::size_t TriStateLabelVector::count(LabelState s) const {
  std::size_t n = 0;
  for (LabelState x : states_)
    if (x == s) ++n;
  return n;
}

std::vector<std::size_t> TriStateLabelVector::positives() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < states_.size(); ++c)
    if (states_[c] == LabelState::Positive) out.push_back(c);
  return out;
}

const AssetRecord& Dataset::asset_by_id(std::int64_t id) const {
  auto it = std::lower_bound(assets.begin(), assets.end(), id,
                             [](const AssetRecord& a, std::int64_t v) { return a.asset_id < v; });
  if (it == assets.end() || it->asset_id != id)
    throw ManifestError("asset_id " + std::to_string(id) + " not found");
  return *it;
}

const ClipRecord& Dataset::clip_by_id(std::int64_t id) const {
  auto it = std::lower_bound(clips.begin(), clips.end(), id,
                             [](const ClipRecord& c, std::int64_t v) { return c.clip_id < v; });
  if (it == clips.end() || it->clip_id != id)
    throw ManifestError("clip_id " + std::to_string(id) + " not found");
  return *it;
}

void validate_dataset(Dataset& ds) {
  const int m = ds.meta.num_classes;
  if (m < 2) throw ManifestError("meta.M must be >= 2, got " + std::to_string(m));
  if (static_cast<int>(ds.meta.class_names.size()) != m)
    throw ManifestError("meta.class_names length " + std::to_string(ds.meta.class_names.size()) +
                        " != meta.M " + std::to_string(m));

  std::sort(ds.assets.begin(), ds.assets.end(),
            [](const AssetRecord& a, const AssetRecord& b) { return a.asset_id < b.asset_id; });
  std::sort(ds.clips.begin(), ds.clips.end(),
            [](const ClipRecord& a, const ClipRecord& b) { return a.clip_id < b.clip_id; });

  std::set<std::int64_t> asset_ids;
  for (std::size_t i = 0; i < ds.assets.size(); ++i) {
    const AssetRecord& a = ds.assets[i];
    if (!asset_ids.insert(a.asset_id).second)
      throw ManifestError("duplicate asset_id " + std::to_string(a.asset_id));
    if (a.target_class < 0 || a.target_class >= m)
      throw ManifestError("assets[" + std::to_string(i) + "].target_class out of range (asset_id=" +
                          std::to_string(a.asset_id) + ")");
    if (static_cast<int>(a.possible_mask.size()) != m)
      throw ManifestError("assets[" + std::to_string(i) + "].possible_mask length != M (asset_id=" +
                          std::to_string(a.asset_id) + ")");
    if (static_cast<int>(a.observed_mask.size()) != m)
      throw ManifestError("assets[" + std::to_string(i) + "].observed_mask length != M (asset_id=" +
                          std::to_string(a.asset_id) + ")");
    if (!a.possible_mask[a.target_class])
      throw ManifestError("assets[" + std::to_string(i) + "].possible_mask is false at target_class (asset_id=" +
                          std::to_string(a.asset_id) + ")");
  }

  std::map<std::int64_t, std::set<int>> order_seen;
  std::set<std::int64_t> clip_ids;
  for (std::size_t i = 0; i < ds.clips.size(); ++i) {
    ClipRecord& c = ds.clips[i];
    if (!clip_ids.insert(c.clip_id).second)
      throw ManifestError("duplicate clip_id " + std::to_string(c.clip_id));
    if (static_cast<int>(c.labels.size()) != m)
      throw ManifestError("clips[" + std::to_string(i) + "].labels length " +
                          std::to_string(c.labels.size()) + " != meta.M " + std::to_string(m) +
                          " (clip_id=" + std::to_string(c.clip_id) + ")");
    if (static_cast<int>(c.features.size()) != ds.meta.feature_dim)
      throw ManifestError("clips[" + std::to_string(i) + "].features length != meta.D (clip_id=" +
                          std::to_string(c.clip_id) + ")");
    if (ds.flat()) {
      if (c.asset_id != -1)
        throw ManifestError("clips[" + std::to_string(i) + "].asset_id must be -1 in a flat manifest (clip_id=" +
                            std::to_string(c.clip_id) + ")");
    } else {
      if (asset_ids.find(c.asset_id) == asset_ids.end())
        throw ManifestError("clips[" + std::to_string(i) + "].asset_id " + std::to_string(c.asset_id) +
                            " dangling (clip_id=" + std::to_string(c.clip_id) + ")");
      if (!order_seen[c.asset_id].insert(c.order_index).second)
        throw ManifestError("duplicate order_index " + std::to_string(c.order_index) +
                            " within asset " + std::to_string(c.asset_id));
    }
    c.fully_labeled = c.labels.fully_labeled();
  }

  for (const AssetRecord& a : ds.assets)
    for (std::int64_t cid : a.clip_ids)
      if (clip_ids.find(cid) == clip_ids.end())
        throw ManifestError("asset " + std::to_string(a.asset_id) + " references dangling clip_id " +
                            std::to_string(cid));
}

namespace {

ordered_json dataset_to_json(const Dataset& ds) {
  ordered_json j;
  j["meta"] = ordered_json{{"M", ds.meta.num_classes},
                           {"D", ds.meta.feature_dim},
                           {"class_names", ds.meta.class_names}};
  ordered_json assets = ordered_json::array();
  for (const AssetRecord& a : ds.assets) {
    ordered_json ja;
    ja["asset_id"] = a.asset_id;
    ja["target_class"] = a.target_class;
    ja["possible_mask"] = a.possible_mask;
    ja["observed_mask"] = a.observed_mask;
    assets.push_back(std::move(ja));
  }
  j["assets"] = std::move(assets);
  ordered_json clips = ordered_json::array();
  for (const ClipRecord& c : ds.clips) {
    ordered_json jc;
    jc["clip_id"] = c.clip_id;
    jc["asset_id"] = c.asset_id;
    jc["order_index"] = c.order_index;
    jc["features"] = c.features;
    std::vector<int> labels(c.labels.size());
    for (std::size_t i = 0; i < c.labels.size(); ++i) labels[i] = label_to_int(c.labels[i]);
    jc["labels"] = labels;
    clips.push_back(std::move(jc));
  }
  j["clips"] = std::move(clips);
  return j;
}

template <typename T>
T require_field(const ordered_json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end())
    throw ManifestError(where + ": missing field '" + field + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ManifestError(where + ": field '" + field + "' has wrong type");
  }
}

Dataset dataset_from_json(const ordered_json& j) {
  Dataset ds;
  if (!j.contains("meta")) throw ManifestError("manifest: missing 'meta'");
  const ordered_json& meta = j.at("meta");
  ds.meta.num_classes = require_field<int>(meta, "M", "meta");
  ds.meta.feature_dim = require_field<int>(meta, "D", "meta");
  ds.meta.class_names = require_field<std::vector<std::string>>(meta, "class_names", "meta");

  if (j.contains("assets")) {
    std::size_t idx = 0;
    for (const ordered_json& ja : j.at("assets")) {
      const std::string where = "assets[" + std::to_string(idx) + "]";
      AssetRecord a;
      a.asset_id = require_field<std::int64_t>(ja, "asset_id", where);
      a.target_class = require_field<int>(ja, "target_class", where);
      a.possible_mask = require_field<std::vector<bool>>(ja, "possible_mask", where);
      a.observed_mask = require_field<std::vector<bool>>(ja, "observed_mask", where);
      ds.assets.push_back(std::move(a));
      ++idx;
    }
  }
  if (j.contains("clips")) {
    std::size_t idx = 0;
    for (const ordered_json& jc : j.at("clips")) {
      const std::string where = "clips[" + std::to_string(idx) + "]";
      ClipRecord c;
      c.clip_id = require_field<std::int64_t>(jc, "clip_id", where);
      c.asset_id = require_field<std::int64_t>(jc, "asset_id", where);
      c.order_index = require_field<int>(jc, "order_index", where);
      c.features = require_field<std::vector<double>>(jc, "features", where);
      std::vector<int> raw = require_field<std::vector<int>>(jc, "labels", where);
      TriStateLabelVector labels(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i) labels.set(i, label_from_int(raw[i]));
      c.labels = std::move(labels);
      ds.clips.push_back(std::move(c));
      ++idx;
    }
  }
  validate_dataset(ds);
  return ds;
}

// Per-asset clip_ids are derivable from the clips table; rebuild them in
// order_index order so a manifest cannot carry an inconsistent list.
void rebuild_asset_clip_lists(Dataset& ds) {
  std::map<std::int64_t, std::vector<std::pair<int, std::int64_t>>> by_asset;
  for (const ClipRecord& c : ds.clips)
    if (c.asset_id >= 0) by_asset[c.asset_id].push_back({c.order_index, c.clip_id});
  for (AssetRecord& a : ds.assets) {
    a.clip_ids.clear();
    auto it = by_asset.find(a.asset_id);
    if (it == by_asset.end()) continue;
    std::sort(it->second.begin(), it->second.end());
    for (auto& [ord, cid] : it->second) a.clip_ids.push_back(cid);
  }
}

}  // namespace

std::string manifest_to_string(const Dataset& ds) {
  return dataset_to_json(ds).dump();
}

Dataset manifest_from_string(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("manifest parse error: ") + e.what());
  }
  Dataset ds = dataset_from_json(j);
  rebuild_asset_clip_lists(ds);
  return ds;
}

Dataset load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open manifest: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return manifest_from_string(buf.str());
}

void save_manifest(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError("cannot write manifest: " + path);
  out << manifest_to_string(ds);
  out << '\n';
}

TriStateLabelVector clip_labels_from_boxes(const std::vector<BoxAnnotation>& boxes,
                                           double clip_duration, int num_classes) {
  if (clip_duration <= 0.0) throw std::invalid_argument("clip_duration must be positive");
  TriStateLabelVector labels(num_classes, LabelState::Unknown);
  for (const BoxAnnotation& b : boxes) {
    if (b.t_start >= b.t_end)
      throw std::invalid_argument("box has t_start >= t_end (class " + std::to_string(b.class_id) + ")");
    if (b.class_id < 0 || b.class_id >= num_classes)
      throw std::invalid_argument("box class_id out of range: " + std::to_string(b.class_id));
    const double s = std::max(0.0, b.t_start);
    const double e = std::min(clip_duration, b.t_end);
    if (s >= e) continue;  // no overlap with the window
    const bool long_enough = (e - s) > 0.080;
    const bool only_head = e <= 0.200;
    const bool only_tail = s >= clip_duration - 0.200;
    const bool mostly_truncated = long_enough && (only_head || only_tail);
    if (!mostly_truncated) labels.set(b.class_id, LabelState::Positive);
  }
  return labels;
}

SplitResult split_dataset(const Dataset& ds, double frac_train, double frac_val,
                          double frac_test, std::uint64_t seed) {
  if (std::abs(frac_train + frac_val + frac_test - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
  if (ds.flat()) throw std::invalid_argument("split_dataset requires an asset-structured dataset");

  std::map<int, std::vector<std::int64_t>> by_class;
  for (const AssetRecord& a : ds.assets) by_class[a.target_class].push_back(a.asset_id);

  std::set<std::int64_t> in_train, in_val, in_test;
  Rng root(seed);
  for (auto& [cls, ids] : by_class) {
    std::sort(ids.begin(), ids.end());
    Rng rng = root.child(static_cast<std::uint64_t>(cls));
    rng.shuffle(ids);
    const std::size_t n = ids.size();
    const double fracs[3] = {frac_train, frac_val, frac_test};
    std::size_t counts[3];
    double rema[3];
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
      const double exact = fracs[k] * static_cast<double>(n);
      counts[k] = static_cast<std::size_t>(std::floor(exact));
      rema[k] = exact - static_cast<double>(counts[k]);
      assigned += counts[k];
    }
    while (assigned < n) {
      int best = 0;
      for (int k = 1; k < 3; ++k)
        if (rema[k] > rema[best]) best = k;
      ++counts[best];
      rema[best] = -1.0;
      ++assigned;
    }
    for (int k = 0; k < 3; ++k)
      if (counts[k] == 0)
        throw std::invalid_argument("class " + std::to_string(cls) +
                                    " has too few assets to populate every split");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) in_train.insert(ids[pos++]);
    for (std::size_t i = 0; i < counts[1]; ++i) in_val.insert(ids[pos++]);
    for (std::size_t i = 0; i < counts[2]; ++i) in_test.insert(ids[pos++]);
  }

  auto subset = [&](const std::set<std::int64_t>& keep, Split tag) {
    Dataset out;
    out.meta = ds.meta;
    out.meta.split = tag;
    for (const AssetRecord& a : ds.assets)
      if (keep.count(a.asset_id)) out.assets.push_back(a);
    for (const ClipRecord& c : ds.clips)
      if (keep.count(c.asset_id)) out.clips.push_back(c);
    return out;
  };
  SplitResult r{subset(in_train, Split::Train), subset(in_val, Split::Val),
                subset(in_test, Split::Test)};
  return r;
}

}  // namespace spml
