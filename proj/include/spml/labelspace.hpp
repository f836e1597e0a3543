#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spml {

enum class LabelState : std::int8_t {
  Negative = 0,
  Positive = 1,
  Unknown = -1,
};

// Wire encoding used by manifests: Positive=1, Negative=0, Unknown=-1.
int label_to_int(LabelState s);
LabelState label_from_int(int v);

// Per-example class annotations; length always equals the dataset class count.
class TriStateLabelVector {
 public:
  TriStateLabelVector() = default;
  explicit TriStateLabelVector(std::size_t m, LabelState fill = LabelState::Unknown)
      : states_(m, fill) {}

  std::size_t size() const { return states_.size(); }
  LabelState operator[](std::size_t c) const { return states_[c]; }
  void set(std::size_t c, LabelState s) { states_[c] = s; }

  std::size_t count(LabelState s) const;
  std::size_t num_positive() const { return count(LabelState::Positive); }
  std::size_t num_negative() const { return count(LabelState::Negative); }
  std::size_t num_unknown() const { return count(LabelState::Unknown); }
  bool fully_labeled() const { return num_unknown() == 0; }
  std::vector<std::size_t> positives() const;

  bool operator==(const TriStateLabelVector& o) const { return states_ == o.states_; }

 private:
  std::vector<LabelState> states_;
};

enum class BoxStatus { Active, Ignore };

// Time-extent annotation within a clip window; frequency extent is irrelevant
// for clip labels and not modeled.
struct BoxAnnotation {
  int class_id = 0;
  double t_start = 0.0;  // seconds
  double t_end = 0.0;
  std::optional<BoxStatus> status_hint;
};

struct ClipRecord {
  std::int64_t clip_id = 0;
  std::int64_t asset_id = -1;  // -1 in flat (asset-free) datasets
  int order_index = 0;
  std::vector<double> features;
  TriStateLabelVector labels;
  bool fully_labeled = false;
};

struct AssetRecord {
  std::int64_t asset_id = 0;
  int target_class = 0;
  std::vector<std::int64_t> clip_ids;  // ordered
  std::vector<bool> possible_mask;     // geo prior: species plausible by range
  std::vector<bool> observed_mask;     // checklist: species seen or heard
};

enum class Split { Train, Val, Test };

struct DatasetMeta {
  int num_classes = 0;   // M
  int feature_dim = 0;   // D
  std::vector<std::string> class_names;
  Split split = Split::Train;  // runtime label only; not serialized
};

struct Dataset {
  DatasetMeta meta;
  std::vector<AssetRecord> assets;  // empty => flat dataset
  std::vector<ClipRecord> clips;

  bool flat() const { return assets.empty(); }
  const AssetRecord& asset_by_id(std::int64_t id) const;
  const ClipRecord& clip_by_id(std::int64_t id) const;
};

struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Validates all cross-references and type invariants; throws ManifestError
// naming the offending record. Sorts assets and clips by id.
void validate_dataset(Dataset& ds);

Dataset load_manifest(const std::string& path);
void save_manifest(const Dataset& ds, const std::string& path);

// Canonical JSON of the manifest; two datasets are value-identical iff their
// canonical serializations match byte for byte.
std::string manifest_to_string(const Dataset& ds);
Dataset manifest_from_string(const std::string& text);

// Presence rule for one clip window: a class is Positive iff some box of that
// class overlaps the window and is not mostly truncated. A box is mostly
// truncated iff it is longer than 80ms yet occupies only the first or only
// the last 200ms of the window. Everything else stays Unknown.
TriStateLabelVector clip_labels_from_boxes(const std::vector<BoxAnnotation>& boxes,
                                           double clip_duration, int num_classes);

struct SplitResult {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Asset-level split stratified by target class; all clips of an asset land in
// the same split. Fractions are (train, val, test) and must sum to 1.
SplitResult split_dataset(const Dataset& ds, double frac_train, double frac_val,
                          double frac_test, std::uint64_t seed);

}  // namespace spml
