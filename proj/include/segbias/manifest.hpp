#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segbias/mask.hpp"

namespace segbias {

enum class Split { kTrain, kVal, kTest };

inline constexpr std::array<Split, 3> kSplits = {Split::kTrain, Split::kVal, Split::kTest};

std::string_view to_string(Split split);
/// Accepts "TRAIN", "VAL", "TEST".
std::optional<Split> parse_split(std::string_view text);

struct ImageRecord {
  std::string image_id;
  std::string patient_id;
  Split split = Split::kTrain;
  /// Present iff the image belongs to the annotated organ subset.
  std::optional<std::string> mask_path;
  /// Organ name -> presence (0 or 1).
  std::map<std::string, int> weak_labels;

  /// weak_labels[organ] == 1. Throws std::out_of_range if the label is missing.
  bool contains(const std::string& organ) const { return weak_labels.at(organ) == 1; }

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

enum class Composition { kOrganSpecific, kSupplemented };

std::string_view to_string(Composition composition);

struct DatasetManifest {
  std::string organ;
  std::vector<ImageRecord> records;
  Composition composition = Composition::kOrganSpecific;
  /// Negatives per positive, per split, for SUPPLEMENTED manifests. Only 1.0
  /// survives a save/load cycle; other values are experimental.
  double negative_ratio = 1.0;
  /// Directory relative paths are resolved against (the manifest's folder).
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }
  /// `<base_dir>/images/<image_id>.f32`
  std::filesystem::path image_path(const ImageRecord& record) const;
  std::filesystem::path mask_path(const ImageRecord& record) const;
};

// JSON-lines codec. One object per line with keys image_id, patient_id, split,
// mask_path (omitted when absent), weak_labels. Parsing checks field types and
// image_id uniqueness; errors name the 1-based line.
std::vector<ImageRecord> parse_records(std::string_view text);
std::string serialize_records(std::span<const ImageRecord> records);
std::vector<ImageRecord> load_records(const std::filesystem::path& path);
void save_records(std::span<const ImageRecord> records, const std::filesystem::path& path);

/// Organ named by every mask-bearing record's weak labels; throws when it is
/// ambiguous or no record carries a mask.
std::string infer_organ(std::span<const ImageRecord> records);

/// Throws ManifestError on any broken invariant: unique ids, weak label for
/// the organ present, mask_path <=> weak label 1, composition rules, and
/// patient-disjoint splits.
void validate_manifest(const DatasetManifest& manifest);

/// Loads and validates. An empty `organ` is inferred. Composition is
/// ORGAN_SPECIFIC when every record has a mask, SUPPLEMENTED otherwise.
DatasetManifest load_manifest(const std::filesystem::path& path, const std::string& organ = "");
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct SupplementOptions {
  /// Experimental; the protocol is 1:1.
  double negative_ratio = 1.0;
};

/// Adds, per split, as many class-negative pool records as there are
/// positives, drawn without replacement from the same split. The pool of a
/// split is sorted by image_id and partially Fisher-Yates shuffled with
/// splitmix64(seed); one stream serves TRAIN, VAL, TEST in that order.
/// Output: the original records in order, then sampled negatives in draw order.
DatasetManifest supplement(const DatasetManifest& organ_specific, std::span<const ImageRecord> pool,
                           std::uint64_t seed, const SupplementOptions& options = {});

struct ManifestStats {
  /// Mean foreground fraction over class-positive records.
  double organ_size = 0.0;
  std::array<std::size_t, 3> split_counts{};
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

using MaskLoader = std::function<BinaryMask(const std::filesystem::path&)>;

ManifestStats manifest_stats(const DatasetManifest& manifest, const MaskLoader& loader = load_mask);

/// Records of one split, order preserved. Throws ManifestError(kPatientLeak)
/// if any patient_id appears in more than one split.
DatasetManifest split_filter(const DatasetManifest& manifest, Split split);

/// FNV-1a 64 of the serialized records, as 16 hex digits.
std::string manifest_hash(const DatasetManifest& manifest);

}  // namespace segbias
