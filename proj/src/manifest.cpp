#include "segbias/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "segbias/error.hpp"
#include "segbias/splitmix64.hpp"

namespace segbias {

std::string_view to_string(ManifestError::Kind kind) {
  switch (kind) {
    case ManifestError::Kind::kMalformedLine: return "malformed-line";
    case ManifestError::Kind::kMissingField: return "missing-field";
    case ManifestError::Kind::kInvalidField: return "invalid-field";
    case ManifestError::Kind::kDuplicateId: return "duplicate-id";
    case ManifestError::Kind::kInvariantViolation: return "invariant-violation";
    case ManifestError::Kind::kPatientLeak: return "patient-leak";
    case ManifestError::Kind::kInsufficientNegatives: return "insufficient-negatives";
    case ManifestError::Kind::kPositiveInPool: return "positive-in-pool";
    case ManifestError::Kind::kNoPositives: return "no-positives";
    case ManifestError::Kind::kUnreadableMask: return "unreadable-mask";
  }
  return "unknown";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "TRAIN";
    case Split::kVal: return "VAL";
    case Split::kTest: return "TEST";
  }
  return "UNKNOWN";
}

std::optional<Split> parse_split(std::string_view text) {
  for (Split s : kSplits) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::string_view to_string(Composition composition) {
  return composition == Composition::kOrganSpecific ? "ORGAN_SPECIFIC" : "SUPPLEMENTED";
}

std::filesystem::path DatasetManifest::image_path(const ImageRecord& record) const {
  return base_dir / "images" / (record.image_id + ".f32");
}

std::filesystem::path DatasetManifest::mask_path(const ImageRecord& record) const {
  if (!record.mask_path) {
    throw std::invalid_argument("record " + record.image_id + " has no mask");
  }
  return resolve(*record.mask_path);
}

// ---------------------------------------------------------------------------
// JSON-lines codec

namespace {

constexpr std::array<std::string_view, 5> kFields = {"image_id", "patient_id", "split", "mask_path",
                                                     "weak_labels"};

std::string line_prefix(std::size_t line) { return "manifest line " + std::to_string(line) + ": "; }

ImageRecord parse_record(const nlohmann::json& obj, std::size_t line) {
  using Kind = ManifestError::Kind;
  if (!obj.is_object()) throw ManifestError(Kind::kMalformedLine, line, line_prefix(line) + "not an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(kFields.begin(), kFields.end(), key) == kFields.end()) {
      throw ManifestError(Kind::kInvalidField, line, line_prefix(line) + "unknown field \"" + key + "\"");
    }
  }
  auto string_field = [&](const char* key) -> std::string {
    if (!obj.contains(key)) {
      throw ManifestError(Kind::kMissingField, line, line_prefix(line) + "missing field \"" + key + "\"");
    }
    if (!obj[key].is_string() || obj[key].get_ref<const std::string&>().empty()) {
      throw ManifestError(Kind::kInvalidField, line,
                          line_prefix(line) + "field \"" + key + "\" must be a non-empty string");
    }
    return obj[key].get<std::string>();
  };

  ImageRecord record;
  record.image_id = string_field("image_id");
  record.patient_id = string_field("patient_id");
  const std::string split = string_field("split");
  const auto parsed = parse_split(split);
  if (!parsed) {
    throw ManifestError(Kind::kInvalidField, line,
                        line_prefix(line) + "split \"" + split + "\" is not TRAIN, VAL or TEST");
  }
  record.split = *parsed;
  if (obj.contains("mask_path") && !obj["mask_path"].is_null()) record.mask_path = string_field("mask_path");

  if (!obj.contains("weak_labels")) {
    throw ManifestError(Kind::kMissingField, line, line_prefix(line) + "missing field \"weak_labels\"");
  }
  const auto& labels = obj["weak_labels"];
  if (!labels.is_object()) {
    throw ManifestError(Kind::kInvalidField, line, line_prefix(line) + "weak_labels must be an object");
  }
  for (const auto& [organ, value] : labels.items()) {
    if (!value.is_number_integer() || (value.get<int>() != 0 && value.get<int>() != 1)) {
      throw ManifestError(Kind::kInvalidField, line,
                          line_prefix(line) + "weak label for \"" + organ + "\" must be 0 or 1");
    }
    record.weak_labels[organ] = value.get<int>();
  }
  return record;
}

}  // namespace

std::vector<ImageRecord> parse_records(std::string_view text) {
  std::vector<ImageRecord> records;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ManifestError(ManifestError::Kind::kMalformedLine, line_no, line_prefix(line_no) + e.what());
    }
    ImageRecord record = parse_record(obj, line_no);
    if (!seen.insert(record.image_id).second) {
      throw ManifestError(ManifestError::Kind::kDuplicateId, line_no,
                          line_prefix(line_no) + "duplicate image_id \"" + record.image_id + "\"");
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string serialize_records(std::span<const ImageRecord> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json obj;
    obj["image_id"] = r.image_id;
    obj["patient_id"] = r.patient_id;
    obj["split"] = std::string(to_string(r.split));
    if (r.mask_path) obj["mask_path"] = *r.mask_path;
    nlohmann::ordered_json labels = nlohmann::ordered_json::object();
    for (const auto& [organ, value] : r.weak_labels) labels[organ] = value;
    obj["weak_labels"] = std::move(labels);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<ImageRecord> load_records(const std::filesystem::path& path) {
  return parse_records(read_file(path));
}

void save_records(std::span<const ImageRecord> records, const std::filesystem::path& path) {
  write_file(path, serialize_records(records));
}

// ---------------------------------------------------------------------------
// Validation

std::string infer_organ(std::span<const ImageRecord> records) {
  std::optional<std::set<std::string>> candidates;
  for (const auto& r : records) {
    if (!r.mask_path) continue;
    std::set<std::string> present;
    for (const auto& [organ, value] : r.weak_labels) {
      if (value == 1) present.insert(organ);
    }
    if (!candidates) {
      candidates = std::move(present);
    } else {
      std::set<std::string> both;
      std::set_intersection(candidates->begin(), candidates->end(), present.begin(), present.end(),
                            std::inserter(both, both.begin()));
      candidates = std::move(both);
    }
  }
  if (!candidates || candidates->size() != 1) {
    throw ManifestError(ManifestError::Kind::kInvariantViolation, 0,
                        "cannot infer the organ from weak labels; pass it explicitly");
  }
  return *candidates->begin();
}

namespace {

void check_patient_disjoint(std::span<const ImageRecord> records) {
  std::map<std::string, std::pair<Split, std::size_t>> first_seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto [it, inserted] = first_seen.emplace(r.patient_id, std::make_pair(r.split, i + 1));
    if (!inserted && it->second.first != r.split) {
      throw ManifestError(ManifestError::Kind::kPatientLeak, i + 1,
                          "patient \"" + r.patient_id + "\" appears in " +
                              std::string(to_string(it->second.first)) + " (line " +
                              std::to_string(it->second.second) + ") and " +
                              std::string(to_string(r.split)) + " (line " + std::to_string(i + 1) + ")");
    }
  }
}

std::size_t negatives_for(std::size_t positives, double ratio) {
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(positives)));
}

}  // namespace

void validate_manifest(const DatasetManifest& m) {
  using Kind = ManifestError::Kind;
  if (m.organ.empty()) throw ManifestError(Kind::kInvariantViolation, 0, "manifest has no organ");

  std::set<std::string> ids;
  std::array<std::size_t, 3> positives{};
  std::array<std::size_t, 3> negatives{};
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    const std::size_t line = i + 1;
    if (!ids.insert(r.image_id).second) {
      throw ManifestError(Kind::kDuplicateId, line,
                          line_prefix(line) + "duplicate image_id \"" + r.image_id + "\"");
    }
    const auto label = r.weak_labels.find(m.organ);
    if (label == r.weak_labels.end()) {
      throw ManifestError(Kind::kInvariantViolation, line,
                          line_prefix(line) + "no weak label for organ \"" + m.organ + "\"");
    }
    if (r.mask_path && label->second != 1) {
      throw ManifestError(Kind::kInvariantViolation, line,
                          line_prefix(line) + "has mask_path but weak label for \"" + m.organ + "\" is 0");
    }
    if (!r.mask_path && label->second == 1) {
      throw ManifestError(Kind::kInvariantViolation, line,
                          line_prefix(line) + "weak label for \"" + m.organ + "\" is 1 but mask_path is missing");
    }
    if (m.composition == Composition::kOrganSpecific && !r.mask_path) {
      throw ManifestError(Kind::kInvariantViolation, line,
                          line_prefix(line) + "organ-specific manifest record without mask_path");
    }
    auto& tally = label->second == 1 ? positives : negatives;
    ++tally[static_cast<std::size_t>(r.split)];
  }
  if (m.composition == Composition::kSupplemented) {
    for (Split s : kSplits) {
      const auto k = static_cast<std::size_t>(s);
      if (negatives[k] != negatives_for(positives[k], m.negative_ratio)) {
        throw ManifestError(Kind::kInvariantViolation, 0,
                            "supplemented manifest split " + std::string(to_string(s)) + " has " +
                                std::to_string(positives[k]) + " positives but " +
                                std::to_string(negatives[k]) + " negatives");
      }
    }
  }
  check_patient_disjoint(m.records);
}

DatasetManifest load_manifest(const std::filesystem::path& path, const std::string& organ) {
  DatasetManifest m;
  m.records = load_records(path);
  m.organ = organ.empty() ? infer_organ(m.records) : organ;
  const bool all_masked =
      std::all_of(m.records.begin(), m.records.end(), [](const ImageRecord& r) { return r.mask_path.has_value(); });
  m.composition = all_masked ? Composition::kOrganSpecific : Composition::kSupplemented;
  m.base_dir = path.parent_path();
  validate_manifest(m);
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  save_records(manifest.records, path);
}

// ---------------------------------------------------------------------------
// Supplementation

DatasetManifest supplement(const DatasetManifest& organ_specific, std::span<const ImageRecord> pool,
                           std::uint64_t seed, const SupplementOptions& options) {
  using Kind = ManifestError::Kind;
  if (organ_specific.composition != Composition::kOrganSpecific) {
    throw std::invalid_argument("supplement: input manifest must be organ-specific");
  }
  if (!std::isfinite(options.negative_ratio) || options.negative_ratio < 0.0) {
    throw std::invalid_argument("supplement: negative ratio must be finite and >= 0");
  }
  const std::string& organ = organ_specific.organ;

  std::set<std::string> taken;
  for (const auto& r : organ_specific.records) taken.insert(r.image_id);

  std::array<std::vector<const ImageRecord*>, 3> candidates;
  std::set<std::string> pool_ids;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& r = pool[i];
    const std::size_t line = i + 1;
    const auto label = r.weak_labels.find(organ);
    if (label == r.weak_labels.end()) {
      throw ManifestError(Kind::kInvalidField, line,
                          "pool record \"" + r.image_id + "\" has no weak label for \"" + organ + "\"");
    }
    if (label->second == 1) {
      throw ManifestError(Kind::kPositiveInPool, line,
                          "pool record \"" + r.image_id + "\" has weak label 1 for \"" + organ + "\"");
    }
    if (taken.contains(r.image_id) || !pool_ids.insert(r.image_id).second) {
      throw ManifestError(Kind::kDuplicateId, line, "pool record \"" + r.image_id + "\" duplicates an image_id");
    }
    candidates[static_cast<std::size_t>(r.split)].push_back(&r);
  }

  DatasetManifest out = organ_specific;
  out.composition = Composition::kSupplemented;
  out.negative_ratio = options.negative_ratio;

  SplitMix64 rng(seed);
  for (Split s : kSplits) {
    const auto k = static_cast<std::size_t>(s);
    const auto positives = static_cast<std::size_t>(
        std::count_if(organ_specific.records.begin(), organ_specific.records.end(),
                      [s](const ImageRecord& r) { return r.split == s; }));
    const std::size_t demand = negatives_for(positives, options.negative_ratio);
    auto& bucket = candidates[k];
    if (bucket.size() < demand) {
      throw ManifestError(Kind::kInsufficientNegatives, 0,
                          "insufficient negatives for split " + std::string(to_string(s)) + ": need " +
                              std::to_string(demand) + ", pool has " + std::to_string(bucket.size()));
    }
    std::sort(bucket.begin(), bucket.end(),
              [](const ImageRecord* a, const ImageRecord* b) { return a->image_id < b->image_id; });
    for (std::size_t i = 0; i < demand; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.bounded(bucket.size() - i));
      std::swap(bucket[i], bucket[j]);
      out.records.push_back(*bucket[i]);
    }
  }
  validate_manifest(out);
  return out;
}

// ---------------------------------------------------------------------------
// Statistics and filtering

ManifestStats manifest_stats(const DatasetManifest& manifest, const MaskLoader& loader) {
  ManifestStats stats;
  double fraction_sum = 0.0;
  for (const auto& r : manifest.records) {
    ++stats.split_counts[static_cast<std::size_t>(r.split)];
    if (!r.mask_path) {
      ++stats.negatives;
      continue;
    }
    ++stats.positives;
    const auto path = manifest.mask_path(r);
    BinaryMask mask = [&] {
      try {
        return loader(path);
      } catch (const std::exception& e) {
        throw ManifestError(ManifestError::Kind::kUnreadableMask, 0,
                            "cannot load mask for \"" + r.image_id + "\" (" + path.string() + "): " + e.what());
      }
    }();
    fraction_sum += mask.foreground_fraction();
  }
  if (stats.positives == 0) {
    throw ManifestError(ManifestError::Kind::kNoPositives, 0,
                        "manifest has no class-positive records; organ size is undefined");
  }
  stats.organ_size = fraction_sum / static_cast<double>(stats.positives);
  return stats;
}

DatasetManifest split_filter(const DatasetManifest& manifest, Split split) {
  check_patient_disjoint(manifest.records);
  DatasetManifest out = manifest;
  out.records.clear();
  std::copy_if(manifest.records.begin(), manifest.records.end(), std::back_inserter(out.records),
               [split](const ImageRecord& r) { return r.split == split; });
  return out;
}

std::string manifest_hash(const DatasetManifest& manifest) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : serialize_records(manifest.records)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace segbias
