#pragma once

// Elicited-label dataset: ingestion, validation, statistics and agreement filtering.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "cogscore/error.hpp"
#include "cogscore/jsonl.hpp"
#include "cogscore/stats.hpp"
#include "cogscore/textnorm.hpp"

namespace cogscore {

inline constexpr int kMinRating = 0;
inline constexpr int kMaxRating = 4;

struct ImageStimulus {
  std::string image_id;
  std::string category;
  std::optional<std::string> image_path;

  friend bool operator==(const ImageStimulus&, const ImageStimulus&) = default;
};

/// One elicited label for one image with its per-rater 0-4 complexity ratings.
struct LabelRecord {
  std::string image_id;
  std::string raw_label;
  TokenSeq norm_label;
  std::vector<int> ratings;
  std::vector<std::string> rater_ids;

  std::string key() const { return join(norm_label); }
  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

/// Immutable, validated set of images and label records with an image index.
class LabelSet {
 public:
  LabelSet() = default;

  /// Validates that every record resolves to an image and image ids are unique.
  LabelSet(std::vector<ImageStimulus> images, std::vector<LabelRecord> records)
      : images_(std::move(images)), records_(std::move(records)) {
    for (std::size_t i = 0; i < images_.size(); ++i) {
      if (images_[i].category.empty()) {
        throw InputError("image " + images_[i].image_id + " has an empty category");
      }
      if (!image_pos_.emplace(images_[i].image_id, i).second) {
        throw InputError("duplicate image_id " + images_[i].image_id);
      }
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (!image_pos_.contains(records_[i].image_id)) {
        throw InputError("record references unknown image_id " + records_[i].image_id);
      }
      index_[records_[i].image_id].push_back(i);
    }
  }

  const std::vector<ImageStimulus>& images() const { return images_; }
  const std::vector<LabelRecord>& records() const { return records_; }

  const ImageStimulus& image(const std::string& image_id) const {
    auto it = image_pos_.find(image_id);
    if (it == image_pos_.end()) throw InputError("unknown image_id " + image_id);
    return images_[it->second];
  }

  const std::string& category_of(const LabelRecord& r) const { return image(r.image_id).category; }

  /// Indices into records() for one image, in file order.
  const std::vector<std::size_t>& records_for(const std::string& image_id) const {
    static const std::vector<std::size_t> kNone;
    auto it = index_.find(image_id);
    return it == index_.end() ? kNone : it->second;
  }

  /// Categories ordered by descending record count, then by name.
  std::vector<std::string> categories() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& img : images_) counts.emplace(img.category, 0);
    for (const auto& r : records_) ++counts[category_of(r)];
    std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (auto& [name, n] : v) out.push_back(name);
    return out;
  }

  friend bool operator==(const LabelSet& a, const LabelSet& b) {
    return a.images_ == b.images_ && a.records_ == b.records_;
  }

 private:
  std::vector<ImageStimulus> images_;
  std::vector<LabelRecord> records_;
  std::map<std::string, std::size_t> image_pos_;
  std::map<std::string, std::vector<std::size_t>> index_;
};

enum class MergePolicy { kStrict, kUnion };

struct Rejection {
  std::size_t line = 0;
  std::string reason;
};

struct LabelLoadResult {
  LabelSet labels;
  std::vector<Rejection> rejections;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<ImageStimulus> read_images(const std::filesystem::path& path) {
  std::vector<ImageStimulus> images;
  for_each_jsonl(path, [&](std::size_t, const json& obj) {
    ImageStimulus img;
    img.image_id = obj.at("image_id").get<std::string>();
    img.category = obj.at("category").get<std::string>();
    if (auto it = obj.find("image_path"); it != obj.end() && !it->is_null()) {
      img.image_path = it->get<std::string>();
    }
    images.push_back(std::move(img));
  });
  return images;
}

}  // namespace detail

/// Reads labels.jsonl (and optionally images.jsonl). Records violating invariants are
/// rejected with their line number; structural problems throw InputError.
inline LabelLoadResult load_labels(const std::filesystem::path& labels_path,
                                   MergePolicy policy = MergePolicy::kStrict,
                                   const std::optional<std::filesystem::path>& images_path = {}) {
  LabelLoadResult result;

  std::vector<ImageStimulus> images;
  std::map<std::string, std::size_t> image_pos;
  const bool closed_image_set = images_path.has_value();
  if (images_path) {
    images = detail::read_images(*images_path);
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (!image_pos.emplace(images[i].image_id, i).second) {
        throw InputError("duplicate image_id in " + images_path->string() + ": " +
                         images[i].image_id);
      }
    }
  }

  std::vector<LabelRecord> records;
  using Triple = std::tuple<std::string, std::string, std::string>;
  std::map<Triple, std::pair<std::size_t, std::size_t>> seen;  // -> (record index, line)

  for_each_jsonl(labels_path, [&](std::size_t line, const json& obj) {
    LabelRecord rec;
    rec.image_id = obj.at("image_id").get<std::string>();
    const auto category = obj.at("category").get<std::string>();
    rec.raw_label = obj.at("label").get<std::string>();
    rec.ratings = obj.at("ratings").get<std::vector<int>>();
    rec.rater_ids = obj.at("rater_ids").get<std::vector<std::string>>();

    auto reject = [&](std::string reason) {
      result.rejections.push_back({line, std::move(reason)});
    };
    if (rec.image_id.empty()) return reject("empty image_id");
    if (category.empty()) return reject("empty category");
    if (rec.ratings.empty()) return reject("no ratings");
    if (rec.ratings.size() != rec.rater_ids.size()) {
      return reject("ratings and rater_ids differ in length");
    }
    for (int r : rec.ratings) {
      if (r < kMinRating || r > kMaxRating) return reject("rating out of range [0,4]");
    }
    if (std::set<std::string>(rec.rater_ids.begin(), rec.rater_ids.end()).size() !=
        rec.rater_ids.size()) {
      return reject("duplicate rater_id within record");
    }
    rec.norm_label = normalize(rec.raw_label);
    if (rec.norm_label.empty()) return reject("label is empty after normalization");

    if (auto it = image_pos.find(rec.image_id); it != image_pos.end()) {
      if (images[it->second].category != category) {
        return reject("category '" + category + "' conflicts with '" +
                      images[it->second].category + "' for image " + rec.image_id);
      }
    } else if (closed_image_set) {
      return reject("unknown image_id " + rec.image_id);
    } else {
      image_pos.emplace(rec.image_id, images.size());
      images.push_back({rec.image_id, category, std::nullopt});
    }

    std::optional<std::size_t> merge_into;
    for (const auto& rater : rec.rater_ids) {
      auto it = seen.find({rec.image_id, rater, rec.raw_label});
      if (it == seen.end()) continue;
      if (policy == MergePolicy::kStrict) {
        throw InputError(fmt::format(
            "{}:{}: duplicate (image_id, rater_id, label) triple ({}, {}, {}) first seen on line {}",
            labels_path.string(), line, rec.image_id, rater, rec.raw_label, it->second.second));
      }
      merge_into = it->second.first;
      break;
    }

    if (merge_into) {
      LabelRecord& target = records[*merge_into];
      for (std::size_t k = 0; k < rec.rater_ids.size(); ++k) {
        auto pos = std::find(target.rater_ids.begin(), target.rater_ids.end(), rec.rater_ids[k]);
        if (pos == target.rater_ids.end()) {
          target.rater_ids.push_back(rec.rater_ids[k]);
          target.ratings.push_back(rec.ratings[k]);
          seen.emplace(Triple{rec.image_id, rec.rater_ids[k], rec.raw_label},
                       std::pair{*merge_into, line});
        } else if (target.ratings[static_cast<std::size_t>(pos - target.rater_ids.begin())] !=
                   rec.ratings[k]) {
          result.warnings.push_back(fmt::format(
              "line {}: rater {} rated '{}' twice with different values; keeping the first", line,
              rec.rater_ids[k], rec.raw_label));
        }
      }
      return;
    }

    for (const auto& rater : rec.rater_ids) {
      seen.emplace(Triple{rec.image_id, rater, rec.raw_label}, std::pair{records.size(), line});
    }
    records.push_back(std::move(rec));
  });

  if (records.empty()) throw InputError("no valid label records in " + labels_path.string());

  result.labels = LabelSet(std::move(images), std::move(records));
  for (const auto& img : result.labels.images()) {
    const std::size_t n = result.labels.records_for(img.image_id).size();
    if (n < 5 || n > 20) {
      result.warnings.push_back(
          fmt::format("image {} has {} labels (expected 5 to 20)", img.image_id, n));
    }
  }
  return result;
}

/// Canonical labels.jsonl text; loading it back yields an equal LabelSet.
inline std::string serialize_labels(const LabelSet& labels) {
  std::string out;
  for (const auto& r : labels.records()) {
    ordered_json obj;
    obj["image_id"] = r.image_id;
    obj["category"] = labels.category_of(r);
    obj["label"] = r.raw_label;
    obj["ratings"] = r.ratings;
    obj["rater_ids"] = r.rater_ids;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::string serialize_images(const LabelSet& labels) {
  std::string out;
  for (const auto& img : labels.images()) {
    ordered_json obj;
    obj["image_id"] = img.image_id;
    obj["category"] = img.category;
    obj["image_path"] = img.image_path ? json(*img.image_path) : json(nullptr);
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

inline std::string serialize_rejections(const std::vector<Rejection>& rejections) {
  std::string out;
  for (const auto& r : rejections) {
    ordered_json obj;
    obj["line"] = r.line;
    obj["reason"] = r.reason;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

inline double mean_rating(const LabelRecord& record) {
  if (record.ratings.empty()) throw InputError("mean_rating: record has no ratings");
  double sum = 0.0;
  for (int r : record.ratings) sum += r;
  return sum / static_cast<double>(record.ratings.size());
}

/// Label occurrence counts within one product category. Each record counts once.
struct CategoryCorpus {
  std::string category;
  std::map<std::string, std::size_t> label_counts;
  std::size_t total = 0;

  std::size_t count(const std::string& key) const {
    auto it = label_counts.find(key);
    return it == label_counts.end() ? 0 : it->second;
  }
};

inline CategoryCorpus build_category_corpus(const LabelSet& labels, const std::string& category) {
  CategoryCorpus corpus;
  corpus.category = category;
  bool known = false;
  for (const auto& img : labels.images()) {
    if (img.category != category) continue;
    known = true;
    for (std::size_t idx : labels.records_for(img.image_id)) {
      ++corpus.label_counts[labels.records()[idx].key()];
      ++corpus.total;
    }
  }
  if (!known) throw InputError("unknown category: " + category);
  return corpus;
}

enum class SdKind { kSample, kPopulation };

struct StatsRow {
  std::string name;
  std::size_t image_count = 0;
  std::size_t label_count = 0;
  std::size_t vocabulary_size = 0;
  std::size_t rating_count = 0;
  double rating_mean = 0.0;
  double rating_sd = 0.0;
};

/// Per-category dataset statistics followed by an "all" row.
struct StatsTable {
  std::vector<StatsRow> rows;
};

inline StatsTable dataset_stats(const LabelSet& labels, SdKind sd_kind = SdKind::kSample) {
  struct Acc {
    std::size_t images = 0, records = 0;
    std::set<std::string> vocab;
    std::vector<int> ratings;
  };
  std::map<std::string, Acc> per_cat;
  Acc all;
  for (const auto& img : labels.images()) {
    auto& acc = per_cat[img.category];
    ++acc.images;
    ++all.images;
    for (std::size_t idx : labels.records_for(img.image_id)) {
      const auto& r = labels.records()[idx];
      for (Acc* a : {&acc, &all}) {
        ++a->records;
        a->vocab.insert(r.key());
        a->ratings.insert(a->ratings.end(), r.ratings.begin(), r.ratings.end());
      }
    }
  }

  auto make_row = [&](const std::string& name, const Acc& a) {
    StatsRow row{name, a.images, a.records, a.vocab.size(), a.ratings.size(), 0.0, 0.0};
    if (a.ratings.empty()) return row;
    double sum = 0.0;
    for (int r : a.ratings) sum += r;
    const double n = static_cast<double>(a.ratings.size());
    row.rating_mean = sum / n;
    double ss = 0.0;
    for (int r : a.ratings) ss += (r - row.rating_mean) * (r - row.rating_mean);
    const double denom = sd_kind == SdKind::kSample ? n - 1.0 : n;
    row.rating_sd = denom > 0.0 ? std::sqrt(ss / denom) : 0.0;
    return row;
  };

  StatsTable table;
  for (const auto& cat : labels.categories()) table.rows.push_back(make_row(cat, per_cat[cat]));
  table.rows.push_back(make_row("all", all));
  return table;
}

struct AgreementResult {
  LabelSet labels;
  /// Mean pairwise rater Spearman per image with at least one valid rater pair.
  std::map<std::string, double> image_agreement;
  /// Images without any rater pair sharing two or more non-constant labels.
  std::vector<std::string> dropped;
};

/// Mean pairwise Spearman between raters of one image, over co-rated labels.
/// Returns nullopt when no rater pair is usable.
inline std::optional<double> image_agreement(const LabelSet& labels, const std::string& image_id) {
  std::map<std::string, std::map<std::size_t, double>> by_rater;
  for (std::size_t idx : labels.records_for(image_id)) {
    const auto& r = labels.records()[idx];
    for (std::size_t k = 0; k < r.ratings.size(); ++k) {
      by_rater[r.rater_ids[k]][idx] = r.ratings[k];
    }
  }
  double sum = 0.0;
  std::size_t pairs = 0;
  for (auto a = by_rater.begin(); a != by_rater.end(); ++a) {
    for (auto b = std::next(a); b != by_rater.end(); ++b) {
      std::vector<double> xa, xb;
      for (const auto& [idx, rating] : a->second) {
        if (auto it = b->second.find(idx); it != b->second.end()) {
          xa.push_back(rating);
          xb.push_back(it->second);
        }
      }
      if (xa.size() < 2) continue;
      try {
        sum += spearman(xa, xb, 2);
        ++pairs;
      } catch (const StatsError&) {
        // Constant rating vector on the shared labels.
      }
    }
  }
  if (pairs == 0) return std::nullopt;
  return sum / static_cast<double>(pairs);
}

/// Keeps every record of images whose rater agreement exceeds `threshold`.
/// A threshold of -1 keeps every image with a usable rater pair.
inline AgreementResult agreement_filter(const LabelSet& labels, double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw InputError(fmt::format("agreement threshold {} outside [-1, 1]", threshold));
  }
  AgreementResult result;
  std::vector<ImageStimulus> images;
  std::vector<LabelRecord> records;
  for (const auto& img : labels.images()) {
    auto agreement = image_agreement(labels, img.image_id);
    if (!agreement) {
      result.dropped.push_back(img.image_id);
      continue;
    }
    result.image_agreement[img.image_id] = *agreement;
    if (*agreement > threshold || threshold <= -1.0) {
      images.push_back(img);
      for (std::size_t idx : labels.records_for(img.image_id)) {
        records.push_back(labels.records()[idx]);
      }
    }
  }
  result.labels = LabelSet(std::move(images), std::move(records));
  return result;
}

}  // namespace cogscore
