#pragma once

// Run configuration: a JSON object of flat dotted keys, overridable from the command line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cogscore/dataset.hpp"
#include "cogscore/error.hpp"
#include "cogscore/jsonl.hpp"
#include "cogscore/pipeline.hpp"
#include "cogscore/report.hpp"

namespace cogscore {

struct RunConfig {
  std::optional<std::filesystem::path> labels_path;
  std::optional<std::filesystem::path> images_path;
  std::optional<std::filesystem::path> captions_path;
  std::optional<std::filesystem::path> text_embeddings_path;
  std::optional<std::filesystem::path> image_embeddings_path;
  std::optional<std::filesystem::path> lexicon_path;
  std::optional<std::filesystem::path> scores_path;
  std::filesystem::path out_dir = "out";

  MergePolicy merge_policy = MergePolicy::kStrict;
  SdKind sd_kind = SdKind::kSample;
  ScoreOptions scoring;
  PartialMode partial_mode = PartialMode::kRaw;
  EvalOptions eval;
  bool allow_gaps = false;
  // Only consulted when gaps are allowed.
  double min_coverage = 0.0;

  /// Every recognised key, for documentation and error messages.
  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "paths.labels", "paths.images", "paths.captions", "paths.text_embeddings",
        "paths.image_embeddings", "paths.lexicon", "paths.scores", "paths.out",
        "dataset.merge_policy", "dataset.sd", "textnorm.stem_match",
        "scorers.enable_word_feature", "scorers.word_feature_cap",
        "scorers.unseen_label_smoothing", "stats.partial_on_ranks",
        "evaluate.agreement_threshold", "evaluate.combinations", "evaluate.per_category_fit",
        "evaluate.calibration_fraction", "coverage.allow_gaps", "coverage.min_fraction", "seed"};
    return k;
  }

  /// Applies one key. Relative paths resolve against `base`.
  void set(const std::string& key, const json& value, const std::filesystem::path& base = {}) {
    auto path = [&] {
      std::filesystem::path p = value.get<std::string>();
      return p.is_relative() && !base.empty() ? base / p : p;
    };
    try {
      if (key == "paths.labels") labels_path = path();
      else if (key == "paths.images") images_path = path();
      else if (key == "paths.captions") captions_path = path();
      else if (key == "paths.text_embeddings") text_embeddings_path = path();
      else if (key == "paths.image_embeddings") image_embeddings_path = path();
      else if (key == "paths.lexicon") lexicon_path = path();
      else if (key == "paths.scores") scores_path = path();
      else if (key == "paths.out") out_dir = path();
      else if (key == "dataset.merge_policy") {
        const auto s = value.get<std::string>();
        if (s == "strict") merge_policy = MergePolicy::kStrict;
        else if (s == "union") merge_policy = MergePolicy::kUnion;
        else throw InputError("dataset.merge_policy must be strict or union");
      } else if (key == "dataset.sd") {
        const auto s = value.get<std::string>();
        if (s == "sample") sd_kind = SdKind::kSample;
        else if (s == "population") sd_kind = SdKind::kPopulation;
        else throw InputError("dataset.sd must be sample or population");
      } else if (key == "textnorm.stem_match") scoring.match.stem_match = value.get<bool>();
      else if (key == "scorers.enable_word_feature") scoring.enable_word_feature = value.get<bool>();
      else if (key == "scorers.word_feature_cap") scoring.word_feature_cap = value.get<double>();
      else if (key == "scorers.unseen_label_smoothing") scoring.unseen_label_smoothing = value.get<bool>();
      else if (key == "stats.partial_on_ranks") {
        partial_mode = value.get<bool>() ? PartialMode::kRank : PartialMode::kRaw;
      } else if (key == "evaluate.agreement_threshold") eval.agreement_threshold = value.get<double>();
      else if (key == "evaluate.combinations") {
        eval.combinations.clear();
        for (const auto& c : value) eval.combinations.push_back(Combination::parse(c.get<std::string>()));
      } else if (key == "evaluate.per_category_fit") eval.per_category_fit = value.get<bool>();
      else if (key == "evaluate.calibration_fraction") eval.calibration_fraction = value.get<double>();
      else if (key == "coverage.allow_gaps") allow_gaps = value.get<bool>();
      else if (key == "coverage.min_fraction") min_coverage = value.get<double>();
      else if (key == "seed") eval.seed = value.get<std::uint64_t>();
      else throw InputError("unknown config key: " + key);
    } catch (const json::exception& e) {
      throw InputError(fmt::format("config key {}: {}", key, e.what()));
    }
  }

  /// Parses `key=value`; the value is read as JSON, falling back to a plain string.
  void set_from_text(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw InputError("expected key=value, got: " + assignment);
    const auto key = assignment.substr(0, eq);
    const auto text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    set(key, value);
  }

  void validate() const {
    if (!(eval.agreement_threshold >= -1.0 && eval.agreement_threshold <= 1.0)) {
      throw InputError(fmt::format("agreement threshold {} outside [-1, 1]", eval.agreement_threshold));
    }
    if (!(eval.calibration_fraction >= 0.0 && eval.calibration_fraction < 1.0)) {
      throw InputError("evaluate.calibration_fraction must be in [0, 1)");
    }
    if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) {
      throw InputError("coverage.min_fraction must be in [0, 1]");
    }
    if (!(scoring.word_feature_cap > 0.0)) throw InputError("scorers.word_feature_cap must be positive");
    for (const auto* p : {&labels_path, &images_path, &captions_path, &text_embeddings_path,
                          &image_embeddings_path, &lexicon_path}) {
      if (*p && !std::filesystem::exists(**p)) {
        throw InputError("path does not exist: " + (*p)->string());
      }
    }
  }
};

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("malformed config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw InputError("config must be a JSON object: " + path.string());
  RunConfig cfg;
  const auto base = path.parent_path();
  for (const auto& [key, value] : j.items()) cfg.set(key, value, base);
  return cfg;
}

}  // namespace cogscore
