#pragma once

// Scoring every label record against its providers, and the scores.jsonl format.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "cogscore/dataset.hpp"
#include "cogscore/jsonl.hpp"
#include "cogscore/providers.hpp"
#include "cogscore/scorers.hpp"

namespace cogscore {

struct ScoreOptions {
  MatchOptions match;
  bool enable_word_feature = false;
  double word_feature_cap = 20.0;
  bool unseen_label_smoothing = true;
};

struct ScoreRow {
  std::string image_id;
  std::string label;  // raw label as elicited
  std::string key;    // normalized label
  ScoreSet scores;
};

/// Per-record construct scores, in LabelSet record order.
struct ScoreMatrix {
  std::vector<ScoreRow> rows;
  bool word_feature_enabled = false;
};

struct ScoringInputs {
  const LabelSet& labels;
  const std::map<std::string, CaptionCorpus>& captions;
  const EmbeddingTable& text_embeddings;
  const EmbeddingTable& image_embeddings;
  const ConcretenessLexicon& lexicon;
};

/// Scores every record. Inputs missing for a record leave the affected construct
/// missing; callers decide whether coverage gaps are fatal before calling this.
inline ScoreMatrix score_records(const ScoringInputs& in, const ScoreOptions& opts = {}) {
  std::map<std::string, CategoryCorpus> corpora;
  for (const auto& cat : in.labels.categories()) {
    corpora.emplace(cat, build_category_corpus(in.labels, cat));
  }

  // Scores depend only on (image, normalized label); duplicate labels share one result.
  std::map<std::pair<std::string, std::string>, ScoreSet> cache;
  ScoreMatrix matrix;
  matrix.word_feature_enabled = opts.enable_word_feature;
  matrix.rows.reserve(in.labels.records().size());
  for (const auto& rec : in.labels.records()) {
    const std::string key = rec.key();
    auto [it, inserted] = cache.try_emplace({rec.image_id, key});
    if (inserted) {
      ScoreSet& s = it->second;
      if (auto c = in.captions.find(rec.image_id); c != in.captions.end()) {
        s.theta_v = visibility_score(rec.norm_label, c->second, opts.match);
      }
      const auto* tv = in.text_embeddings.find(key);
      const auto* iv = in.image_embeddings.find(rec.image_id);
      if (tv && iv) s.theta_s = semantic_score(*tv, *iv);
      s.theta_u = uniqueness_score(rec.norm_label, corpora.at(in.labels.category_of(rec)),
                                   opts.unseen_label_smoothing);
      s.theta_c = concreteness_score(rec.norm_label, in.lexicon);
      if (opts.enable_word_feature) {
        s.theta_r = word_feature_score(rec.norm_label, opts.word_feature_cap);
      }
    }
    matrix.rows.push_back({rec.image_id, rec.raw_label, key, it->second});
  }
  return matrix;
}

/// Constructs present in a matrix, in canonical order.
inline std::vector<Construct> matrix_constructs(const ScoreMatrix& m) {
  std::vector<Construct> out = {Construct::kVisibility, Construct::kSemantics,
                                Construct::kUniqueness, Construct::kConcreteness};
  if (m.word_feature_enabled) out.push_back(Construct::kWordFeature);
  return out;
}

inline ScoreColumns columns_of(const ScoreMatrix& m, const std::vector<std::size_t>& rows) {
  ScoreColumns cols;
  for (Construct c : matrix_constructs(m)) {
    auto& col = cols[c];
    col.reserve(rows.size());
    for (std::size_t r : rows) col.push_back(m.rows[r].scores.get(c));
  }
  return cols;
}

/// Calibrates each combination on `rows` (in-sample) and stores the combined scores in
/// every row of the matrix. Returns the calibration used per combination.
inline std::map<std::string, Calibration> attach_combinations(
    ScoreMatrix& m, const LabelSet& labels, const std::vector<Combination>& combos) {
  std::vector<std::size_t> rows(m.rows.size());
  std::vector<double> targets(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    rows[i] = i;
    targets[i] = mean_rating(labels.records()[i]);
  }
  const ScoreColumns cols = columns_of(m, rows);
  const Normalizers norms = compute_normalizers(cols);
  std::map<std::string, Calibration> used;
  for (const auto& combo : combos) {
    Calibration cal = calibrate_weights(cols, targets, combo.constructs);
    for (auto& row : m.rows) row.scores.combined[combo.name()] = combine(row.scores, cal.weights, norms);
    used.emplace(combo.name(), std::move(cal));
  }
  return used;
}

namespace detail {

inline json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

inline std::optional<double> read_optional(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace detail

/// scores.jsonl, one line per record. theta_v/s/u are null only under allowed coverage gaps.
inline std::string serialize_scores(const ScoreMatrix& m) {
  std::string out;
  for (const auto& row : m.rows) {
    ordered_json obj;
    obj["image_id"] = row.image_id;
    obj["label"] = row.label;
    obj["theta_v"] = detail::optional_number(row.scores.theta_v);
    obj["theta_s"] = detail::optional_number(row.scores.theta_s);
    obj["theta_u"] = detail::optional_number(row.scores.theta_u);
    obj["theta_c"] = detail::optional_number(row.scores.theta_c);
    obj["theta_r"] = detail::optional_number(row.scores.theta_r);
    ordered_json combined = ordered_json::object();
    for (const auto& [n, v] : row.scores.combined) combined[n] = detail::optional_number(v);
    obj["combined"] = combined;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

inline ScoreMatrix load_scores(const std::filesystem::path& path) {
  ScoreMatrix m;
  for_each_jsonl(path, [&](std::size_t, const json& obj) {
    ScoreRow row;
    row.image_id = obj.at("image_id").get<std::string>();
    row.label = obj.at("label").get<std::string>();
    row.key = join(normalize(row.label));
    row.scores.theta_v = detail::read_optional(obj, "theta_v");
    row.scores.theta_s = detail::read_optional(obj, "theta_s");
    row.scores.theta_u = detail::read_optional(obj, "theta_u");
    row.scores.theta_c = detail::read_optional(obj, "theta_c");
    row.scores.theta_r = detail::read_optional(obj, "theta_r");
    if (row.scores.theta_r) m.word_feature_enabled = true;
    if (auto it = obj.find("combined"); it != obj.end() && it->is_object()) {
      for (const auto& [n, v] : it->items()) {
        row.scores.combined[n] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      }
    }
    m.rows.push_back(std::move(row));
  });
  return m;
}

/// Re-aligns loaded scores with the records of `labels` by (image_id, normalized label).
/// Records without a score line keep an empty ScoreSet and are listed in `missing`.
inline ScoreMatrix align_scores(const ScoreMatrix& loaded, const LabelSet& labels,
                                std::vector<std::string>* missing = nullptr) {
  std::map<std::pair<std::string, std::string>, const ScoreRow*> by_key;
  for (const auto& row : loaded.rows) by_key.emplace(std::pair{row.image_id, row.key}, &row);
  ScoreMatrix out;
  out.word_feature_enabled = loaded.word_feature_enabled;
  for (const auto& rec : labels.records()) {
    ScoreRow row{rec.image_id, rec.raw_label, rec.key(), {}};
    if (auto it = by_key.find({rec.image_id, row.key}); it != by_key.end()) {
      row.scores = it->second->scores;
      row.scores.combined.clear();
    } else if (missing) {
      missing->push_back(rec.image_id + "\t" + rec.raw_label);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace cogscore
