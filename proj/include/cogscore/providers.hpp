#pragma once

// Caption corpora and joint-embedding tables read from canonical files.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cogscore/dataset.hpp"
#include "cogscore/error.hpp"
#include "cogscore/jsonl.hpp"
#include "cogscore/textnorm.hpp"

namespace cogscore {

/// Generated visual descriptions of one image.
struct CaptionCorpus {
  std::string image_id;
  std::vector<TokenSeq> sentences;
  std::vector<std::string> originals;
};

struct CaptionLoadResult {
  std::map<std::string, CaptionCorpus> corpora;
  /// Images excluded for having no captions, or merged duplicates.
  std::vector<std::string> log;
};

inline CaptionLoadResult load_captions(const std::filesystem::path& path,
                                       MergePolicy policy = MergePolicy::kStrict) {
  CaptionLoadResult result;
  std::map<std::string, std::size_t> first_line;
  for_each_jsonl(path, [&](std::size_t line, const json& obj) {
    const auto image_id = obj.at("image_id").get<std::string>();
    const auto captions = obj.at("captions").get<std::vector<std::string>>();
    if (auto it = first_line.find(image_id); it != first_line.end()) {
      if (policy == MergePolicy::kStrict) {
        throw InputError(fmt::format("{}:{}: duplicate image_id {} (first on line {})",
                                     path.string(), line, image_id, it->second));
      }
      result.log.push_back(fmt::format("line {}: merged captions of duplicate image {}", line,
                                       image_id));
    } else {
      first_line.emplace(image_id, line);
    }
    auto& corpus = result.corpora[image_id];
    corpus.image_id = image_id;
    for (const auto& c : captions) {
      corpus.sentences.push_back(normalize(c));
      corpus.originals.push_back(c);
    }
  });
  for (auto it = result.corpora.begin(); it != result.corpora.end();) {
    if (it->second.sentences.empty()) {
      result.log.push_back("image " + it->first + " has no captions; excluded");
      it = result.corpora.erase(it);
    } else {
      ++it;
    }
  }
  return result;
}

enum class EmbeddingKind { kText, kImage };

inline std::string to_string(EmbeddingKind k) { return k == EmbeddingKind::kText ? "text" : "image"; }

inline EmbeddingKind parse_embedding_kind(const std::string& s) {
  if (s == "text") return EmbeddingKind::kText;
  if (s == "image") return EmbeddingKind::kImage;
  throw InputError("unknown embedding kind: " + s);
}

/// Key-indexed vectors of one shared dimension. Text keys are normalized labels;
/// image keys are image ids.
struct EmbeddingTable {
  EmbeddingKind kind = EmbeddingKind::kText;
  std::size_t dim = 0;
  std::map<std::string, std::vector<float>> vectors;

  const std::vector<float>* find(const std::string& key) const {
    auto it = vectors.find(key);
    return it == vectors.end() ? nullptr : &it->second;
  }

  /// Validates and inserts one vector; text keys are re-normalized.
  void insert(std::string key, std::vector<float> v) {
    if (v.size() != dim) {
      throw InputError(fmt::format("embedding '{}' has dimension {}, expected {}", key, v.size(),
                                   dim));
    }
    for (float x : v) {
      if (!std::isfinite(x)) throw InputError("embedding '" + key + "' has a NaN/Inf component");
    }
    if (kind == EmbeddingKind::kText) key = join(normalize(key));
    if (!vectors.emplace(key, std::move(v)).second) {
      throw InputError("duplicate embedding key '" + key + "'");
    }
  }
};

inline EmbeddingTable load_embeddings(const std::filesystem::path& path,
                                      EmbeddingKind expected_kind) {
  EmbeddingTable table;
  bool have_header = false;
  for_each_jsonl(path, [&](std::size_t line, const json& obj) {
    if (!have_header) {
      if (!obj.contains("kind") || !obj.contains("dim")) {
        throw InputError(fmt::format("{}:{}: missing {{\"kind\", \"dim\"}} header", path.string(),
                                     line));
      }
      table.kind = parse_embedding_kind(obj.at("kind").get<std::string>());
      if (table.kind != expected_kind) {
        throw InputError(fmt::format("{}: embedding kind is {}, expected {}", path.string(),
                                     to_string(table.kind), to_string(expected_kind)));
      }
      const auto dim = obj.at("dim").get<long long>();
      if (dim <= 0) throw InputError(path.string() + ": dim must be positive");
      table.dim = static_cast<std::size_t>(dim);
      have_header = true;
      return;
    }
    auto key = obj.at("key").get<std::string>();
    auto vec = obj.at("vector").get<std::vector<float>>();
    try {
      table.insert(std::move(key), std::move(vec));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line, e.what()));
    }
  });
  if (!have_header) throw InputError(path.string() + ": empty embedding file");
  return table;
}

inline std::string serialize_embeddings(const EmbeddingTable& table) {
  std::string out = fmt::format("{{\"kind\":\"{}\",\"dim\":{}}}\n", to_string(table.kind), table.dim);
  for (const auto& [key, vec] : table.vectors) {
    out += "{\"key\":" + json(key).dump() + ",\"vector\":[";
    for (std::size_t i = 0; i < vec.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += format_float(vec[i]);
    }
    out += "]}\n";
  }
  return out;
}

inline std::string serialize_captions(const std::map<std::string, CaptionCorpus>& corpora) {
  std::string out;
  for (const auto& [id, corpus] : corpora) {
    ordered_json obj;
    obj["image_id"] = id;
    obj["captions"] = corpus.originals;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

/// One (image, label) pair lacking an input the scorers need.
struct CoverageGap {
  std::string image_id;
  std::string label;
  std::string missing;  // "captions", "text_embedding" or "image_embedding"

  friend bool operator==(const CoverageGap&, const CoverageGap&) = default;
};

struct CoverageReport {
  std::size_t pairs = 0;  // distinct (image, label) pairs checked
  std::vector<CoverageGap> gaps;

  std::size_t uncovered_pairs() const {
    std::set<std::pair<std::string, std::string>> u;
    for (const auto& g : gaps) u.emplace(g.image_id, g.label);
    return u.size();
  }

  /// Fraction of pairs with every input present.
  double fraction_covered() const {
    return pairs == 0 ? 1.0
                      : 1.0 - static_cast<double>(uncovered_pairs()) / static_cast<double>(pairs);
  }
};

inline CoverageReport check_coverage(const LabelSet& labels,
                                     const std::map<std::string, CaptionCorpus>& captions,
                                     const EmbeddingTable& text, const EmbeddingTable& image) {
  CoverageReport report;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : labels.records()) pairs.emplace(r.image_id, r.key());
  report.pairs = pairs.size();
  for (const auto& [image_id, label] : pairs) {
    if (!captions.contains(image_id)) report.gaps.push_back({image_id, label, "captions"});
    if (!text.find(label)) report.gaps.push_back({image_id, label, "text_embedding"});
    if (!image.find(image_id)) report.gaps.push_back({image_id, label, "image_embedding"});
  }
  return report;
}

}  // namespace cogscore
