#pragma once

// Construct complexity scores and their calibrated weighted combinations.
//
//   visibility    1 - (captions containing the label) / (captions)
//   semantics     1 - cos(text vector, image vector)
//   uniqueness    1 - (label count in category) / (category total)
//   concreteness  b - c, b the lexicon maximum and c the label's rating
//   word feature  label length / cap, clamped to [0, 1]   (off by default)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unicode/unistr.h>

#include "cogscore/dataset.hpp"
#include "cogscore/error.hpp"
#include "cogscore/providers.hpp"
#include "cogscore/stats.hpp"
#include "cogscore/textnorm.hpp"

namespace cogscore {

enum class Construct { kVisibility, kSemantics, kUniqueness, kConcreteness, kWordFeature };

inline constexpr std::array<Construct, 5> kAllConstructs = {
    Construct::kVisibility, Construct::kSemantics, Construct::kUniqueness,
    Construct::kConcreteness, Construct::kWordFeature};

/// Single-letter code used in combination names: v, s, u, c, r.
inline char code(Construct c) {
  switch (c) {
    case Construct::kVisibility: return 'v';
    case Construct::kSemantics: return 's';
    case Construct::kUniqueness: return 'u';
    case Construct::kConcreteness: return 'c';
    case Construct::kWordFeature: return 'r';
  }
  return '?';
}

inline std::string name(Construct c) { return std::string("theta_") + code(c); }

inline Construct construct_from_code(char ch) {
  for (Construct c : kAllConstructs) {
    if (code(c) == ch) return c;
  }
  throw InputError(fmt::format("unknown construct code '{}'", ch));
}

/// Named set of constructs combined by a weighted sum, e.g. theta_vsu.
struct Combination {
  std::vector<Construct> constructs;

  std::string name() const {
    std::string n = "theta_";
    for (Construct c : constructs) n.push_back(code(c));
    return n;
  }

  /// Parses "v,s,u" or "vsu".
  static Combination parse(const std::string& spec) {
    Combination combo;
    for (char ch : spec) {
      if (ch == ',' || ch == ' ') continue;
      combo.constructs.push_back(construct_from_code(ch));
    }
    if (combo.constructs.empty()) throw InputError("empty combination: '" + spec + "'");
    return combo;
  }
};

inline std::vector<Combination> default_combinations() {
  return {Combination::parse("v,s"), Combination::parse("v,s,u"), Combination::parse("v,s,u,c")};
}

/// Per-record construct scores; any may be missing (out-of-lexicon, coverage gap).
struct ScoreSet {
  std::optional<double> theta_v;
  std::optional<double> theta_s;
  std::optional<double> theta_u;
  std::optional<double> theta_c;
  std::optional<double> theta_r;
  std::map<std::string, std::optional<double>> combined;

  std::optional<double> get(Construct c) const {
    switch (c) {
      case Construct::kVisibility: return theta_v;
      case Construct::kSemantics: return theta_s;
      case Construct::kUniqueness: return theta_u;
      case Construct::kConcreteness: return theta_c;
      case Construct::kWordFeature: return theta_r;
    }
    return std::nullopt;
  }

  void set(Construct c, std::optional<double> v) {
    switch (c) {
      case Construct::kVisibility: theta_v = v; break;
      case Construct::kSemantics: theta_s = v; break;
      case Construct::kUniqueness: theta_u = v; break;
      case Construct::kConcreteness: theta_c = v; break;
      case Construct::kWordFeature: theta_r = v; break;
    }
  }
};

// ---------------------------------------------------------------------------
// Concreteness lexicon

/// Word -> concreteness rating, with the scale maximum taken from the data.
class ConcretenessLexicon {
 public:
  ConcretenessLexicon() = default;

  explicit ConcretenessLexicon(std::map<std::string, double> entries)
      : entries_(std::move(entries)) {
    if (entries_.empty()) throw InputError("concreteness lexicon is empty");
    scale_max_ = 0.0;
    for (const auto& [word, c] : entries_) {
      if (!(c > 0.0) || !std::isfinite(c)) {
        throw InputError(fmt::format("lexicon rating for '{}' must be positive, got {}", word, c));
      }
      scale_max_ = std::max(scale_max_, c);
    }
  }

  double scale_max() const { return scale_max_; }
  std::size_t size() const { return entries_.size(); }

  std::optional<double> rating(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::string, double> entries_;
  double scale_max_ = 0.0;
};

/// Reads `word<TAB>concreteness` lines. A first line whose rating is not numeric is a header.
/// Words are normalized the same way as labels.
inline ConcretenessLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file: " + path.string());
  std::map<std::string, double> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError(fmt::format("{}:{}: expected word<TAB>concreteness", path.string(), line_no));
    }
    auto field = line.substr(tab + 1);
    field = field.substr(0, field.find('\t'));
    double value = 0.0;
    std::size_t used = 0;
    try {
      value = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != field.size()) {
      if (line_no == 1) continue;
      throw InputError(fmt::format("{}:{}: rating '{}' is not a number", path.string(), line_no,
                                   field));
    }
    const auto key = join(normalize(line.substr(0, tab)));
    if (key.empty()) continue;
    if (!entries.emplace(key, value).second) {
      throw InputError(fmt::format("{}:{}: duplicate lexicon word '{}'", path.string(), line_no, key));
    }
  }
  return ConcretenessLexicon(std::move(entries));
}

// ---------------------------------------------------------------------------
// Construct scores

inline double visibility_score(const TokenSeq& label, const CaptionCorpus& corpus,
                               const MatchOptions& opts = {}) {
  if (corpus.sentences.empty()) {
    throw InputError("visibility_score: image " + corpus.image_id + " has no captions");
  }
  if (label.empty()) throw InputError("visibility_score: empty label");
  std::size_t hits = 0;
  for (const auto& sentence : corpus.sentences) {
    if (contains_label(sentence, label, opts)) ++hits;
  }
  return 1.0 - static_cast<double>(hits) / static_cast<double>(corpus.sentences.size());
}

inline double semantic_score(std::span<const float> label_vec, std::span<const float> image_vec) {
  if (label_vec.size() != image_vec.size()) {
    throw InputError(fmt::format("semantic_score: dimension mismatch ({} vs {})", label_vec.size(),
                                 image_vec.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < label_vec.size(); ++i) {
    const double a = label_vec[i];
    const double b = image_vec[i];
    dot += a * b;
    na += a * a;
    nb += b * b;
  }
  if (na == 0.0 || nb == 0.0) throw InputError("semantic_score: zero-norm vector");
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return 1.0 - cosine;
}

/// Unseen labels are smoothed to 1 - 1/(total+1) unless `smooth_unseen` is false, in
/// which case they score 1.
inline double uniqueness_score(const TokenSeq& label, const CategoryCorpus& corpus,
                               bool smooth_unseen = true) {
  if (corpus.total == 0) throw InputError("uniqueness_score: empty category corpus");
  const std::size_t count = corpus.count(join(label));
  const double total = static_cast<double>(corpus.total);
  if (count == 0) return smooth_unseen ? 1.0 - 1.0 / (total + 1.0) : 1.0;
  return 1.0 - static_cast<double>(count) / total;
}

/// Phrase lookup first; otherwise the mean over constituent words found in the lexicon.
inline std::optional<double> concreteness_score(const TokenSeq& label,
                                                const ConcretenessLexicon& lexicon) {
  const double b = lexicon.scale_max();
  if (auto c = lexicon.rating(join(label))) return b - *c;
  if (label.size() < 2) return std::nullopt;
  double sum = 0.0;
  std::size_t found = 0;
  for (const auto& word : label.tokens) {
    if (auto c = lexicon.rating(word)) {
      sum += b - *c;
      ++found;
    }
  }
  if (found == 0) return std::nullopt;
  return sum / static_cast<double>(found);
}

/// Character count of the label's tokens over `cap`, clamped to [0, 1].
inline double word_feature_score(const TokenSeq& label, double cap = 20.0) {
  if (label.empty()) throw InputError("word_feature_score: empty label");
  if (!(cap > 0.0)) throw InputError("word_feature_score: cap must be positive");
  std::size_t chars = 0;
  for (const auto& t : label.tokens) {
    chars += static_cast<std::size_t>(icu::UnicodeString::fromUTF8(t).countChar32());
  }
  return std::clamp(static_cast<double>(chars) / cap, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Calibration and combination

/// Nonnegative weights per construct summing to 1 (when any is positive).
struct WeightVector {
  std::map<Construct, double> weights;

  double get(Construct c) const {
    auto it = weights.find(c);
    return it == weights.end() ? 0.0 : it->second;
  }
};

struct Calibration {
  WeightVector weights;
  std::map<Construct, double> correlations;
  bool uniform_fallback = false;
};

/// Per-construct score series aligned with a target series; nullopt marks a missing score.
using ScoreColumns = std::map<Construct, std::vector<std::optional<double>>>;

/// Weights proportional to max(0, Spearman(construct, target)), normalized to sum 1.
/// Each construct's correlation uses only records where it is present.
inline Calibration calibrate_weights(const ScoreColumns& scores, std::span<const double> targets,
                                     const std::vector<Construct>& constructs) {
  if (constructs.empty()) throw InputError("calibrate_weights: no constructs");
  Calibration cal;
  double total = 0.0;
  for (Construct c : constructs) {
    auto it = scores.find(c);
    if (it == scores.end()) throw InputError("calibrate_weights: no scores for " + name(c));
    if (it->second.size() != targets.size()) {
      throw InputError("calibrate_weights: score and target lengths differ for " + name(c));
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (it->second[i]) {
        xs.push_back(*it->second[i]);
        ys.push_back(targets[i]);
      }
    }
    if (xs.size() < 3) {
      throw InputError(fmt::format("calibrate_weights: {} has {} scored records, need 3", name(c),
                                   xs.size()));
    }
    if (std::all_of(ys.begin(), ys.end(), [&](double y) { return y == ys.front(); })) {
      throw StatsError("calibrate_weights: constant targets");
    }
    const double rho = spearman(xs, ys);
    cal.correlations[c] = rho;
    cal.weights.weights[c] = std::max(0.0, rho);
    total += std::max(0.0, rho);
  }
  if (total > 0.0) {
    for (auto& [c, w] : cal.weights.weights) w /= total;
  } else {
    cal.uniform_fallback = true;
    for (auto& [c, w] : cal.weights.weights) w = 1.0 / static_cast<double>(constructs.size());
  }
  return cal;
}

struct MinMax {
  double min = 0.0;
  double max = 0.0;
};

using Normalizers = std::map<Construct, MinMax>;

/// Per-construct min and max over the non-missing scores of an evaluation set.
inline Normalizers compute_normalizers(const ScoreColumns& scores) {
  Normalizers out;
  for (const auto& [c, column] : scores) {
    std::optional<MinMax> mm;
    for (const auto& v : column) {
      if (!v) continue;
      if (!mm) {
        mm = MinMax{*v, *v};
      } else {
        mm->min = std::min(mm->min, *v);
        mm->max = std::max(mm->max, *v);
      }
    }
    if (mm) out[c] = *mm;
  }
  return out;
}

/// Weighted sum of min-max normalized construct scores. Missing when a positively
/// weighted construct has no score.
inline std::optional<double> combine(const ScoreSet& scores, const WeightVector& weights,
                                     const Normalizers& normalizers) {
  double sum = 0.0;
  bool missing = false;
  for (const auto& [c, w] : weights.weights) {
    if (w <= 0.0) continue;
    auto nit = normalizers.find(c);
    if (nit == normalizers.end()) throw StatsError("combine: no normalizer for " + name(c));
    const MinMax& mm = nit->second;
    if (mm.max == mm.min) {
      throw StatsError("combine: " + name(c) + " is constant over the evaluation set");
    }
    const auto v = scores.get(c);
    if (!v) {
      missing = true;
      continue;
    }
    sum += w * (*v - mm.min) / (mm.max - mm.min);
  }
  if (missing) return std::nullopt;
  return sum;
}

}  // namespace cogscore
