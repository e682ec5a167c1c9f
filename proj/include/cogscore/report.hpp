#pragma once

// Evaluation tables (human alignment per category, construct partial correlations,
// dataset statistics) and their CSV / Markdown / JSON renderings.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cogscore/dataset.hpp"
#include "cogscore/jsonl.hpp"
#include "cogscore/pipeline.hpp"
#include "cogscore/scorers.hpp"
#include "cogscore/stats.hpp"

namespace cogscore {

enum class Variant { kFull, kHighAgreement };

inline std::string to_string(Variant v) { return v == Variant::kFull ? "full" : "high_agreement"; }

struct Cell {
  std::optional<double> value;
  std::size_t n = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Spearman alignment with mean human ratings: rows are constructs and combinations,
/// columns are categories followed by "all".
struct EvalTable {
  std::string variant;
  std::vector<std::string> columns;
  std::vector<std::string> row_names;
  std::vector<std::vector<Cell>> cells;  // [row][column]
  /// Combination name -> construct name -> weight, per fitted scope ("all" or category).
  std::map<std::string, std::map<std::string, std::map<std::string, double>>> weights;
  std::vector<std::string> notes;

  const Cell& cell(const std::string& row, const std::string& column) const {
    for (std::size_t r = 0; r < row_names.size(); ++r) {
      if (row_names[r] != row) continue;
      for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] == column) return cells[r][c];
      }
    }
    throw InputError("no table cell " + row + "/" + column);
  }

  friend bool operator==(const EvalTable&, const EvalTable&) = default;
};

struct EvalOptions {
  std::vector<Combination> combinations = default_combinations();
  double agreement_threshold = 0.75;
  /// Fit weights and normalizers separately inside each category column.
  bool per_category_fit = false;
  /// Fraction of images (hashed by id) used only for calibration; 0 fits in-sample.
  double calibration_fraction = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

// FNV-1a over the seed bytes and the id; stable across platforms and runs.
inline double unit_hash(const std::string& id, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](unsigned char b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (unsigned char ch : id) mix(ch);
  return static_cast<double>(h >> 11) / static_cast<double>(1ull << 53);
}

inline Cell spearman_cell(const std::vector<std::optional<double>>& scores,
                          const std::vector<double>& targets, const std::vector<std::size_t>& rows) {
  std::vector<double> xs, ys;
  for (std::size_t r : rows) {
    if (scores[r]) {
      xs.push_back(*scores[r]);
      ys.push_back(targets[r]);
    }
  }
  Cell cell{std::nullopt, xs.size()};
  if (xs.size() < 3) return cell;
  try {
    cell.value = spearman(xs, ys);
  } catch (const StatsError&) {
  }
  return cell;
}

}  // namespace detail

/// Builds the alignment table. `scores` must be aligned with `labels.records()`.
inline EvalTable correlation_table(const LabelSet& labels, const ScoreMatrix& scores,
                                   Variant variant, const EvalOptions& opts = {}) {
  if (scores.rows.size() != labels.records().size()) {
    throw InputError("correlation_table: scores are not aligned with the label records");
  }
  EvalTable table;
  table.variant = to_string(variant);

  LabelSet eval_labels = labels;
  ScoreMatrix eval_scores = scores;
  if (variant == Variant::kHighAgreement) {
    AgreementResult filtered = agreement_filter(labels, opts.agreement_threshold);
    if (!filtered.dropped.empty()) {
      table.notes.push_back(fmt::format("{} images without a usable rater pair were dropped",
                                        filtered.dropped.size()));
    }
    eval_scores = align_scores(scores, filtered.labels);
    eval_labels = std::move(filtered.labels);
  }

  const auto& records = eval_labels.records();
  std::vector<double> targets(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) targets[i] = mean_rating(records[i]);

  std::vector<std::size_t> calib_rows, eval_rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool calib = opts.calibration_fraction > 0.0 &&
                       detail::unit_hash(records[i].image_id, opts.seed) < opts.calibration_fraction;
    (calib ? calib_rows : eval_rows).push_back(i);
  }
  if (opts.calibration_fraction <= 0.0) calib_rows = eval_rows;

  table.columns = eval_labels.categories();
  table.columns.push_back("all");
  std::map<std::string, std::vector<std::size_t>> col_rows, col_calib;
  for (std::size_t i : eval_rows) {
    col_rows[eval_labels.category_of(records[i])].push_back(i);
    col_rows["all"].push_back(i);
  }
  for (std::size_t i : calib_rows) {
    col_calib[eval_labels.category_of(records[i])].push_back(i);
    col_calib["all"].push_back(i);
  }

  std::vector<std::size_t> all_idx(records.size());
  for (std::size_t i = 0; i < all_idx.size(); ++i) all_idx[i] = i;
  const ScoreColumns columns = columns_of(eval_scores, all_idx);

  for (Construct c : matrix_constructs(eval_scores)) {
    table.row_names.push_back(name(c));
    std::vector<Cell> row;
    for (const auto& col : table.columns) {
      row.push_back(detail::spearman_cell(columns.at(c), targets, col_rows[col]));
    }
    table.cells.push_back(std::move(row));
  }

  auto subset = [&](const std::vector<std::size_t>& rows) {
    ScoreColumns out;
    for (const auto& [c, col] : columns) {
      auto& dst = out[c];
      for (std::size_t r : rows) dst.push_back(col[r]);
    }
    return out;
  };
  auto subset_targets = [&](const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    for (std::size_t r : rows) out.push_back(targets[r]);
    return out;
  };

  for (const auto& combo : opts.combinations) {
    table.row_names.push_back(combo.name());
    std::vector<Cell> row(table.columns.size());

    // Fit scopes: one global fit, or one per column.
    std::vector<std::string> scopes = {"all"};
    if (opts.per_category_fit) scopes = table.columns;
    for (const auto& scope : scopes) {
      std::vector<std::string> served;
      if (opts.per_category_fit) {
        served = {scope};
      } else {
        served = table.columns;
      }
      std::vector<std::optional<double>> combined(records.size());
      try {
        const auto& fit_rows = col_calib[scope];
        const Calibration cal =
            calibrate_weights(subset(fit_rows), subset_targets(fit_rows), combo.constructs);
        if (cal.uniform_fallback) {
          table.notes.push_back(fmt::format("{} ({}): no positively correlated construct; "
                                            "uniform weights used", combo.name(), scope));
        }
        std::vector<std::size_t> norm_rows = fit_rows;
        if (opts.calibration_fraction > 0.0) {
          for (const auto& s : served) {
            norm_rows.insert(norm_rows.end(), col_rows[s].begin(), col_rows[s].end());
          }
        }
        const Normalizers norms = compute_normalizers(subset(norm_rows));
        for (const auto& [c, w] : cal.weights.weights) table.weights[combo.name()][scope][name(c)] = w;
        for (const auto& s : served) {
          for (std::size_t r : col_rows[s]) {
            combined[r] = combine(eval_scores.rows[r].scores, cal.weights, norms);
          }
        }
      } catch (const std::exception& e) {
        table.notes.push_back(fmt::format("{} ({}): not computed: {}", combo.name(), scope, e.what()));
      }
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (std::find(served.begin(), served.end(), table.columns[c]) == served.end()) continue;
        row[c] = detail::spearman_cell(combined, targets, col_rows[table.columns[c]]);
      }
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

/// Partial correlations between constructs over records where all of them are present.
inline CorrelationMatrix construct_partial_table(const ScoreMatrix& scores,
                                                 PartialMode mode = PartialMode::kRaw) {
  const auto constructs = matrix_constructs(scores);
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> series;
  for (Construct c : constructs) names.push_back(name(c));
  for (const auto& row : scores.rows) {
    bool complete = true;
    for (Construct c : constructs) complete = complete && row.scores.get(c).has_value();
    if (!complete) continue;
    for (Construct c : constructs) series[name(c)].push_back(*row.scores.get(c));
  }
  if (series.empty()) throw StatsError("partial correlation: no record has every construct score");
  return construct_partial_matrix(names, series, mode);
}

// ---------------------------------------------------------------------------
// Rendering

enum class Format { kCsv, kMarkdown, kJson };

inline std::string extension(Format f) {
  switch (f) {
    case Format::kCsv: return "csv";
    case Format::kMarkdown: return "md";
    case Format::kJson: return "json";
  }
  return "";
}

inline constexpr const char* kMissingCell = "—";

namespace detail {

inline std::string fixed3(double v) { return fmt::format("{:.3f}", v + 0.0); }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

inline std::string grid_csv(const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& body) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += csv_field(fields[i]);
    }
    out.push_back('\n');
  };
  line(header);
  for (const auto& r : body) line(r);
  return out;
}

inline std::string grid_markdown(const std::vector<std::string>& header,
                                 const std::vector<std::vector<std::string>>& body) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    out += "|";
    for (const auto& f : fields) out += " " + f + " |";
    out.push_back('\n');
  };
  line(header);
  out += "|---|";
  for (std::size_t i = 1; i < header.size(); ++i) out += "---:|";
  out.push_back('\n');
  for (const auto& r : body) line(r);
  return out;
}

inline std::vector<std::vector<std::string>> eval_body(const EvalTable& t) {
  std::vector<std::vector<std::string>> body;
  for (std::size_t r = 0; r < t.row_names.size(); ++r) {
    std::vector<std::string> fields = {t.row_names[r]};
    for (const auto& cell : t.cells[r]) {
      fields.push_back(cell.value && cell.n >= 3 ? fixed3(*cell.value) : kMissingCell);
    }
    body.push_back(std::move(fields));
  }
  return body;
}

}  // namespace detail

inline std::string render(const EvalTable& t, Format format) {
  std::vector<std::string> header = {"model"};
  header.insert(header.end(), t.columns.begin(), t.columns.end());
  switch (format) {
    case Format::kCsv: return detail::grid_csv(header, detail::eval_body(t));
    case Format::kMarkdown: return detail::grid_markdown(header, detail::eval_body(t));
    case Format::kJson: break;
  }
  ordered_json j;
  j["table"] = "alignment";
  j["variant"] = t.variant;
  j["columns"] = t.columns;
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < t.row_names.size(); ++r) {
    ordered_json cells = ordered_json::array();
    for (const auto& cell : t.cells[r]) {
      ordered_json c;
      c["value"] = cell.value ? ordered_json(*cell.value) : ordered_json(nullptr);
      c["n"] = cell.n;
      cells.push_back(c);
    }
    ordered_json row;
    row["name"] = t.row_names[r];
    row["cells"] = cells;
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["weights"] = t.weights;
  j["notes"] = t.notes;
  return j.dump(2) + "\n";
}

inline EvalTable parse_eval_table(const std::string& text) {
  EvalTable t;
  try {
    const json j = json::parse(text);
    t.variant = j.at("variant").get<std::string>();
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
      t.row_names.push_back(row.at("name").get<std::string>());
      std::vector<Cell> cells;
      for (const auto& c : row.at("cells")) {
        Cell cell;
        cell.n = c.at("n").get<std::size_t>();
        if (!c.at("value").is_null()) cell.value = c.at("value").get<double>();
        cells.push_back(cell);
      }
      if (cells.size() != t.columns.size()) throw InputError("row width differs from columns");
      t.cells.push_back(std::move(cells));
    }
    t.weights = j.at("weights")
                    .get<std::map<std::string, std::map<std::string, std::map<std::string, double>>>>();
    t.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed evaluation table: ") + e.what());
  }
  return t;
}

inline std::string render(const CorrelationMatrix& m, Format format) {
  std::vector<std::string> header = {"construct"};
  header.insert(header.end(), m.names.begin(), m.names.end());
  std::vector<std::vector<std::string>> body;
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    std::vector<std::string> fields = {m.names[i]};
    for (double v : m.values[i]) fields.push_back(detail::fixed3(v));
    body.push_back(std::move(fields));
  }
  switch (format) {
    case Format::kCsv: return detail::grid_csv(header, body);
    case Format::kMarkdown: return detail::grid_markdown(header, body);
    case Format::kJson: break;
  }
  ordered_json j;
  j["table"] = "partial_correlation";
  j["names"] = m.names;
  j["values"] = m.values;
  j["n"] = m.sample_size;
  return j.dump(2) + "\n";
}

inline CorrelationMatrix parse_correlation_matrix(const std::string& text) {
  try {
    const json j = json::parse(text);
    CorrelationMatrix m;
    m.names = j.at("names").get<std::vector<std::string>>();
    m.values = j.at("values").get<std::vector<std::vector<double>>>();
    m.sample_size = j.at("n").get<std::size_t>();
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed partial correlation table: ") + e.what());
  }
}

inline std::string render(const StatsTable& t, Format format) {
  const std::vector<std::string> header = {"category", "images", "labels", "vocab",
                                           "rating_mean", "rating_sd"};
  std::vector<std::vector<std::string>> body;
  for (const auto& r : t.rows) {
    body.push_back({r.name, std::to_string(r.image_count), std::to_string(r.label_count),
                    std::to_string(r.vocabulary_size), fmt::format("{:.2f}", r.rating_mean),
                    fmt::format("{:.2f}", r.rating_sd)});
  }
  switch (format) {
    case Format::kCsv: return detail::grid_csv(header, body);
    case Format::kMarkdown: return detail::grid_markdown(header, body);
    case Format::kJson: break;
  }
  ordered_json j;
  j["table"] = "dataset_stats";
  ordered_json rows = ordered_json::array();
  for (const auto& r : t.rows) {
    ordered_json row;
    row["category"] = r.name;
    row["images"] = r.image_count;
    row["labels"] = r.label_count;
    row["vocab"] = r.vocabulary_size;
    row["ratings"] = r.rating_count;
    row["rating_mean"] = r.rating_mean;
    row["rating_sd"] = r.rating_sd;
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

inline StatsTable parse_stats_table(const std::string& text) {
  try {
    const json j = json::parse(text);
    StatsTable t;
    for (const auto& row : j.at("rows")) {
      StatsRow r;
      r.name = row.at("category").get<std::string>();
      r.image_count = row.at("images").get<std::size_t>();
      r.label_count = row.at("labels").get<std::size_t>();
      r.vocabulary_size = row.at("vocab").get<std::size_t>();
      r.rating_count = row.at("ratings").get<std::size_t>();
      r.rating_mean = row.at("rating_mean").get<double>();
      r.rating_sd = row.at("rating_sd").get<double>();
      t.rows.push_back(r);
    }
    return t;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed dataset statistics table: ") + e.what());
  }
}

}  // namespace cogscore
