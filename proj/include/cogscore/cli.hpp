#pragma once

// cogscore command line: stats | score | calibrate | evaluate | report.
//
// Exit codes: 0 success, 1 internal error, 2 bad input or configuration.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "cogscore/config.hpp"
#include "cogscore/dataset.hpp"
#include "cogscore/error.hpp"
#include "cogscore/jsonl.hpp"
#include "cogscore/pipeline.hpp"
#include "cogscore/providers.hpp"
#include "cogscore/report.hpp"
#include "cogscore/scorers.hpp"

namespace cogscore {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitBadInput = 2;

namespace cli {

class Runner {
 public:
  Runner(RunConfig cfg, std::ostream& out, std::shared_ptr<spdlog::logger> log)
      : cfg_(std::move(cfg)), out_(out), log_(std::move(log)) {}

  void stats() {
    const LabelSet labels = load_labels_checked();
    const StatsTable table = dataset_stats(labels, cfg_.sd_kind);
    write_all("table1", table);
    const auto& all = table.rows.back();
    out_ << fmt::format("images={} labels={} vocab={} rating={:.2f}±{:.2f}\n", all.image_count,
                        all.label_count, all.vocabulary_size, all.rating_mean, all.rating_sd);
  }

  void score() {
    const LabelSet labels = load_labels_checked();
    ScoreMatrix m = score_all(labels);
    const auto used = attach_combinations(m, labels, cfg_.eval.combinations);
    log_weights("in-sample", used);
    const auto path = cfg_.scores_path.value_or(cfg_.out_dir / "scores.jsonl");
    write_file_atomic(path, serialize_scores(m));
    std::size_t missing_c = 0;
    for (const auto& row : m.rows) missing_c += row.scores.theta_c ? 0 : 1;
    out_ << fmt::format("scored {} records; theta_c missing for {}; coverage gaps {}; wrote {}\n",
                        m.rows.size(), missing_c, gaps_, path.string());
  }

  void calibrate() {
    const LabelSet labels = load_labels_checked();
    const ScoreMatrix m = scores_for(labels);
    ordered_json j;
    for (Variant v : {Variant::kFull, Variant::kHighAgreement}) {
      const EvalTable t = correlation_table(labels, m, v, cfg_.eval);
      j[to_string(v)] = t.weights;
      for (const auto& note : t.notes) log_->warn("{}: {}", to_string(v), note);
    }
    const auto text = j.dump(2) + "\n";
    write_file_atomic(cfg_.out_dir / "weights.json", text);
    out_ << text;
  }

  void evaluate() {
    const LabelSet labels = load_labels_checked();
    const ScoreMatrix m = scores_for(labels);
    const EvalTable full = correlation_table(labels, m, Variant::kFull, cfg_.eval);
    const EvalTable high = correlation_table(labels, m, Variant::kHighAgreement, cfg_.eval);
    for (const auto* t : {&full, &high}) {
      for (const auto& [combo, scopes] : t->weights) {
        for (const auto& [scope, w] : scopes) {
          std::string desc;
          for (const auto& [c, x] : w) desc += fmt::format(" {}={:.4f}", c, x);
          log_->info("{} {} weights ({}):{}", t->variant, combo, scope, desc);
        }
      }
      for (const auto& note : t->notes) log_->warn("{}: {}", t->variant, note);
    }
    write_all("table2", full);
    write_all("table3", high);
    std::optional<CorrelationMatrix> partial;
    try {
      partial = construct_partial_table(m, cfg_.partial_mode);
      write_all("table4", *partial);
    } catch (const StatsError& e) {
      log_->warn("partial correlation table not written: {}", e.what());
    }
    out_ << "full\n" << render(full, Format::kMarkdown);
    out_ << "high agreement (threshold " << cfg_.eval.agreement_threshold << ")\n"
         << render(high, Format::kMarkdown);
    if (partial) out_ << "partial correlations\n" << render(*partial, Format::kMarkdown);
  }

  /// Re-renders CSV and Markdown from the JSON tables already in the output directory.
  void report() {
    std::size_t found = 0;
    auto read = [&](const std::string& stem) -> std::optional<std::string> {
      std::ifstream in(cfg_.out_dir / (stem + ".json"));
      if (!in) return std::nullopt;
      ++found;
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    if (auto s = read("table1")) write_all("table1", parse_stats_table(*s));
    for (const char* stem : {"table2", "table3"}) {
      if (auto s = read(stem)) write_all(stem, parse_eval_table(*s));
    }
    if (auto s = read("table4")) write_all("table4", parse_correlation_matrix(*s));
    if (found == 0) {
      throw InputError("no table*.json files in " + cfg_.out_dir.string() +
                       "; run stats or evaluate first");
    }
    out_ << fmt::format("rendered {} tables in {}\n", found, cfg_.out_dir.string());
  }

 private:
  const std::filesystem::path& require(const std::optional<std::filesystem::path>& p,
                                       const char* key) {
    if (!p) throw InputError(fmt::format("missing required path {}", key));
    if (!std::filesystem::exists(*p)) {
      throw InputError(fmt::format("{} does not exist: {}", key, p->string()));
    }
    return *p;
  }

  LabelSet load_labels_checked() {
    const auto& path = require(cfg_.labels_path, "paths.labels");
    std::optional<std::filesystem::path> images;
    if (cfg_.images_path) images = require(cfg_.images_path, "paths.images");
    LabelLoadResult res = load_labels(path, cfg_.merge_policy, images);
    if (!res.rejections.empty()) {
      log_->warn("{} label lines rejected; see {}", res.rejections.size(),
                 (cfg_.out_dir / "rejections.jsonl").string());
      write_file_atomic(cfg_.out_dir / "rejections.jsonl", serialize_rejections(res.rejections));
    }
    for (const auto& w : res.warnings) log_->debug("{}", w);
    return std::move(res.labels);
  }

  ScoreMatrix score_all(const LabelSet& labels) {
    const auto captions = load_captions(require(cfg_.captions_path, "paths.captions"),
                                        cfg_.merge_policy);
    for (const auto& entry : captions.log) log_->info("{}", entry);
    const auto text = load_embeddings(require(cfg_.text_embeddings_path, "paths.text_embeddings"),
                                      EmbeddingKind::kText);
    const auto image = load_embeddings(
        require(cfg_.image_embeddings_path, "paths.image_embeddings"), EmbeddingKind::kImage);
    if (text.dim != image.dim) {
      throw InputError(fmt::format("text embedding dim {} differs from image embedding dim {}",
                                   text.dim, image.dim));
    }
    const auto lexicon = load_lexicon(require(cfg_.lexicon_path, "paths.lexicon"));

    const CoverageReport coverage = check_coverage(labels, captions.corpora, text, image);
    gaps_ = coverage.uncovered_pairs();
    if (gaps_ > 0) {
      std::string list;
      for (const auto& g : coverage.gaps) {
        list += fmt::format("  {}\t{}\tmissing {}\n", g.image_id, g.label, g.missing);
      }
      if (!cfg_.allow_gaps) {
        throw InputError(fmt::format("{} (image, label) pairs lack inputs:\n{}", gaps_, list));
      }
      if (coverage.fraction_covered() < cfg_.min_coverage) {
        throw InputError(fmt::format("coverage {:.4f} below coverage.min_fraction {}:\n{}",
                                     coverage.fraction_covered(), cfg_.min_coverage, list));
      }
      log_->warn("{} (image, label) pairs lack inputs; their scores are excluded pairwise", gaps_);
    }
    if (cfg_.scoring.enable_word_feature) {
      log_->warn("theta_r is an interpretation (label length over a cap), not a defined construct");
    }
    return score_records({labels, captions.corpora, text, image, lexicon}, cfg_.scoring);
  }

  ScoreMatrix scores_for(const LabelSet& labels) {
    if (cfg_.scores_path && std::filesystem::exists(*cfg_.scores_path)) {
      std::vector<std::string> missing;
      ScoreMatrix m = align_scores(load_scores(*cfg_.scores_path), labels, &missing);
      if (!missing.empty()) {
        if (!cfg_.allow_gaps) {
          throw InputError(fmt::format("{} records have no line in {}", missing.size(),
                                       cfg_.scores_path->string()));
        }
        log_->warn("{} records have no score line; excluded pairwise", missing.size());
      }
      return m;
    }
    return score_all(labels);
  }

  template <typename Table>
  void write_all(const std::string& stem, const Table& table) {
    for (Format f : {Format::kCsv, Format::kMarkdown, Format::kJson}) {
      write_file_atomic(cfg_.out_dir / (stem + "." + extension(f)), render(table, f));
    }
  }

  void log_weights(const std::string& scope, const std::map<std::string, Calibration>& used) {
    for (const auto& [combo, cal] : used) {
      std::string desc;
      for (const auto& [c, w] : cal.weights.weights) desc += fmt::format(" {}={:.4f}", name(c), w);
      log_->info("{} weights ({}):{}", combo, scope, desc);
    }
  }

  RunConfig cfg_;
  std::ostream& out_;
  std::shared_ptr<spdlog::logger> log_;
  std::size_t gaps_ = 0;
};

inline spdlog::level::level_enum log_level_from_env() {
  const char* env = std::getenv("COGSCORE_LOG");
  if (env == nullptr || *env == '\0') return spdlog::level::warn;
  return spdlog::level::from_str(env);
}

}  // namespace cli

/// Runs one command. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Cognitive complexity scoring and evaluation of image-elicited labels", "cogscore"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir, labels, images, captions, text_emb, image_emb, lexicon, scores;
  std::optional<double> threshold;
  bool allow_gaps = false;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config of flat dotted keys");
    sub->add_option("--out", out_dir, "output directory (paths.out)");
    sub->add_flag("--allow-gaps", allow_gaps, "exclude records lacking inputs instead of aborting");
    sub->add_option("--agreement-threshold", threshold, "high-agreement cutoff in [-1, 1]");
    sub->add_option("--labels", labels, "labels.jsonl (paths.labels)");
    sub->add_option("--images", images, "images.jsonl (paths.images)");
    sub->add_option("--captions", captions, "captions.jsonl (paths.captions)");
    sub->add_option("--text-embeddings", text_emb, "text embeddings (paths.text_embeddings)");
    sub->add_option("--image-embeddings", image_emb, "image embeddings (paths.image_embeddings)");
    sub->add_option("--lexicon", lexicon, "concreteness lexicon TSV (paths.lexicon)");
    sub->add_option("--scores", scores, "scores.jsonl (paths.scores)");
    sub->add_option("--set", overrides, "override any config key: key=value")->take_all();
  };
  std::map<std::string, CLI::App*> subs;
  for (const char* name : {"stats", "score", "calibrate", "evaluate", "report"}) {
    subs[name] = app.add_subcommand(name);
    add_common(subs[name]);
  }
  subs["stats"]->description("dataset statistics (table1.*)");
  subs["score"]->description("construct scores for every record (scores.jsonl)");
  subs["calibrate"]->description("combination weights per dataset variant (weights.json)");
  subs["evaluate"]->description("alignment and partial correlation tables (table2-4.*)");
  subs["report"]->description("re-render CSV and Markdown from table*.json");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "cogscore: " << e.what() << "\n";
    return kExitBadInput;
  }

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("cogscore", sink);
  log->set_pattern("[%l] %v");
  try {
    log->set_level(cli::log_level_from_env());

    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (out_dir) cfg.out_dir = *out_dir;
    if (labels) cfg.labels_path = *labels;
    if (images) cfg.images_path = *images;
    if (captions) cfg.captions_path = *captions;
    if (text_emb) cfg.text_embeddings_path = *text_emb;
    if (image_emb) cfg.image_embeddings_path = *image_emb;
    if (lexicon) cfg.lexicon_path = *lexicon;
    if (scores) cfg.scores_path = *scores;
    for (const auto& o : overrides) cfg.set_from_text(o);
    if (threshold) cfg.eval.agreement_threshold = *threshold;
    if (allow_gaps) cfg.allow_gaps = true;
    cfg.validate();

    cli::Runner runner(std::move(cfg), out, log);
    if (subs["stats"]->parsed()) runner.stats();
    else if (subs["score"]->parsed()) runner.score();
    else if (subs["calibrate"]->parsed()) runner.calibrate();
    else if (subs["evaluate"]->parsed()) runner.evaluate();
    else if (subs["report"]->parsed()) runner.report();
  } catch (const InputError& e) {
    err << "cogscore: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const StatsError& e) {
    err << "cogscore: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "cogscore: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace cogscore
