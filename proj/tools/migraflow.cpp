// migraflow: internal-migration analytics for scholarly authorship records.
//
// Subcommands cover the full pipeline (run, report) and every individual
// stage (ingest .. alluvial), plus a synthetic-corpus generator for
// benchmarking without access to proprietary bibliometric extracts.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "migraflow/corpus_io.hpp"
#include "migraflow/csv.hpp"
#include "migraflow/gazetteer.hpp"
#include "migraflow/pipeline.hpp"
#include "migraflow/synth.hpp"
#include "migraflow/util.hpp"

namespace fs = std::filesystem;
using namespace migraflow;

namespace {

bool parse_window(const std::string& text, YearWindow& window) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return false;
  const auto a = parse_int(text.substr(0, colon));
  const auto b = parse_int(text.substr(colon + 1));
  if (!a || !b) return false;
  window.start = static_cast<int>(*a);
  window.end = static_cast<int>(*b);
  return true;
}

int run_stage(const char* name, const std::function<void()>& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << name << " failed [" << e.code() << "]: " << e.what() << "\n";
    return kExitStageFailure;
  } catch (const std::exception& e) {
    std::cerr << name << " failed: " << e.what() << "\n";
    return kExitStageFailure;
  }
}

void add_common_stage_options(CLI::App* cmd, PipelineConfig& cfg, std::string& window_text) {
  cmd->add_option("--out", cfg.output_dir, "artifact directory")->required();
  cmd->add_option("--window", window_text, "study window, e.g. 1996:2018");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"internal-migration analytics for scholarly authorship records"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  std::string window_text;
  std::string input_path;

  // --- synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
  SynthConfig synth_cfg;
  std::uint64_t synth_seed = 42;
  std::string synth_out = "synth";
  std::size_t hard_label_count = 0;
  synth_cmd->add_option("--persons", synth_cfg.persons, "number of synthetic persons");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--move-prob", synth_cfg.move_prob_per_year, "per-year move probability");
  synth_cmd->add_option("--dropout", synth_cfg.field_dropout_rate, "affiliation field dropout rate");
  synth_cmd->add_option("--typo-rate", synth_cfg.typo_rate, "typo rate per surviving field");
  synth_cmd->add_option("--merged-rate", synth_cfg.merged_identity_rate,
                        "merged-identity rate per person");
  synth_cmd->add_option("--max-gap", synth_cfg.max_gap_years, "max years between publications");
  synth_cmd->add_option("--hard-labels", hard_label_count,
                        "emit this many ground-truth hard labels");
  synth_cmd->add_option("--window", window_text, "study window, e.g. 1996:2018");

  // --- ingest --------------------------------------------------------------
  auto* ingest_cmd = app.add_subcommand("ingest", "load and validate a record file");
  ingest_cmd->add_option("path", input_path, "records file")->required();
  ingest_cmd->add_option("--format", cfg.input_format, "csv or jsonl");
  add_common_stage_options(ingest_cmd, cfg, window_text);

  // --- disambiguate ----------------------------------------------------------
  auto* disambig_cmd = app.add_subcommand("disambiguate", "split suspicious author ids");
  disambig_cmd->add_option("--threshold", cfg.suspicious_threshold,
                           "suspicious publication-count threshold");
  disambig_cmd->add_option("--linkage", cfg.linkage, "average or complete");
  disambig_cmd->add_option("--cutoff", cfg.distance_threshold, "cluster distance threshold");
  add_common_stage_options(disambig_cmd, cfg, window_text);

  // --- resolve ----------------------------------------------------------------
  auto* resolve_cmd = app.add_subcommand("resolve", "rule-based state inference");
  resolve_cmd->add_option("--gazetteer", cfg.gazetteer_dir, "gazetteer CSV directory");
  resolve_cmd->add_option("--abbreviations", cfg.abbreviations_path, "abbreviation table CSV");
  add_common_stage_options(resolve_cmd, cfg, window_text);

  // --- train / classify -------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train the state classifier");
  train_cmd->add_option("--epochs", cfg.train.epochs, "training epochs");
  train_cmd->add_option("--learning-rate", cfg.train.learning_rate, "learning rate");
  train_cmd->add_option("--dropout", cfg.train.dropout, "hidden dropout rate");
  train_cmd->add_option("--seed", cfg.train.seed, "training seed");
  train_cmd->add_option("--vocab-size", cfg.vocab_size, "vocabulary cap");
  train_cmd->add_option("--hard-labels", cfg.hard_labels_path, "manually labeled records CSV");
  train_cmd->add_option("--cv-folds", cfg.cv_folds, "cross-validation folds (0 = skip)");
  add_common_stage_options(train_cmd, cfg, window_text);

  auto* classify_cmd = app.add_subcommand("classify", "predict states for unresolved records");
  classify_cmd->add_option("--discard", cfg.discard_fraction,
                           "lowest-confidence discard fraction of the corpus");
  classify_cmd->add_option("--epochs", cfg.train.epochs, "training epochs");
  classify_cmd->add_option("--seed", cfg.train.seed, "training seed");
  classify_cmd->add_option("--hard-labels", cfg.hard_labels_path, "manually labeled records CSV");
  classify_cmd->add_option("--cv-folds", cfg.cv_folds, "cross-validation folds (0 = skip)");
  add_common_stage_options(classify_cmd, cfg, window_text);

  // --- moves / presence -------------------------------------------------------
  auto* moves_cmd = app.add_subcommand("moves", "detect migration events");
  add_common_stage_options(moves_cmd, cfg, window_text);
  auto* presence_cmd = app.add_subcommand("presence", "scholar stock counts with padding");
  add_common_stage_options(presence_cmd, cfg, window_text);

  // --- measures ----------------------------------------------------------------
  auto* measures_cmd = app.add_subcommand("measures", "demographic migration indices");
  std::string scope = "both";
  measures_cmd->add_option("--scope", scope, "restrict measures.csv areas: state, region or both");
  measures_cmd->add_option("--trim", cfg.trim_fraction, "low-movement trim fraction");
  measures_cmd->add_flag("--trim-per-year", cfg.trim_per_year,
                         "apply the trim within each year instead of pooled");
  measures_cmd->add_option("--pop", cfg.population_path, "population CSV")->required();
  measures_cmd->add_option("--reference-year", cfg.reference_year, "academic-age reference year");
  measures_cmd->add_option("--regions", cfg.region_map_path, "state->region table CSV");
  add_common_stage_options(measures_cmd, cfg, window_text);

  // --- network / communities / alluvial ----------------------------------------
  auto* network_cmd = app.add_subcommand("network", "build migration networks and statistics");
  std::vector<std::string> window_specs;
  network_cmd->add_option("--net-window", window_specs,
                          "network window (start:end), repeatable; default full + yearly");
  network_cmd->add_option("--trials", cfg.community_trials, "community detection restarts");
  network_cmd->add_option("--seed", cfg.community_seed, "community detection seed");
  network_cmd->add_option("--teleport", cfg.teleport, "random-walk teleportation probability");
  add_common_stage_options(network_cmd, cfg, window_text);

  auto* communities_cmd = app.add_subcommand("communities", "map-equation communities per window");
  communities_cmd->add_option("--net-window", window_specs,
                              "network window (start:end), repeatable");
  communities_cmd->add_option("--trials", cfg.community_trials, "community detection restarts");
  communities_cmd->add_option("--seed", cfg.community_seed, "community detection seed");
  communities_cmd->add_option("--teleport", cfg.teleport, "random-walk teleportation probability");
  add_common_stage_options(communities_cmd, cfg, window_text);

  auto* alluvial_cmd = app.add_subcommand("alluvial", "export alluvial diagram data");
  alluvial_cmd->add_option("--coverage", cfg.alluvial_coverage, "flow coverage cutoff");
  add_common_stage_options(alluvial_cmd, cfg, window_text);

  // --- run / report -------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "run the full pipeline from a config file");
  std::string config_path;
  run_cmd->add_option("--config", config_path, "pipeline config JSON")->required();

  auto* report_cmd = app.add_subcommand("report", "emit summary tables from a manifest");
  std::string manifest_path;
  report_cmd->add_option("--manifest", manifest_path, "manifest JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  if (!window_text.empty() && !parse_window(window_text, cfg.window)) {
    std::cerr << "bad --window, expected start:end\n";
    return kExitConfigError;
  }
  for (const auto& spec : window_specs) {
    YearWindow w;
    if (!parse_window(spec, w)) {
      std::cerr << "bad --net-window, expected start:end\n";
      return kExitConfigError;
    }
    cfg.network_windows.emplace_back(w.start, w.end);
  }
  cfg.input_path = input_path;

  if (synth_cmd->parsed()) {
    return run_stage("synth", [&] {
      if (!window_text.empty()) synth_cfg.window = cfg.window;
      fs::create_directories(synth_out);
      const auto gazetteer = Gazetteer::load_dir(default_gazetteer_dir());
      const auto [corpus, truth] = synthesize(synth_cfg, gazetteer, synth_seed);
      write_file((fs::path(synth_out) / "corpus.csv").string(),
                 export_corpus(corpus, CorpusFormat::Csv));
      write_file((fs::path(synth_out) / "truth.json").string(), ground_truth_to_json(truth));

      csv::Table pop;
      pop.header = {"state_code", "year", "population"};
      for (const auto& [key, value] : synthesize_population(synth_cfg.window, synth_seed))
        pop.rows.push_back(
            {std::string(state_code(key.first)), std::to_string(key.second), fmt_double(value)});
      csv::write((fs::path(synth_out) / "population.csv").string(), pop);

      if (hard_label_count > 0) {
        // Emulate manually labeled hard cases: records with the least
        // affiliation signal first.
        std::vector<std::pair<int, const AuthorshipRecord*>> ranked;
        for (const auto& rec : corpus.records) {
          int fields = 0;
          for (const std::string* f :
               {&rec.org_unit, &rec.institution, &rec.street_address, &rec.city, &rec.postcode})
            fields += !f->empty();
          ranked.emplace_back(fields, &rec);
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        csv::Table hard;
        hard.header = {"record_id", "state_code"};
        for (std::size_t i = 0; i < std::min(hard_label_count, ranked.size()); ++i)
          hard.rows.push_back({ranked[i].second->record_id,
                               std::string(state_code(
                                   truth.state_of_record.at(ranked[i].second->record_id)))});
        csv::write((fs::path(synth_out) / "hard_labels.csv").string(), hard);
      }
      std::cout << "synth: " << corpus.records.size() << " records for " << synth_cfg.persons
                << " persons in " << synth_out << "\n";
    });
  }

  auto stage_with_dir = [&](const char* name, const std::function<void()>& fn) {
    return run_stage(name, [&] {
      fs::create_directories(cfg.output_dir);
      fn();
    });
  };

  if (ingest_cmd->parsed()) return stage_with_dir("ingest", [&] { stages::ingest(cfg); });
  if (disambig_cmd->parsed())
    return stage_with_dir("disambiguate", [&] { stages::disambiguate(cfg); });
  if (resolve_cmd->parsed()) return stage_with_dir("resolve", [&] { stages::resolve(cfg); });
  if (train_cmd->parsed() || classify_cmd->parsed())
    return stage_with_dir("classify", [&] { stages::classify(cfg); });
  if (moves_cmd->parsed() || presence_cmd->parsed())
    return stage_with_dir("mobility", [&] { stages::mobility(cfg); });
  if (measures_cmd->parsed()) {
    return stage_with_dir("measures", [&] {
      stages::measures(cfg);
      if (scope == "both") return;
      if (scope != "state" && scope != "region")
        throw Error("CONFIG_BAD_SCOPE", "--scope must be state, region or both");
      const std::string path = (fs::path(cfg.output_dir) / "measures.csv").string();
      auto table = csv::read(path);
      const int c_area = table.column("area");
      std::vector<std::vector<std::string>> kept;
      for (auto& row : table.rows) {
        const auto& area = row[static_cast<std::size_t>(c_area)];
        const bool is_state = state_from_code(area).has_value();
        if (area == "MX" || (scope == "state") == is_state) kept.push_back(std::move(row));
      }
      table.rows = std::move(kept);
      csv::write(path, table);
    });
  }
  if (network_cmd->parsed() || communities_cmd->parsed())
    return stage_with_dir("network", [&] { stages::network(cfg); });
  if (alluvial_cmd->parsed()) return stage_with_dir("alluvial", [&] { stages::alluvial(cfg); });

  if (run_cmd->parsed()) {
    PipelineConfig file_cfg;
    try {
      file_cfg = PipelineConfig::from_json_file(config_path);
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfigError;
    }
    const PipelineResult result = run_pipeline(file_cfg);
    if (result.exit_code != kExitOk) {
      std::cerr << "pipeline failed";
      if (!result.failed_stage.empty()) std::cerr << " at stage " << result.failed_stage;
      std::cerr << " [" << result.error_code << "]: " << result.error_message << "\n";
    } else {
      for (const auto& stage : result.manifest.stages)
        std::cout << stage.name << (stage.skipped ? " (cached)" : "") << "\n";
      std::cout << "manifest: " << (fs::path(file_cfg.output_dir) / "manifest.json").string()
                << "\n";
    }
    return result.exit_code;
  }

  if (report_cmd->parsed()) {
    return run_stage("report", [&] {
      for (const auto& warning : write_report(manifest_path))
        std::cerr << "warning: " << warning << "\n";
      std::cout << "report written next to " << manifest_path << "\n";
    });
  }

  return kExitOk;
}
