#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "migraflow/mlp.hpp"
#include "migraflow/mobility.hpp"
#include "migraflow/record.hpp"

namespace migraflow {

// Everything one end-to-end run needs, loadable from a JSON config file.
struct PipelineConfig {
  std::string input_path;
  std::string input_format = "csv";
  std::string gazetteer_dir;     // empty: bundled tables
  std::string region_map_path;   // empty: bundled table
  std::string abbreviations_path;  // empty: builtin table
  std::string population_path;   // checked at the measures stage
  std::string hard_labels_path;  // optional manually labeled hard cases
  std::string output_dir;
  YearWindow window{1996, 2018};

  // disambig
  int suspicious_threshold = 276;
  std::string linkage = "average";
  double distance_threshold = 0.5;

  // classifier
  TrainConfig train;
  int vocab_size = kDefaultVocabSize;
  double discard_fraction = 0.01;
  double hard_label_train_fraction = 0.7;
  int cv_folds = 0;  // 0 skips in-pipeline cross-validation

  // measures
  double trim_fraction = 0.15;
  bool trim_per_year = false;  // default trims over the pooled observations
  int reference_year = 2019;

  // networks; empty windows mean the full effective window plus every
  // single-year cross-section
  std::vector<std::pair<int, int>> network_windows;
  int community_trials = 50;
  std::uint64_t community_seed = 7;
  double teleport = 0.15;
  double alluvial_coverage = 0.99;

  static PipelineConfig from_json_file(const std::string& path);
  std::string to_json() const;
  void validate() const;  // throws CONFIG_*
};

struct ArtifactFile {
  std::string path;  // relative to the output directory
  std::string hash;  // fnv1a64 of the file bytes
};

struct StageRecord {
  std::string name;
  std::string inputs_hash;
  std::vector<ArtifactFile> artifacts;
  bool skipped = false;  // satisfied by a previous run's artifacts
};

struct Manifest {
  std::string config_hash;
  std::vector<StageRecord> stages;

  std::string to_json() const;
  static Manifest from_json(const std::string& text);
  const StageRecord* stage(const std::string& name) const;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitStageFailure = 2;

struct PipelineResult {
  int exit_code = kExitOk;
  Manifest manifest;
  std::string failed_stage;
  std::string error_code;
  std::string error_message;
};

// Runs ingest, disambiguate, resolve, classify, mobility, measures, network
// and alluvial in order, writing one artifact set per stage plus
// manifest.json. Stages whose inputs are unchanged since the last run are
// skipped. A lock file serializes runs per output directory.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Plot-ready summary tables from a completed manifest, written to
// <output_dir>/report. Missing upstream stages drop the dependent tables
// with a warning in the returned list.
std::vector<std::string> write_report(const std::string& manifest_path);

// Single-stage entry points behind the CLI subcommands. Each one reads its
// upstream artifacts from cfg.output_dir and writes its own artifact files
// there, exactly as the orchestrated run does.
namespace stages {
void ingest(const PipelineConfig& cfg);
void disambiguate(const PipelineConfig& cfg);
void resolve(const PipelineConfig& cfg);
void classify(const PipelineConfig& cfg);
void mobility(const PipelineConfig& cfg);
void measures(const PipelineConfig& cfg);
void network(const PipelineConfig& cfg);
void alluvial(const PipelineConfig& cfg);
}  // namespace stages

// Artifact readers shared by the report, the CLI and the tests.
std::vector<MoveEvent> load_moves_csv(const std::string& path);
PresenceTable load_presence_csv(const std::string& path, const YearWindow& window);
std::map<std::string, std::string> load_author_map_csv(const std::string& path);
std::map<std::string, State> load_state_assignments_csv(const std::string& path);

// The bundled default locations (editable CSV tables shipped with the repo).
std::string default_data_dir();
std::string default_gazetteer_dir();
std::string default_region_map_path();

}  // namespace migraflow
