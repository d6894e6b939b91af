#include "migraflow/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "migraflow/corpus_io.hpp"
#include "migraflow/csv.hpp"
#include "migraflow/disambig.hpp"
#include "migraflow/flownet.hpp"
#include "migraflow/gazetteer.hpp"
#include "migraflow/georesolve.hpp"
#include "migraflow/measures.hpp"
#include "migraflow/util.hpp"

namespace fs = std::filesystem;

namespace migraflow {

namespace {

std::string missing_marker() { return std::string(); }

std::string opt_str(const std::optional<double>& v) {
  return v ? fmt_double(*v) : missing_marker();
}

struct LockFile {
  explicit LockFile(const std::string& path) : path_(path) {
    if (fs::exists(path_))
      throw Error("PIPELINE_LOCKED", "another run owns " + path_ + "; remove it if stale");
    write_file(path_, "lock\n");
  }
  ~LockFile() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  std::string path_;
};

class StageRunner {
 public:
  StageRunner(const PipelineConfig& cfg, Manifest previous)
      : cfg_(cfg), previous_(std::move(previous)) {}

  Manifest& manifest() { return manifest_; }

  std::string abs_path(const std::string& rel) const {
    return (fs::path(cfg_.output_dir) / rel).string();
  }

  // Hash of an upstream stage's artifacts, for downstream input hashes.
  std::string artifact_hash(const std::string& stage_name) const {
    const StageRecord* rec = manifest_.stage(stage_name);
    if (!rec) throw Error("PIPELINE_ORDER", "stage not yet run: " + stage_name);
    std::string acc;
    for (const auto& f : rec->artifacts) acc += f.path + ":" + f.hash + ";";
    return hash_hex(fnv1a64(acc));
  }

  void run(const std::string& name, const std::string& config_slice,
           const std::vector<std::string>& files, const std::function<void()>& produce) {
    StageRecord record;
    record.name = name;
    record.inputs_hash = hash_hex(fnv1a64(name + "|" + config_slice));

    const StageRecord* prev = previous_.stage(name);
    bool reusable = prev && prev->inputs_hash == record.inputs_hash &&
                    prev->artifacts.size() == files.size();
    if (reusable) {
      for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string path = abs_path(files[i]);
        if (!fs::exists(path) || prev->artifacts[i].path != files[i] ||
            hash_hex(fnv1a64_file(path)) != prev->artifacts[i].hash) {
          reusable = false;
          break;
        }
      }
    }
    if (reusable) {
      record.artifacts = prev->artifacts;
      record.skipped = true;
      manifest_.stages.push_back(std::move(record));
      return;
    }

    produce();
    for (const auto& rel : files) {
      const std::string path = abs_path(rel);
      if (!fs::exists(path)) throw Error("STAGE_NO_ARTIFACT", name + " did not write " + rel);
      record.artifacts.push_back({rel, hash_hex(fnv1a64_file(path))});
    }
    manifest_.stages.push_back(std::move(record));
  }

 private:
  const PipelineConfig& cfg_;
  Manifest previous_;
  Manifest manifest_;
};

std::string file_hash_or_empty(const std::string& path) {
  if (path.empty() || !fs::exists(path)) return "absent";
  return hash_hex(fnv1a64_file(path));
}

std::string dir_hash(const std::string& dir) {
  std::vector<std::string> files;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  std::string acc;
  for (const auto& f : files) acc += f + ":" + hash_hex(fnv1a64_file(f)) + ";";
  return hash_hex(fnv1a64(acc));
}

std::string state_str(const std::optional<State>& s) {
  return s ? std::string(state_code(*s)) : missing_marker();
}

}  // namespace

std::string default_data_dir() { return MIGRAFLOW_DATA_DIR; }
std::string default_gazetteer_dir() {
  return (fs::path(default_data_dir()) / "gazetteer").string();
}
std::string default_region_map_path() {
  return (fs::path(default_data_dir()) / "state_regions.csv").string();
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  PipelineConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("input_path", cfg.input_path);
  get("input_format", cfg.input_format);
  get("gazetteer_dir", cfg.gazetteer_dir);
  get("region_map_path", cfg.region_map_path);
  get("abbreviations_path", cfg.abbreviations_path);
  get("population_path", cfg.population_path);
  get("hard_labels_path", cfg.hard_labels_path);
  get("output_dir", cfg.output_dir);
  if (j.contains("window")) {
    cfg.window.start = j.at("window").at(0).get<int>();
    cfg.window.end = j.at("window").at(1).get<int>();
  }
  get("suspicious_threshold", cfg.suspicious_threshold);
  get("linkage", cfg.linkage);
  get("distance_threshold", cfg.distance_threshold);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    auto tget = [&](const char* key, auto& field) {
      if (t.contains(key)) field = t.at(key).get<std::decay_t<decltype(field)>>();
    };
    tget("hidden_sizes", cfg.train.hidden_sizes);
    tget("dropout", cfg.train.dropout);
    tget("learning_rate", cfg.train.learning_rate);
    tget("momentum", cfg.train.momentum);
    tget("epochs", cfg.train.epochs);
    tget("batch_size", cfg.train.batch_size);
    tget("seed", cfg.train.seed);
  }
  get("vocab_size", cfg.vocab_size);
  get("discard_fraction", cfg.discard_fraction);
  get("hard_label_train_fraction", cfg.hard_label_train_fraction);
  get("cv_folds", cfg.cv_folds);
  get("trim_fraction", cfg.trim_fraction);
  get("trim_per_year", cfg.trim_per_year);
  get("reference_year", cfg.reference_year);
  if (j.contains("network_windows"))
    for (const auto& w : j.at("network_windows"))
      cfg.network_windows.emplace_back(w.at(0).get<int>(), w.at(1).get<int>());
  get("community_trials", cfg.community_trials);
  get("community_seed", cfg.community_seed);
  get("teleport", cfg.teleport);
  get("alluvial_coverage", cfg.alluvial_coverage);
  return cfg;
}

std::string PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["input_path"] = input_path;
  j["input_format"] = input_format;
  j["gazetteer_dir"] = gazetteer_dir;
  j["region_map_path"] = region_map_path;
  j["abbreviations_path"] = abbreviations_path;
  j["population_path"] = population_path;
  j["hard_labels_path"] = hard_labels_path;
  j["output_dir"] = output_dir;
  j["window"] = {window.start, window.end};
  j["suspicious_threshold"] = suspicious_threshold;
  j["linkage"] = linkage;
  j["distance_threshold"] = distance_threshold;
  j["train"] = {{"hidden_sizes", train.hidden_sizes},
                {"dropout", train.dropout},
                {"learning_rate", train.learning_rate},
                {"momentum", train.momentum},
                {"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"seed", train.seed}};
  j["vocab_size"] = vocab_size;
  j["discard_fraction"] = discard_fraction;
  j["hard_label_train_fraction"] = hard_label_train_fraction;
  j["cv_folds"] = cv_folds;
  j["trim_fraction"] = trim_fraction;
  j["trim_per_year"] = trim_per_year;
  j["reference_year"] = reference_year;
  j["network_windows"] = network_windows;
  j["community_trials"] = community_trials;
  j["community_seed"] = community_seed;
  j["teleport"] = teleport;
  j["alluvial_coverage"] = alluvial_coverage;
  return j.dump(2) + "\n";
}

void PipelineConfig::validate() const {
  if (input_path.empty() || !fs::exists(input_path))
    throw Error("CONFIG_INPUT_MISSING", "input file not found: " + input_path);
  if (!format_from_name(input_format))
    throw Error("CONFIG_BAD_FORMAT", "unknown input format: " + input_format);
  if (output_dir.empty()) throw Error("CONFIG_NO_OUTPUT", "output_dir is required");
  if (window.start > window.end) throw Error("CONFIG_BAD_WINDOW", "window start > end");
  if (window.effective().start > window.effective().end)
    throw Error("CONFIG_BAD_WINDOW", "window too narrow for +-2 year padding");
  if (discard_fraction < 0 || discard_fraction >= 1)
    throw Error("CONFIG_BAD_FRACTION", "discard_fraction must be in [0,1)");
  if (trim_fraction < 0 || trim_fraction >= 1)
    throw Error("CONFIG_BAD_FRACTION", "trim_fraction must be in [0,1)");
  if (hard_label_train_fraction < 0 || hard_label_train_fraction > 1)
    throw Error("CONFIG_BAD_FRACTION", "hard_label_train_fraction must be in [0,1]");
  if (linkage != "average" && linkage != "complete")
    throw Error("CONFIG_BAD_LINKAGE", "linkage must be average or complete");
  if (!(distance_threshold > 0))
    throw Error("CONFIG_BAD_THRESHOLD", "distance_threshold must be positive");
  if (suspicious_threshold < 1)
    throw Error("CONFIG_BAD_THRESHOLD", "suspicious_threshold must be >= 1");
  if (community_trials < 1) throw Error("CONFIG_BAD_TRIALS", "community_trials must be >= 1");
  if (teleport < 0 || teleport >= 1)
    throw Error("CONFIG_BAD_TELEPORT", "teleport must be in [0,1)");
  if (alluvial_coverage <= 0 || alluvial_coverage > 1)
    throw Error("CONFIG_BAD_COVERAGE", "alluvial_coverage must be in (0,1]");
  if (vocab_size < 1) throw Error("CONFIG_BAD_VOCAB", "vocab_size must be >= 1");
  const std::string gdir = gazetteer_dir.empty() ? default_gazetteer_dir() : gazetteer_dir;
  if (!fs::is_directory(gdir))
    throw Error("CONFIG_NO_GAZETTEER", "gazetteer directory not found: " + gdir);
  const std::string rpath = region_map_path.empty() ? default_region_map_path() : region_map_path;
  if (!fs::exists(rpath)) throw Error("CONFIG_NO_REGIONS", "region map not found: " + rpath);
  if (!hard_labels_path.empty() && !fs::exists(hard_labels_path))
    throw Error("CONFIG_NO_HARD_LABELS", "hard labels file not found: " + hard_labels_path);
  train.validate();
  for (const auto& [a, b] : network_windows)
    if (a > b) throw Error("CONFIG_BAD_WINDOW", "network window start > end");
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : stages) {
    nlohmann::ordered_json stage;
    stage["name"] = s.name;
    stage["inputs_hash"] = s.inputs_hash;
    stage["skipped"] = s.skipped;
    stage["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& a : s.artifacts)
      stage["artifacts"].push_back({{"path", a.path}, {"hash", a.hash}});
    j["stages"].push_back(std::move(stage));
  }
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Manifest m;
  m.config_hash = j.value("config_hash", "");
  if (j.contains("stages")) {
    for (const auto& s : j.at("stages")) {
      StageRecord rec;
      rec.name = s.at("name").get<std::string>();
      rec.inputs_hash = s.at("inputs_hash").get<std::string>();
      rec.skipped = s.value("skipped", false);
      for (const auto& a : s.at("artifacts"))
        rec.artifacts.push_back({a.at("path").get<std::string>(), a.at("hash").get<std::string>()});
      m.stages.push_back(std::move(rec));
    }
  }
  return m;
}

const StageRecord* Manifest::stage(const std::string& name) const {
  for (const auto& s : stages)
    if (s.name == name) return &s;
  return nullptr;
}

std::vector<MoveEvent> load_moves_csv(const std::string& path) {
  const auto table = csv::read(path);
  const int c_author = table.column("author_id");
  const int c_from = table.column("from_state");
  const int c_to = table.column("to_state");
  const int c_year = table.column("year");
  const int c_y1 = table.column("observed_y1");
  const int c_y2 = table.column("observed_y2");
  if (c_author < 0 || c_from < 0 || c_to < 0 || c_year < 0 || c_y1 < 0 || c_y2 < 0)
    throw Error("MOVES_SCHEMA", "unexpected moves CSV header: " + path);
  std::vector<MoveEvent> out;
  for (const auto& row : table.rows) {
    MoveEvent m;
    m.author_id = row[static_cast<std::size_t>(c_author)];
    const auto from = state_from_code(row[static_cast<std::size_t>(c_from)]);
    const auto to = state_from_code(row[static_cast<std::size_t>(c_to)]);
    const auto year = parse_int(row[static_cast<std::size_t>(c_year)]);
    const auto y1 = parse_int(row[static_cast<std::size_t>(c_y1)]);
    const auto y2 = parse_int(row[static_cast<std::size_t>(c_y2)]);
    if (!from || !to || !year || !y1 || !y2)
      throw Error("MOVES_BAD_ROW", "bad row in moves CSV: " + path);
    m.from = *from;
    m.to = *to;
    m.year = static_cast<int>(*year);
    m.observed_y1 = static_cast<int>(*y1);
    m.observed_y2 = static_cast<int>(*y2);
    out.push_back(std::move(m));
  }
  return out;
}

PresenceTable load_presence_csv(const std::string& path, const YearWindow& window) {
  const auto table = csv::read(path);
  const int c_state = table.column("state_code");
  const int c_year = table.column("year");
  const int c_count = table.column("count");
  if (c_state < 0 || c_year < 0 || c_count < 0)
    throw Error("PRESENCE_SCHEMA", "unexpected presence CSV header: " + path);
  PresenceTable presence(window);
  for (const auto& row : table.rows) {
    const auto s = state_from_code(row[static_cast<std::size_t>(c_state)]);
    const auto y = parse_int(row[static_cast<std::size_t>(c_year)]);
    const auto n = parse_int(row[static_cast<std::size_t>(c_count)]);
    if (!s || !y || !n) throw Error("PRESENCE_BAD_ROW", "bad row in presence CSV: " + path);
    presence.add(*s, static_cast<int>(*y), *n);
  }
  return presence;
}

std::map<std::string, std::string> load_author_map_csv(const std::string& path) {
  const auto table = csv::read(path);
  const int c_rec = table.column("record_id");
  const int c_rev = table.column("revised_author_id");
  if (c_rec < 0 || c_rev < 0)
    throw Error("AUTHOR_MAP_SCHEMA", "unexpected author map header: " + path);
  std::map<std::string, std::string> out;
  for (const auto& row : table.rows)
    out[row[static_cast<std::size_t>(c_rec)]] = row[static_cast<std::size_t>(c_rev)];
  return out;
}

std::map<std::string, State> load_state_assignments_csv(const std::string& path) {
  const auto table = csv::read(path);
  const int c_rec = table.column("record_id");
  const int c_state = table.column("state_code");
  if (c_rec < 0 || c_state < 0)
    throw Error("STATES_SCHEMA", "unexpected state assignment header: " + path);
  std::map<std::string, State> out;
  for (const auto& row : table.rows) {
    const auto s = state_from_code(row[static_cast<std::size_t>(c_state)]);
    if (!s) throw Error("STATES_BAD_ROW", "unknown state in " + path);
    out[row[static_cast<std::size_t>(c_rec)]] = *s;
  }
  return out;
}

namespace {

struct LoadedInputs {
  Gazetteer gazetteer;
  RegionMap regions;
};

LoadedInputs load_inputs(const PipelineConfig& cfg) {
  return {Gazetteer::load_dir(
              cfg.gazetteer_dir.empty() ? default_gazetteer_dir() : cfg.gazetteer_dir,
              cfg.abbreviations_path.empty() ? AbbreviationTable::builtin_default()
                                             : AbbreviationTable::load_csv(cfg.abbreviations_path)),
          RegionMap::load_csv(cfg.region_map_path.empty() ? default_region_map_path()
                                                          : cfg.region_map_path)};
}

void write_corpus_csv(const Corpus& corpus, const std::string& path) {
  write_file(path, export_corpus(corpus, CorpusFormat::Csv));
}

Corpus read_corpus_csv(const std::string& path, const YearWindow& window) {
  auto result = ingest(path, CorpusFormat::Csv, window);
  if (!result.report.rejects.empty())
    throw Error("PIPELINE_CORRUPT_ARTIFACT", "corpus artifact has rejects: " + path);
  return std::move(result.corpus);
}

void stage_ingest(const PipelineConfig& cfg, const std::string& out_dir) {
  const auto format = format_from_name(cfg.input_format);
  auto result = ingest(cfg.input_path, *format, cfg.window);
  write_corpus_csv(result.corpus, (fs::path(out_dir) / "corpus.csv").string());

  csv::Table rejects;
  rejects.header = {"line", "reason"};
  for (const auto& r : result.report.rejects)
    rejects.rows.push_back({std::to_string(r.line), r.reason});
  csv::write((fs::path(out_dir) / "rejects.csv").string(), rejects);

  nlohmann::ordered_json stats;
  stats["accepted"] = result.report.accepted;
  stats["rejected"] = result.report.rejects.size();
  stats["window_filtered"] = result.report.window_filtered;
  const auto validation = validate(result.corpus);
  stats["duplicate_record_ids"] = validation.duplicate_record_ids.size();
  stats["no_affiliation"] = validation.no_affiliation.size();
  write_file((fs::path(out_dir) / "ingest_stats.json").string(), stats.dump(2) + "\n");
}

void stage_disambiguate(const PipelineConfig& cfg, const std::string& out_dir) {
  const Corpus corpus = read_corpus_csv((fs::path(out_dir) / "corpus.csv").string(), cfg.window);
  DisambigConfig dcfg;
  dcfg.suspicious_threshold = cfg.suspicious_threshold;
  dcfg.linkage = cfg.linkage == "complete" ? Linkage::Complete : Linkage::Average;
  dcfg.distance_threshold = cfg.distance_threshold;
  const auto [revised, result] = disambiguate(corpus, dcfg);

  csv::Table map_table;
  map_table.header = {"record_id", "raw_author_id", "revised_author_id"};
  for (const auto& rec : revised.records)
    map_table.rows.push_back({rec.record_id, rec.raw_author_id, rec.revised_author_id});
  csv::write((fs::path(out_dir) / "author_map.csv").string(), map_table);

  nlohmann::ordered_json stats;
  stats["suspicious_ids"] = result.stats.suspicious_ids;
  stats["clusters"] = result.stats.clusters;
  stats["records_touched"] = result.stats.records_touched;
  stats["records_reassigned"] = result.stats.records_reassigned;
  write_file((fs::path(out_dir) / "disambig_stats.json").string(), stats.dump(2) + "\n");
}

void stage_resolve(const PipelineConfig& cfg, const LoadedInputs& in, const std::string& out_dir) {
  const Corpus corpus = read_corpus_csv((fs::path(out_dir) / "corpus.csv").string(), cfg.window);
  const auto result = resolve_corpus(corpus, in.gazetteer);

  csv::Table table;
  table.header = {"record_id",        "status",       "state_code", "slot_org_unit",
                  "slot_institution", "slot_address", "slot_city",  "slot_postcode"};
  for (const auto& rec : corpus.records) {
    const auto& res = result.by_record.at(rec.record_id);
    std::string status;
    switch (res.status) {
      case ResolutionStatus::Resolved: status = "resolved"; break;
      case ResolutionStatus::Unresolved: status = "unresolved"; break;
      case ResolutionStatus::ExcludedForeign: status = "excluded_foreign"; break;
    }
    table.rows.push_back({rec.record_id, status, state_str(res.state),
                          state_str(res.candidates[CandidateSlot::OrgUnit]),
                          state_str(res.candidates[CandidateSlot::Institution]),
                          state_str(res.candidates[CandidateSlot::StreetAddress]),
                          state_str(res.candidates[CandidateSlot::City]),
                          state_str(res.candidates[CandidateSlot::Postcode])});
  }
  csv::write((fs::path(out_dir) / "states_rule.csv").string(), table);

  nlohmann::ordered_json stats;
  stats["total"] = result.coverage.total;
  stats["resolved"] = result.coverage.resolved;
  stats["unresolved"] = result.coverage.unresolved;
  stats["excluded_foreign"] = result.coverage.excluded_foreign;
  stats["resolved_fraction"] = result.coverage.resolved_fraction();
  write_file((fs::path(out_dir) / "resolve_stats.json").string(), stats.dump(2) + "\n");
}

struct RuleStates {
  std::map<std::string, State> resolved;
  std::vector<std::string> unresolved;  // in-scope records the rules missed
};

RuleStates read_states_rule(const std::string& path) {
  const auto table = csv::read(path);
  const int c_rec = table.column("record_id");
  const int c_status = table.column("status");
  const int c_state = table.column("state_code");
  if (c_rec < 0 || c_status < 0 || c_state < 0)
    throw Error("STATES_SCHEMA", "unexpected states_rule header: " + path);
  RuleStates out;
  for (const auto& row : table.rows) {
    const auto& status = row[static_cast<std::size_t>(c_status)];
    if (status == "resolved") {
      const auto s = state_from_code(row[static_cast<std::size_t>(c_state)]);
      if (!s) throw Error("STATES_BAD_ROW", "unknown state in " + path);
      out.resolved[row[static_cast<std::size_t>(c_rec)]] = *s;
    } else if (status == "unresolved") {
      out.unresolved.push_back(row[static_cast<std::size_t>(c_rec)]);
    }
  }
  return out;
}

void stage_classify(const PipelineConfig& cfg, const LoadedInputs& in, const std::string& out_dir) {
  const Corpus corpus = read_corpus_csv((fs::path(out_dir) / "corpus.csv").string(), cfg.window);
  const RuleStates rules = read_states_rule((fs::path(out_dir) / "states_rule.csv").string());

  std::map<std::string, const AuthorshipRecord*> by_id;
  for (const auto& rec : corpus.records) by_id[rec.record_id] = &rec;

  // Manually labeled hard cases: a seeded split goes into training, the
  // rest is held out for a conservative accuracy estimate.
  std::map<std::string, State> hard_labels;
  std::vector<std::pair<std::string, State>> hard_train, hard_holdout;
  if (!cfg.hard_labels_path.empty()) {
    for (const auto& [rec_id, s] : load_state_assignments_csv(cfg.hard_labels_path))
      if (by_id.count(rec_id)) hard_labels.emplace(rec_id, s);
    std::vector<std::pair<std::string, State>> shuffled(hard_labels.begin(), hard_labels.end());
    Rng rng(cfg.train.seed ^ 0x686172646c626cull);
    rng.shuffle(shuffled);
    const auto n_train = static_cast<std::size_t>(cfg.hard_label_train_fraction *
                                                  static_cast<double>(shuffled.size()));
    for (std::size_t i = 0; i < shuffled.size(); ++i)
      (i < n_train ? hard_train : hard_holdout).push_back(shuffled[i]);
  }

  std::vector<std::string> train_docs;
  std::vector<int> train_labels;
  for (const auto& [rec_id, s] : rules.resolved) {
    train_docs.push_back(feature_text(*by_id.at(rec_id), in.gazetteer.abbreviations()));
    train_labels.push_back(static_cast<int>(s));
  }
  for (const auto& [rec_id, s] : hard_train) {
    train_docs.push_back(feature_text(*by_id.at(rec_id), in.gazetteer.abbreviations()));
    train_labels.push_back(static_cast<int>(s));
  }
  if (train_docs.empty())
    throw Error("CLASSIFY_NO_TRAINING", "rule-based stage resolved no records to train on");

  const Vocabulary vocab = build_vocab(train_docs, cfg.vocab_size);
  LabeledSet data;
  data.features.resize(vocab.size(), static_cast<Eigen::Index>(train_docs.size()));
  data.labels = train_labels;
  for (std::size_t i = 0; i < train_docs.size(); ++i)
    data.features.col(static_cast<Eigen::Index>(i)) = featurize(train_docs[i], vocab);

  const MlpModel model = train(data, cfg.train, vocab);
  save_model(model, (fs::path(out_dir) / "model.bin").string());

  std::vector<std::pair<std::string, Eigen::VectorXd>> unresolved;
  for (const auto& rec_id : rules.unresolved) {
    if (hard_labels.count(rec_id)) continue;  // manual label wins
    unresolved.emplace_back(
        rec_id, featurize(feature_text(*by_id.at(rec_id), in.gazetteer.abbreviations()), vocab));
  }
  const auto thresholded =
      apply_with_threshold(model, unresolved, cfg.discard_fraction, corpus.records.size());

  csv::Table final_table;
  final_table.header = {"record_id", "state_code", "source", "confidence"};
  for (const auto& rec : corpus.records) {
    const auto rule_it = rules.resolved.find(rec.record_id);
    if (rule_it != rules.resolved.end()) {
      final_table.rows.push_back(
          {rec.record_id, std::string(state_code(rule_it->second)), "rule", "1"});
      continue;
    }
    const auto hard_it = hard_labels.find(rec.record_id);
    if (hard_it != hard_labels.end()) {
      final_table.rows.push_back(
          {rec.record_id, std::string(state_code(hard_it->second)), "hard_label", "1"});
      continue;
    }
    const auto pred_it = thresholded.assigned.find(rec.record_id);
    if (pred_it != thresholded.assigned.end()) {
      final_table.rows.push_back(
          {rec.record_id, std::string(state_code(static_cast<State>(pred_it->second.label))),
           "classifier", fmt_double(pred_it->second.confidence)});
    }
    // discarded and foreign records carry no final state
  }
  csv::write((fs::path(out_dir) / "states_final.csv").string(), final_table);

  csv::Table discard_table;
  discard_table.header = {"record_id"};
  for (const auto& rec_id : thresholded.discarded) discard_table.rows.push_back({rec_id});
  csv::write((fs::path(out_dir) / "discarded.csv").string(), discard_table);

  nlohmann::ordered_json stats;
  stats["train_records"] = train_docs.size();
  stats["vocabulary_size"] = vocab.size();
  stats["unresolved_predicted"] = unresolved.size();
  stats["discarded"] = thresholded.discarded.size();
  {
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < data.features.cols(); ++i)
      if (predict(model, data.features.col(i)).label == data.labels[static_cast<std::size_t>(i)])
        ++correct;
    stats["train_accuracy"] =
        static_cast<double>(correct) / static_cast<double>(data.features.cols());
  }
  if (!hard_holdout.empty()) {
    std::size_t correct = 0;
    for (const auto& [rec_id, s] : hard_holdout) {
      const auto x = featurize(feature_text(*by_id.at(rec_id), in.gazetteer.abbreviations()), vocab);
      if (predict(model, x).label == static_cast<int>(s)) ++correct;
    }
    stats["hard_holdout_n"] = hard_holdout.size();
    stats["hard_holdout_accuracy"] =
        static_cast<double>(correct) / static_cast<double>(hard_holdout.size());
  }
  if (cfg.cv_folds >= 2) {
    const auto cv = cross_validate(data, cfg.cv_folds, cfg.train, vocab);
    stats["cv_folds"] = cfg.cv_folds;
    stats["cv_fold_accuracy"] = cv.fold_accuracy;
    stats["cv_median_accuracy"] = cv.median_accuracy;
    stats["cv_warnings"] = cv.warnings;
  }
  write_file((fs::path(out_dir) / "classifier_stats.json").string(), stats.dump(2) + "\n");
}

void stage_mobility(const PipelineConfig& cfg, const std::string& out_dir) {
  Corpus corpus = read_corpus_csv((fs::path(out_dir) / "corpus.csv").string(), cfg.window);
  const auto author_map = load_author_map_csv((fs::path(out_dir) / "author_map.csv").string());
  for (auto& rec : corpus.records) {
    const auto it = author_map.find(rec.record_id);
    if (it != author_map.end()) rec.revised_author_id = it->second;
  }
  const auto states = load_state_assignments_csv((fs::path(out_dir) / "states_final.csv").string());

  const auto timelines = build_timelines(corpus, states);
  const auto moves_by_author = detect_all_moves(timelines);
  const auto presence = pad_presence(timelines, cfg.window);

  csv::Table moves_table;
  moves_table.header = {"author_id",   "from_state",  "to_state",
                        "year",        "observed_y1", "observed_y2"};
  for (const auto& [author, moves] : moves_by_author)
    for (const auto& m : moves)
      moves_table.rows.push_back({m.author_id, std::string(state_code(m.from)),
                                  std::string(state_code(m.to)), std::to_string(m.year),
                                  std::to_string(m.observed_y1), std::to_string(m.observed_y2)});
  csv::write((fs::path(out_dir) / "moves.csv").string(), moves_table);

  csv::Table presence_table;
  presence_table.header = {"state_code", "year", "count"};
  for (const auto& [s, year, n] : presence.cells())
    presence_table.rows.push_back(
        {std::string(state_code(s)), std::to_string(year), std::to_string(n)});
  csv::write((fs::path(out_dir) / "presence.csv").string(), presence_table);

  csv::Table scholars;
  scholars.header = {"author_id", "first_pub_year", "record_count", "origin_state", "n_moves"};
  for (const auto& tl : timelines) {
    const auto& moves = moves_by_author.at(tl.author_id);
    scholars.rows.push_back({tl.author_id, std::to_string(tl.first_pub_year),
                             std::to_string(tl.record_count),
                             std::string(state_code(academic_origin(tl))),
                             std::to_string(moves.size())});
  }
  csv::write((fs::path(out_dir) / "scholars.csv").string(), scholars);
}

void stage_measures(const PipelineConfig& cfg, const LoadedInputs& in, const std::string& out_dir) {
  if (cfg.population_path.empty() || !fs::exists(cfg.population_path))
    throw Error("MEASURES_MISSING_POP", "population CSV not found: " + cfg.population_path);
  const auto population = PopulationTable::load_csv(cfg.population_path);
  const auto moves = load_moves_csv((fs::path(out_dir) / "moves.csv").string());
  const auto presence = load_presence_csv((fs::path(out_dir) / "presence.csv").string(), cfg.window);
  const Corpus corpus = read_corpus_csv((fs::path(out_dir) / "corpus.csv").string(), cfg.window);
  const auto author_map = load_author_map_csv((fs::path(out_dir) / "author_map.csv").string());

  const auto scholars_table = csv::read((fs::path(out_dir) / "scholars.csv").string());
  const int c_author = scholars_table.column("author_id");
  const int c_first = scholars_table.column("first_pub_year");
  const int c_count = scholars_table.column("record_count");
  const int c_origin = scholars_table.column("origin_state");
  const int c_moves = scholars_table.column("n_moves");
  if (c_author < 0 || c_first < 0 || c_count < 0 || c_origin < 0 || c_moves < 0)
    throw Error("SCHOLARS_SCHEMA", "unexpected scholars.csv header");

  std::map<std::string, State> origin_of_author;
  struct ScholarRow {
    int first_pub_year;
    long long record_count;
    long long n_moves;
  };
  std::map<std::string, ScholarRow> scholar_rows;
  for (const auto& row : scholars_table.rows) {
    const auto origin = state_from_code(row[static_cast<std::size_t>(c_origin)]);
    if (origin) origin_of_author[row[static_cast<std::size_t>(c_author)]] = *origin;
    scholar_rows[row[static_cast<std::size_t>(c_author)]] = {
        static_cast<int>(*parse_int(row[static_cast<std::size_t>(c_first)])),
        *parse_int(row[static_cast<std::size_t>(c_count)]),
        *parse_int(row[static_cast<std::size_t>(c_moves)])};
  }

  const FlowTally state_tally = tally(moves, presence, Scope::StateLevel, in.regions);
  const FlowTally region_tally = tally(moves, presence, Scope::RegionLevel, in.regions);
  const YearWindow eff = presence.effective_window();

  csv::Table tidy;
  tidy.header = {"area", "year", "index", "value", "missing_flag"};
  for (const auto& series :
       measure_series(state_tally, region_tally, presence, population, in.regions))
    for (const auto& [year, v] : series.values)
      tidy.rows.push_back(
          {series.area, std::to_string(year), series.index, opt_str(v), v ? "0" : "1"});
  csv::write((fs::path(out_dir) / "measures.csv").string(), tidy);

  std::map<State, std::map<int, double>> density_series;
  for (State s : all_states())
    for (int y = eff.start; y <= eff.end; ++y)
      if (const auto d = scholar_density(presence, population, s, y)) density_series[s][y] = *d;
  csv::Table bands;
  bands.header = {"state_code", "trajectory"};
  if (density_series.size() >= 4) {
    for (const auto& [s, traj] : trajectory_bands(density_series)) {
      const std::string name = traj == Trajectory::Progress     ? "Progress"
                               : traj == Trajectory::Regression ? "Regression"
                                                                : "NoChange";
      bands.rows.push_back({std::string(state_code(s)), name});
    }
  }
  csv::write((fs::path(out_dir) / "density_bands.csv").string(), bands);

  Corpus corpus_revised = corpus;
  for (auto& rec : corpus_revised.records) {
    const auto it = author_map.find(rec.record_id);
    if (it != author_map.end()) rec.revised_author_id = it->second;
  }
  const auto facts = author_facts(corpus_revised);

  std::size_t n_single = 0, n_mobile = 0, n_non_mobile = 0;
  struct Acc {
    std::vector<double> ages, pubs, rates;
    std::size_t flagged = 0;
  } acc_mobile, acc_non_mobile;
  for (const auto& [author, row] : scholar_rows) {
    if (row.record_count <= 1) {
      ++n_single;
      continue;
    }
    const bool moved = row.n_moves > 0;
    (moved ? n_mobile : n_non_mobile) += 1;
    Acc& acc = moved ? acc_mobile : acc_non_mobile;
    const int age = cfg.reference_year - row.first_pub_year;
    acc.ages.push_back(age);
    const auto f = facts.find(author);
    acc.pubs.push_back(f == facts.end() ? 0.0 : static_cast<double>(f->second.publications));
    if (age <= 0)
      ++acc.flagged;
    else if (f != facts.end())
      acc.rates.push_back(static_cast<double>(f->second.citations) / static_cast<double>(age));
  }
  auto med = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  csv::Table cohorts;
  cohorts.header = {"cohort", "n", "median_academic_age", "median_publications",
                    "median_citations_per_year", "flagged_zero_age"};
  cohorts.rows.push_back({"mobile", std::to_string(n_mobile), fmt_double(med(acc_mobile.ages)),
                          fmt_double(med(acc_mobile.pubs)), fmt_double(med(acc_mobile.rates)),
                          std::to_string(acc_mobile.flagged)});
  cohorts.rows.push_back({"non_mobile", std::to_string(n_non_mobile),
                          fmt_double(med(acc_non_mobile.ages)), fmt_double(med(acc_non_mobile.pubs)),
                          fmt_double(med(acc_non_mobile.rates)),
                          std::to_string(acc_non_mobile.flagged)});
  csv::write((fs::path(out_dir) / "cohort_stats.csv").string(), cohorts);

  const std::size_t n_authors = scholar_rows.size();
  const std::size_t n_multi = n_mobile + n_non_mobile;
  csv::Table summary;
  summary.header = {"n_authors", "n_single_record", "single_record_share",
                    "n_multi_record", "n_mobile", "mobile_share"};
  summary.rows.push_back(
      {std::to_string(n_authors), std::to_string(n_single),
       fmt_double(n_authors ? static_cast<double>(n_single) / static_cast<double>(n_authors) : 0.0),
       std::to_string(n_multi), std::to_string(n_mobile),
       fmt_double(n_multi ? static_cast<double>(n_mobile) / static_cast<double>(n_multi) : 0.0)});
  csv::write((fs::path(out_dir) / "scholars_summary.csv").string(), summary);

  std::map<std::string, std::vector<MoveEvent>> moves_by_author;
  for (const auto& m : moves) moves_by_author[m.author_id].push_back(m);
  const auto shares =
      destination_shares(moves_by_author, origin_of_author, in.regions, cfg.trim_fraction,
                         cfg.trim_per_year ? TrimMode::PerYear : TrimMode::Pooled);
  csv::Table share_table;
  share_table.header = {"origin_state", "year", "missing_flag"};
  for (Region r : all_regions())
    share_table.header.push_back("share_" + std::string(region_code(r)));
  for (const auto& [key, cell] : shares.cells) {
    std::vector<std::string> row{std::string(state_code(key.first)), std::to_string(key.second),
                                 cell ? "0" : "1"};
    for (std::size_t r = 0; r < kNumRegions; ++r)
      row.push_back(cell ? fmt_double((*cell)[r]) : missing_marker());
    share_table.rows.push_back(std::move(row));
  }
  csv::write((fs::path(out_dir) / "destination_shares.csv").string(), share_table);
}

std::vector<std::pair<int, int>> effective_network_windows(const PipelineConfig& cfg) {
  if (!cfg.network_windows.empty()) return cfg.network_windows;
  const YearWindow eff = cfg.window.effective();
  std::vector<std::pair<int, int>> windows;
  windows.emplace_back(eff.start, eff.end);
  for (int y = eff.start; y <= eff.end; ++y) windows.emplace_back(y, y);
  return windows;
}

std::string window_name(const std::pair<int, int>& w) {
  return std::to_string(w.first) + ":" + std::to_string(w.second);
}

void stage_network(const PipelineConfig& cfg, const std::string& out_dir) {
  const auto moves = load_moves_csv((fs::path(out_dir) / "moves.csv").string());
  const auto windows = effective_network_windows(cfg);
  const FlowOptions opts{cfg.teleport};

  csv::Table edges;
  edges.header = {"from_state", "to_state", "weight", "window"};
  csv::Table stats;
  stats.header = {"window",        "edges",
                  "total_moves",   "density",
                  "degree_correlation_in_out", "assortativity_out_in",
                  "assortativity_in_in",       "assortativity_in_out",
                  "assortativity_out_out",     "n_communities",
                  "codelength"};
  csv::Table partitions;
  partitions.header = {"node", "community", "year"};
  csv::Table partition_flows;
  partition_flows.header = {"year", "node", "flow", "codelength"};

  for (const auto& w : windows) {
    const MigrationNetwork net = build(moves, {w.first, w.second});
    const std::string name = window_name(w);
    for (State from : all_states())
      for (State to : all_states())
        if (net.weight(from, to) > 0)
          edges.rows.push_back({std::string(state_code(from)), std::string(state_code(to)),
                                fmt_double(net.weight(from, to)), name});

    std::optional<Partition> part;
    if (net.edge_count() > 0)
      part = detect_communities(net, cfg.community_seed, cfg.community_trials, opts);

    stats.rows.push_back(
        {name, std::to_string(net.edge_count()), fmt_double(net.total_weight()),
         fmt_double(network_density(net)), opt_str(degree_correlation(net)),
         opt_str(assortativity(net, AssortativityMode::OutIn)),
         opt_str(assortativity(net, AssortativityMode::InIn)),
         opt_str(assortativity(net, AssortativityMode::InOut)),
         opt_str(assortativity(net, AssortativityMode::OutOut)),
         part ? std::to_string(part->active_modules) : missing_marker(),
         part ? fmt_double(part->codelength) : missing_marker()});

    // Yearly cross-sections feed the alluvial stage.
    if (part && w.first == w.second) {
      for (int i = 0; i < kNumStates; ++i) {
        partitions.rows.push_back({std::string(state_code(static_cast<State>(i))),
                                   std::to_string(part->module_of[static_cast<std::size_t>(i)]),
                                   std::to_string(w.first)});
        partition_flows.rows.push_back({std::to_string(w.first),
                                        std::string(state_code(static_cast<State>(i))),
                                        fmt_double(part->node_flow[i]),
                                        fmt_double(part->codelength)});
      }
    }
  }
  csv::write((fs::path(out_dir) / "edges.csv").string(), edges);
  csv::write((fs::path(out_dir) / "network_stats.csv").string(), stats);
  csv::write((fs::path(out_dir) / "partitions.csv").string(), partitions);
  csv::write((fs::path(out_dir) / "partition_flows.csv").string(), partition_flows);
}

void stage_alluvial(const PipelineConfig& cfg, const std::string& out_dir) {
  const auto partitions_table = csv::read((fs::path(out_dir) / "partitions.csv").string());
  const auto flows_table = csv::read((fs::path(out_dir) / "partition_flows.csv").string());
  const int pc_node = partitions_table.column("node");
  const int pc_comm = partitions_table.column("community");
  const int pc_year = partitions_table.column("year");
  const int fc_year = flows_table.column("year");
  const int fc_node = flows_table.column("node");
  const int fc_flow = flows_table.column("flow");
  const int fc_len = flows_table.column("codelength");
  if (pc_node < 0 || pc_comm < 0 || pc_year < 0 || fc_year < 0 || fc_node < 0 || fc_flow < 0 ||
      fc_len < 0)
    throw Error("PARTITION_SCHEMA", "unexpected partition artifact headers");

  std::map<int, Partition> by_year;
  for (const auto& row : partitions_table.rows) {
    const int year = static_cast<int>(*parse_int(row[static_cast<std::size_t>(pc_year)]));
    auto& part = by_year[year];
    if (part.module_of.empty()) {
      part.module_of.assign(kNumStates, 0);
      part.node_flow = Eigen::VectorXd::Zero(kNumStates);
    }
    const auto s = state_from_code(row[static_cast<std::size_t>(pc_node)]);
    if (!s) throw Error("PARTITION_BAD_ROW", "unknown node in partitions.csv");
    part.module_of[static_cast<std::size_t>(*s)] =
        static_cast<int>(*parse_int(row[static_cast<std::size_t>(pc_comm)]));
  }
  for (const auto& row : flows_table.rows) {
    const int year = static_cast<int>(*parse_int(row[static_cast<std::size_t>(fc_year)]));
    const auto s = state_from_code(row[static_cast<std::size_t>(fc_node)]);
    const auto flow = parse_double(row[static_cast<std::size_t>(fc_flow)]);
    const auto len = parse_double(row[static_cast<std::size_t>(fc_len)]);
    auto it = by_year.find(year);
    if (it == by_year.end() || !s || !flow || !len)
      throw Error("PARTITION_BAD_ROW", "bad row in partition_flows.csv");
    it->second.node_flow[static_cast<int>(*s)] = *flow;
    it->second.codelength = *len;
  }
  for (auto& [year, part] : by_year) {
    part.module_flow.clear();
    for (int i = 0; i < kNumStates; ++i)
      part.module_flow[part.module_of[static_cast<std::size_t>(i)]] += part.node_flow[i];
  }
  if (by_year.size() < 2)
    throw Error("ALLUVIAL_TOO_FEW", "alluvial export needs at least two yearly partitions");
  write_file((fs::path(out_dir) / "alluvial.json").string(),
             alluvial_export(by_year, cfg.alluvial_coverage));
}

}  // namespace

namespace stages {
void ingest(const PipelineConfig& cfg) { stage_ingest(cfg, cfg.output_dir); }
void disambiguate(const PipelineConfig& cfg) { stage_disambiguate(cfg, cfg.output_dir); }
void resolve(const PipelineConfig& cfg) { stage_resolve(cfg, load_inputs(cfg), cfg.output_dir); }
void classify(const PipelineConfig& cfg) { stage_classify(cfg, load_inputs(cfg), cfg.output_dir); }
void mobility(const PipelineConfig& cfg) { stage_mobility(cfg, cfg.output_dir); }
void measures(const PipelineConfig& cfg) { stage_measures(cfg, load_inputs(cfg), cfg.output_dir); }
void network(const PipelineConfig& cfg) { stage_network(cfg, cfg.output_dir); }
void alluvial(const PipelineConfig& cfg) { stage_alluvial(cfg, cfg.output_dir); }
}  // namespace stages

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  PipelineResult result;
  try {
    cfg.validate();
  } catch (const Error& e) {
    result.exit_code = kExitConfigError;
    result.error_code = e.code();
    result.error_message = e.what();
    return result;
  }

  try {
    fs::create_directories(cfg.output_dir);
    LockFile lock((fs::path(cfg.output_dir) / ".migraflow.lock").string());

    Manifest previous;
    const std::string manifest_path = (fs::path(cfg.output_dir) / "manifest.json").string();
    if (fs::exists(manifest_path)) {
      try {
        previous = Manifest::from_json(read_file(manifest_path));
      } catch (...) {
        previous = Manifest();  // unreadable manifest: recompute everything
      }
    }

    StageRunner runner(cfg, std::move(previous));
    runner.manifest().config_hash = hash_hex(fnv1a64(cfg.to_json()));
    const LoadedInputs inputs = load_inputs(cfg);
    const std::string gaz_dir =
        cfg.gazetteer_dir.empty() ? default_gazetteer_dir() : cfg.gazetteer_dir;

    std::string current = "ingest";
    try {
      runner.run("ingest",
                 file_hash_or_empty(cfg.input_path) + "|" + cfg.input_format + "|" +
                     std::to_string(cfg.window.start) + ":" + std::to_string(cfg.window.end),
                 {"corpus.csv", "rejects.csv", "ingest_stats.json"},
                 [&] { stage_ingest(cfg, cfg.output_dir); });

      current = "disambiguate";
      runner.run("disambiguate",
                 runner.artifact_hash("ingest") + "|" + std::to_string(cfg.suspicious_threshold) +
                     "|" + cfg.linkage + "|" + fmt_double(cfg.distance_threshold),
                 {"author_map.csv", "disambig_stats.json"},
                 [&] { stage_disambiguate(cfg, cfg.output_dir); });

      current = "resolve";
      runner.run("resolve",
                 runner.artifact_hash("ingest") + "|" + dir_hash(gaz_dir) + "|" +
                     file_hash_or_empty(cfg.abbreviations_path),
                 {"states_rule.csv", "resolve_stats.json"},
                 [&] { stage_resolve(cfg, inputs, cfg.output_dir); });

      current = "classify";
      {
        nlohmann::ordered_json tc;
        tc["hidden"] = cfg.train.hidden_sizes;
        tc["dropout"] = cfg.train.dropout;
        tc["lr"] = cfg.train.learning_rate;
        tc["momentum"] = cfg.train.momentum;
        tc["epochs"] = cfg.train.epochs;
        tc["batch"] = cfg.train.batch_size;
        tc["seed"] = cfg.train.seed;
        tc["vocab"] = cfg.vocab_size;
        tc["discard"] = cfg.discard_fraction;
        tc["cv"] = cfg.cv_folds;
        tc["hard_frac"] = cfg.hard_label_train_fraction;
        runner.run("classify",
                   runner.artifact_hash("resolve") + "|" + runner.artifact_hash("ingest") + "|" +
                       tc.dump() + "|" + file_hash_or_empty(cfg.hard_labels_path) + "|" +
                       file_hash_or_empty(cfg.abbreviations_path),
                   {"model.bin", "states_final.csv", "discarded.csv", "classifier_stats.json"},
                   [&] { stage_classify(cfg, inputs, cfg.output_dir); });
      }

      current = "mobility";
      runner.run("mobility",
                 runner.artifact_hash("ingest") + "|" + runner.artifact_hash("disambiguate") +
                     "|" + runner.artifact_hash("classify"),
                 {"moves.csv", "presence.csv", "scholars.csv"},
                 [&] { stage_mobility(cfg, cfg.output_dir); });

      current = "measures";
      runner.run("measures",
                 runner.artifact_hash("mobility") + "|" + runner.artifact_hash("ingest") + "|" +
                     file_hash_or_empty(cfg.population_path) + "|" + fmt_double(cfg.trim_fraction) +
                     (cfg.trim_per_year ? "|per_year" : "|pooled") +
                     "|" + std::to_string(cfg.reference_year) + "|" +
                     file_hash_or_empty(cfg.region_map_path.empty() ? default_region_map_path()
                                                                    : cfg.region_map_path),
                 {"measures.csv", "density_bands.csv", "cohort_stats.csv", "scholars_summary.csv",
                  "destination_shares.csv"},
                 [&] { stage_measures(cfg, inputs, cfg.output_dir); });

      current = "network";
      {
        std::string wdesc;
        for (const auto& w : effective_network_windows(cfg)) wdesc += window_name(w) + ",";
        runner.run("network",
                   runner.artifact_hash("mobility") + "|" + wdesc + "|" +
                       std::to_string(cfg.community_trials) + "|" +
                       std::to_string(cfg.community_seed) + "|" + fmt_double(cfg.teleport),
                   {"edges.csv", "network_stats.csv", "partitions.csv", "partition_flows.csv"},
                   [&] { stage_network(cfg, cfg.output_dir); });
      }

      current = "alluvial";
      runner.run("alluvial",
                 runner.artifact_hash("network") + "|" + fmt_double(cfg.alluvial_coverage),
                 {"alluvial.json"}, [&] { stage_alluvial(cfg, cfg.output_dir); });
    } catch (const Error& e) {
      result.exit_code = kExitStageFailure;
      result.failed_stage = current;
      result.error_code = e.code();
      result.error_message = e.what();
      result.manifest = runner.manifest();
      write_file((fs::path(cfg.output_dir) / "manifest.json").string(),
                 runner.manifest().to_json());
      return result;
    }

    result.manifest = runner.manifest();
    write_file((fs::path(cfg.output_dir) / "manifest.json").string(), runner.manifest().to_json());
  } catch (const Error& e) {
    result.exit_code = kExitStageFailure;
    result.error_code = e.code();
    result.error_message = e.what();
  }
  return result;
}

std::vector<std::string> write_report(const std::string& manifest_path) {
  std::vector<std::string> warnings;
  const fs::path out_dir = fs::path(manifest_path).parent_path();
  const Manifest manifest = Manifest::from_json(read_file(manifest_path));
  const fs::path report_dir = out_dir / "report";
  fs::create_directories(report_dir);

  auto have = [&](const std::string& stage) { return manifest.stage(stage) != nullptr; };
  auto copy_table = [&](const std::string& artifact, const std::string& report_name) {
    const fs::path src = out_dir / artifact;
    if (!fs::exists(src)) return false;
    write_file((report_dir / report_name).string(), read_file(src.string()));
    return true;
  };

  // Figure 5 analogue: density trajectory bands.
  if (!have("measures") || !copy_table("density_bands.csv", "fig5_density_bands.csv"))
    warnings.push_back("measures stage missing: density band table omitted");

  // Figure 6 analogue: NMR series; intensity indices (CMI/MEI/ANMR).
  if (have("measures") && fs::exists(out_dir / "measures.csv")) {
    const auto tidy = csv::read((out_dir / "measures.csv").string());
    const int c_area = tidy.column("area");
    const int c_year = tidy.column("year");
    const int c_index = tidy.column("index");
    const int c_value = tidy.column("value");
    const int c_missing = tidy.column("missing_flag");
    csv::Table nmr_table;
    nmr_table.header = {"area", "year", "nmr", "missing_flag"};
    csv::Table intensity;
    intensity.header = {"area", "year", "index", "value", "missing_flag"};
    for (const auto& row : tidy.rows) {
      const auto& index = row[static_cast<std::size_t>(c_index)];
      if (index == "NMR")
        nmr_table.rows.push_back(
            {row[static_cast<std::size_t>(c_area)], row[static_cast<std::size_t>(c_year)],
             row[static_cast<std::size_t>(c_value)], row[static_cast<std::size_t>(c_missing)]});
      else if (index == "CMI" || index == "MEI" || index == "ANMR")
        intensity.rows.push_back(
            {row[static_cast<std::size_t>(c_area)], row[static_cast<std::size_t>(c_year)], index,
             row[static_cast<std::size_t>(c_value)], row[static_cast<std::size_t>(c_missing)]});
    }
    csv::write((report_dir / "fig6_nmr_series.csv").string(), nmr_table);
    csv::write((report_dir / "migration_intensity_indices.csv").string(), intensity);
  } else {
    warnings.push_back("measures stage missing: NMR and intensity tables omitted");
  }

  // Figure 7 analogue.
  if (!have("measures") || !copy_table("destination_shares.csv", "fig7_destination_shares.csv"))
    warnings.push_back("measures stage missing: destination shares omitted");

  // Figure 8 analogue plus the assortativity series.
  if (have("network") && fs::exists(out_dir / "network_stats.csv")) {
    copy_table("network_stats.csv", "fig8_network_stats.csv");
    const auto stats = csv::read((out_dir / "network_stats.csv").string());
    csv::Table assort;
    assort.header = {"window", "assortativity_out_in", "assortativity_in_in",
                     "assortativity_in_out", "assortativity_out_out"};
    const int c_window = stats.column("window");
    const int c_oi = stats.column("assortativity_out_in");
    const int c_ii = stats.column("assortativity_in_in");
    const int c_io = stats.column("assortativity_in_out");
    const int c_oo = stats.column("assortativity_out_out");
    for (const auto& row : stats.rows)
      assort.rows.push_back(
          {row[static_cast<std::size_t>(c_window)], row[static_cast<std::size_t>(c_oi)],
           row[static_cast<std::size_t>(c_ii)], row[static_cast<std::size_t>(c_io)],
           row[static_cast<std::size_t>(c_oo)]});
    csv::write((report_dir / "assortativity_series.csv").string(), assort);
  } else {
    warnings.push_back("network stage missing: network tables omitted");
  }

  // Figure 9 analogue.
  if (!have("alluvial") || !copy_table("alluvial.json", "fig9_alluvial.json"))
    warnings.push_back("alluvial stage missing: alluvial export omitted");

  // Scholar cohort headline numbers (mobile share and friends).
  if (!have("measures") || !copy_table("scholars_summary.csv", "scholars_summary.csv") ||
      !copy_table("cohort_stats.csv", "cohort_stats.csv"))
    warnings.push_back("measures stage missing: cohort tables omitted");

  return warnings;
}

}  // namespace migraflow
