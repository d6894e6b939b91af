#pragma once

#include <optional>
#include <string>
#include <vector>

#include "migraflow/record.hpp"

namespace migraflow {

enum class CorpusFormat { Csv, Jsonl };

std::optional<CorpusFormat> format_from_name(std::string_view name);

struct RejectedRow {
  std::size_t line;  // 1-based; for CSV, line 1 is the header
  std::string reason;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t window_filtered = 0;  // valid rows outside the study window
  std::vector<RejectedRow> rejects;  // schema failures, never silently dropped
};

struct IngestResult {
  Corpus corpus;
  IngestReport report;
};

// Reads a record file. Rows failing the schema land in the rejects report.
// More than 50% schema rejects aborts with INGEST_SCHEMA_MISMATCH; rows that
// are valid but dated outside `window` are filtered and counted separately.
IngestResult ingest(const std::string& path, CorpusFormat format,
                    const YearWindow& window = {});

// Serializes in the same schema ingest reads; ingest(export(c)) is lossless.
std::string export_corpus(const Corpus& corpus, CorpusFormat format);

struct ValidationReport {
  std::vector<std::string> duplicate_record_ids;
  std::vector<std::string> out_of_window;      // record ids
  std::vector<std::string> no_affiliation;     // record ids
  std::vector<std::string> negative_citations; // record ids

  bool clean() const {
    return duplicate_record_ids.empty() && out_of_window.empty() &&
           no_affiliation.empty() && negative_citations.empty();
  }
};

ValidationReport validate(const Corpus& corpus);

const std::vector<std::string>& corpus_csv_header();

}  // namespace migraflow
