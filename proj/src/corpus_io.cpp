#include "migraflow/corpus_io.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "migraflow/csv.hpp"
#include "migraflow/util.hpp"

namespace migraflow {

namespace {

const std::vector<std::string> kHeader = {
    "record_id",   "raw_author_id", "author_name", "publication_id",
    "year",        "org_unit",      "institution", "street_address",
    "city",        "postcode",      "country",     "subjects",
    "coauthor_ids", "funding_ids",  "citation_count"};

std::vector<std::string> split_set(const std::string& joined) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= joined.size()) {
    std::size_t end = joined.find('|', pos);
    if (end == std::string::npos) end = joined.size();
    if (end > pos) out.push_back(joined.substr(pos, end - pos));
    pos = end + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string join_set(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back('|');
    out += items[i];
  }
  return out;
}

// Returns the reason a row is unusable, or nullopt and fills `rec`.
std::optional<std::string> row_to_record(const std::map<std::string, std::string>& fields,
                                         AuthorshipRecord& rec) {
  auto get = [&](const char* name) -> const std::string& {
    static const std::string empty;
    const auto it = fields.find(name);
    return it == fields.end() ? empty : it->second;
  };
  rec.record_id = get("record_id");
  if (rec.record_id.empty()) return "missing record_id";
  rec.raw_author_id = get("raw_author_id");
  if (rec.raw_author_id.empty()) return "missing raw_author_id";
  rec.revised_author_id = rec.raw_author_id;
  rec.author_name = get("author_name");
  rec.publication_id = get("publication_id");
  if (rec.publication_id.empty()) return "missing publication_id";
  const auto year = parse_int(get("year"));
  if (!year) return "unparseable year";
  rec.year = static_cast<int>(*year);
  rec.org_unit = get("org_unit");
  rec.institution = get("institution");
  rec.street_address = get("street_address");
  rec.city = get("city");
  rec.postcode = get("postcode");
  rec.country = get("country");
  rec.subjects = split_set(get("subjects"));
  rec.coauthor_ids = split_set(get("coauthor_ids"));
  rec.funding_ids = split_set(get("funding_ids"));
  const std::string& cites = get("citation_count");
  if (cites.empty()) {
    rec.citation_count = 0;
  } else {
    const auto n = parse_int(cites);
    if (!n) return "unparseable citation_count";
    if (*n < 0) return "negative citation_count";
    rec.citation_count = *n;
  }
  return std::nullopt;
}

std::optional<std::string> json_to_record(const nlohmann::json& j, AuthorshipRecord& rec) {
  if (!j.is_object()) return "not a JSON object";
  std::map<std::string, std::string> fields;
  for (const auto& [key, value] : j.items()) {
    if (value.is_null()) continue;
    if (key == "subjects" || key == "coauthor_ids" || key == "funding_ids") {
      if (!value.is_array()) return key + " must be an array";
      std::vector<std::string> items;
      for (const auto& el : value) {
        if (!el.is_string()) return key + " elements must be strings";
        items.push_back(el.get<std::string>());
      }
      fields[key] = join_set(items);
    } else if (value.is_string()) {
      fields[key] = value.get<std::string>();
    } else if (value.is_number_integer()) {
      fields[key] = std::to_string(value.get<long long>());
    } else {
      return key + " has unsupported type";
    }
  }
  return row_to_record(fields, rec);
}

}  // namespace

const std::vector<std::string>& corpus_csv_header() { return kHeader; }

std::optional<CorpusFormat> format_from_name(std::string_view name) {
  if (name == "csv") return CorpusFormat::Csv;
  if (name == "jsonl") return CorpusFormat::Jsonl;
  return std::nullopt;
}

void canonicalize_sets(AuthorshipRecord& rec) {
  for (auto* v : {&rec.subjects, &rec.coauthor_ids, &rec.funding_ids}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
}

IngestResult ingest(const std::string& path, CorpusFormat format, const YearWindow& window) {
  IngestResult result;
  result.corpus.window = window;
  std::size_t attempted = 0;

  auto consume = [&](std::size_t line, std::optional<std::string> error,
                     AuthorshipRecord&& rec) {
    ++attempted;
    if (error) {
      result.report.rejects.push_back({line, std::move(*error)});
      return;
    }
    if (!window.contains(rec.year)) {
      ++result.report.window_filtered;
      return;
    }
    ++result.report.accepted;
    result.corpus.records.push_back(std::move(rec));
  };

  if (format == CorpusFormat::Csv) {
    const auto table = csv::read(path);
    if (table.header != kHeader)
      throw Error("INGEST_SCHEMA_MISMATCH", "unexpected CSV header in " + path);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& row = table.rows[r];
      AuthorshipRecord rec;
      if (row.size() != kHeader.size()) {
        consume(r + 2, "wrong field count", std::move(rec));
        continue;
      }
      std::map<std::string, std::string> fields;
      for (std::size_t c = 0; c < kHeader.size(); ++c) fields[kHeader[c]] = row[c];
      consume(r + 2, row_to_record(fields, rec), std::move(rec));
    }
  } else {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      AuthorshipRecord rec;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        consume(lineno, "invalid JSON", std::move(rec));
        continue;
      }
      consume(lineno, json_to_record(j, rec), std::move(rec));
    }
  }

  if (attempted > 0 && result.report.rejects.size() * 2 > attempted)
    throw Error("INGEST_SCHEMA_MISMATCH",
                "more than half of the rows were rejected; wrong schema? (" +
                    std::to_string(result.report.rejects.size()) + "/" +
                    std::to_string(attempted) + ")");

  std::set<std::string> seen;
  for (const auto& rec : result.corpus.records) seen.insert(rec.record_id);
  (void)seen;  // duplicates are reported by validate(), not dropped here
  return result;
}

std::string export_corpus(const Corpus& corpus, CorpusFormat format) {
  if (format == CorpusFormat::Csv) {
    csv::Table table;
    table.header = kHeader;
    for (const auto& rec : corpus.records) {
      table.rows.push_back({rec.record_id, rec.raw_author_id, rec.author_name,
                            rec.publication_id, std::to_string(rec.year), rec.org_unit,
                            rec.institution, rec.street_address, rec.city, rec.postcode,
                            rec.country, join_set(rec.subjects), join_set(rec.coauthor_ids),
                            join_set(rec.funding_ids), std::to_string(rec.citation_count)});
    }
    return csv::format(table);
  }
  std::string out;
  for (const auto& rec : corpus.records) {
    nlohmann::json j;
    j["record_id"] = rec.record_id;
    j["raw_author_id"] = rec.raw_author_id;
    j["author_name"] = rec.author_name;
    j["publication_id"] = rec.publication_id;
    j["year"] = rec.year;
    j["org_unit"] = rec.org_unit;
    j["institution"] = rec.institution;
    j["street_address"] = rec.street_address;
    j["city"] = rec.city;
    j["postcode"] = rec.postcode;
    j["country"] = rec.country;
    j["subjects"] = rec.subjects;
    j["coauthor_ids"] = rec.coauthor_ids;
    j["funding_ids"] = rec.funding_ids;
    j["citation_count"] = rec.citation_count;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

ValidationReport validate(const Corpus& corpus) {
  ValidationReport report;
  std::map<std::string, int> id_counts;
  for (const auto& rec : corpus.records) ++id_counts[rec.record_id];
  for (const auto& [id, n] : id_counts)
    if (n > 1) report.duplicate_record_ids.push_back(id);
  for (const auto& rec : corpus.records) {
    if (!corpus.window.contains(rec.year)) report.out_of_window.push_back(rec.record_id);
    if (!rec.has_affiliation_field()) report.no_affiliation.push_back(rec.record_id);
    if (rec.citation_count < 0) report.negative_citations.push_back(rec.record_id);
  }
  return report;
}

}  // namespace migraflow
