#include "migraflow/text.hpp"

#include <algorithm>
#include <set>

#include "migraflow/csv.hpp"
#include "migraflow/util.hpp"

namespace migraflow {

namespace {

// Base letter for the Latin-1 supplement and the Latin Extended-A block.
// Everything else non-ASCII is treated as punctuation.
char fold_codepoint(char32_t cp) {
  if (cp >= 0xC0 && cp <= 0xFF) {
    static constexpr const char* kLatin1 =
        // 0xC0..0xFF
        "aaaaaaaceeeeiiii"   // C0-CF (0xC6 ae -> a)
        "dnooooo.ouuuuyps"   // D0-DF (0xD7 multiplication sign -> punct)
        "aaaaaaaceeeeiiii"   // E0-EF
        "dnooooo.ouuuuypy";  // F0-FF
    const char c = kLatin1[cp - 0xC0];
    return c == '.' ? '\0' : c;
  }
  if (cp >= 0x100 && cp <= 0x17F) {
    struct Range {
      char32_t lo, hi;
      char base;
    };
    static constexpr Range kRanges[] = {
        {0x100, 0x105, 'a'}, {0x106, 0x10D, 'c'}, {0x10E, 0x111, 'd'},
        {0x112, 0x11B, 'e'}, {0x11C, 0x123, 'g'}, {0x124, 0x127, 'h'},
        {0x128, 0x131, 'i'}, {0x132, 0x135, 'j'}, {0x136, 0x138, 'k'},
        {0x139, 0x142, 'l'}, {0x143, 0x14B, 'n'}, {0x14C, 0x153, 'o'},
        {0x154, 0x159, 'r'}, {0x15A, 0x161, 's'}, {0x162, 0x167, 't'},
        {0x168, 0x173, 'u'}, {0x174, 0x175, 'w'}, {0x176, 0x178, 'y'},
        {0x179, 0x17E, 'z'}, {0x17F, 0x17F, 's'},
    };
    for (const auto& r : kRanges)
      if (cp >= r.lo && cp <= r.hi) return r.base;
  }
  return '\0';
}

// Minimal UTF-8 decode; malformed bytes yield 0 (-> punctuation).
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    const char32_t cp = ((b0 & 0x1Fu) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    const char32_t cp = ((b0 & 0x0Fu) << 12) |
                        ((static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6) |
                        (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    i += 4;
    return 0;
  }
  ++i;
  return 0;
}

std::string fold_and_clean(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  auto push = [&](char c) {
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  };
  std::size_t i = 0;
  while (i < s.size()) {
    const char32_t cp = decode_utf8(s, i);
    if (cp < 0x80) {
      const char c = static_cast<char>(cp);
      if (c >= 'a' && c <= 'z') {
        push(c);
      } else if (c >= 'A' && c <= 'Z') {
        push(static_cast<char>(c - 'A' + 'a'));
      } else if (c >= '0' && c <= '9') {
        push(c);
      } else {
        pending_space = true;
      }
    } else {
      const char folded = fold_codepoint(cp);
      if (folded)
        push(folded);
      else
        pending_space = true;
    }
  }
  return out;
}

}  // namespace

void AbbreviationTable::insert(std::string_view abbrev, std::string_view expansion) {
  const std::string key = fold_and_clean(abbrev);
  const std::string value = fold_and_clean(expansion);
  if (key.empty()) throw Error("ABBREV_EMPTY_KEY", "empty abbreviation key");
  if (key.find(' ') != std::string::npos)
    throw Error("ABBREV_MULTIWORD_KEY", "abbreviation keys are single tokens: " + key);
  entries_[key] = value;
}

AbbreviationTable AbbreviationTable::load_csv(const std::string& path) {
  const auto table = csv::read(path);
  const int c_abbrev = table.column("abbrev");
  const int c_expansion = table.column("expansion");
  if (c_abbrev < 0 || c_expansion < 0)
    throw Error("ABBREV_SCHEMA", "abbreviation table needs abbrev,expansion columns: " + path);
  AbbreviationTable t;
  for (const auto& row : table.rows)
    t.insert(row[static_cast<std::size_t>(c_abbrev)], row[static_cast<std::size_t>(c_expansion)]);
  // Expansions that are themselves keys would break idempotence.
  for (const auto& [k, v] : t.entries_)
    for (const auto& tok : tokenize(v))
      if (t.entries_.count(tok) && tok != k)
        throw Error("ABBREV_NOT_FIXPOINT", "expansion of '" + k + "' contains key '" + tok + "'");
  return t;
}

const AbbreviationTable& AbbreviationTable::builtin_default() {
  static const AbbreviationTable table = [] {
    AbbreviationTable t;
    t.insert("univ", "universidad");
    t.insert("nac", "nacional");
    t.insert("auton", "autonoma");
    t.insert("inst", "instituto");
    t.insert("tecnol", "tecnologico");
    t.insert("dept", "departamento");
    t.insert("depto", "departamento");
    t.insert("fac", "facultad");
    t.insert("cd", "ciudad");
    t.insert("edo", "estado");
    t.insert("av", "avenida");
    t.insert("ave", "avenida");
    return t;
  }();
  return table;
}

std::string normalize_text(std::string_view s, const AbbreviationTable& abbrev) {
  const std::string cleaned = fold_and_clean(s);
  std::string out;
  out.reserve(cleaned.size());
  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    std::size_t end = cleaned.find(' ', pos);
    if (end == std::string::npos) end = cleaned.size();
    const std::string_view token(cleaned.data() + pos, end - pos);
    const auto it = abbrev.entries().find(token);
    if (!out.empty()) out.push_back(' ');
    out += it != abbrev.entries().end() ? it->second : std::string(token);
    pos = end + 1;
  }
  return out;
}

std::string normalize_text(std::string_view s) {
  return normalize_text(s, AbbreviationTable::builtin_default());
}

std::vector<std::string> tokenize(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    std::size_t end = normalized.find(' ', pos);
    if (end == std::string_view::npos) end = normalized.size();
    if (end > pos) tokens.emplace_back(normalized.substr(pos, end - pos));
    pos = end + 1;
  }
  return tokens;
}

double bigram_similarity(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) return 0.0;
  if (a == b) return 1.0;
  auto bigrams = [](std::string_view s) {
    std::set<std::string> grams;
    if (s.size() == 1) {
      grams.insert(std::string(s));
      return grams;
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      grams.insert(std::string(s.substr(i, 2)));
    return grams;
  };
  const auto ga = bigrams(a);
  const auto gb = bigrams(b);
  std::size_t shared = 0;
  for (const auto& g : ga) shared += gb.count(g);
  return 2.0 * static_cast<double>(shared) /
         static_cast<double>(ga.size() + gb.size());
}

}  // namespace migraflow
