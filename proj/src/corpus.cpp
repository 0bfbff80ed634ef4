#include "scanalign/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "scanalign/errors.hpp"
#include "scanalign/text.hpp"

namespace scanalign {

std::optional<Digitizer> parse_digitizer(std::string_view code) {
  if (code == "google") return Digitizer::google;
  if (code == "ia") return Digitizer::internet_archive;
  if (code == "local") return Digitizer::local;
  if (code.empty()) return Digitizer::unknown;
  return std::nullopt;
}

std::string_view digitizer_code(Digitizer d) {
  switch (d) {
    case Digitizer::google: return "google";
    case Digitizer::internet_archive: return "ia";
    case Digitizer::local: return "local";
    case Digitizer::unknown: break;
  }
  return "";
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  const std::size_t n = text.size();
  auto peek = [&](std::size_t at) -> std::pair<char32_t, std::size_t> {
    std::size_t p = at;
    char32_t c = text::next_codepoint(text, p);
    return {c, p};
  };
  while (pos < n) {
    const std::size_t start = pos;
    auto [c, after] = peek(pos);
    if (text::is_space(c)) {
      pos = after;
      continue;
    }
    if (text::is_alpha(c)) {
      pos = after;
      while (pos < n) {
        auto [d, next] = peek(pos);
        if (text::is_alpha(d)) {
          pos = next;
        } else if (text::is_apostrophe(d) && next < n && text::is_alpha(peek(next).first)) {
          pos = next;
        } else {
          break;
        }
      }
      tokens.push_back({std::string(text.substr(start, pos - start)), start, pos, true});
    } else if (text::is_digit(c)) {
      pos = after;
      while (pos < n) {
        auto [d, next] = peek(pos);
        if (!text::is_digit(d)) break;
        pos = next;
      }
      tokens.push_back({std::string(text.substr(start, pos - start)), start, pos, false});
    } else {
      pos = after;
      tokens.push_back({std::string(text.substr(start, pos - start)), start, pos, false});
    }
  }
  return tokens;
}

namespace {

bool is_terminal(const Token& t) { return t.text == "." || t.text == "!" || t.text == "?"; }

bool opens_sentence(const Token& t) {
  std::size_t p = 0;
  const char32_t c = text::next_codepoint(t.text, p);
  return text::is_upper(c) || text::is_opening_quote(c);
}

}  // namespace

std::vector<TokenRange> segment_sentences(std::span<const Token> tokens) {
  std::vector<TokenRange> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_terminal(tokens[i])) continue;
    if (i + 1 == tokens.size() || opens_sentence(tokens[i + 1])) {
      out.push_back({begin, i + 1});
      begin = i + 1;
    }
  }
  if (begin < tokens.size()) out.push_back({begin, tokens.size()});
  return out;
}

Book::Book(BookMeta meta, std::string_view raw_text) : meta_(std::move(meta)) {
  if (auto bad = text::find_invalid_utf8(raw_text))
    throw DataError("invalid UTF-8 in book '" + meta_.book_id + "' at byte " + std::to_string(*bad));
  raw_text_ = text::nfc(raw_text);
  tokens_ = tokenize(raw_text_);
  sentences_ = segment_sentences(tokens_);
}

std::size_t Book::sentence_of(std::size_t token_index) const {
  auto it = std::upper_bound(sentences_.begin(), sentences_.end(), token_index,
                             [](std::size_t i, const TokenRange& r) { return i < r.end; });
  return static_cast<std::size_t>(it - sentences_.begin());
}

std::string Book::join(TokenRange range) const {
  std::string out;
  for (std::size_t i = range.begin; i < range.end; ++i) {
    if (i != range.begin) out.push_back(' ');
    out += tokens_[i].text;
  }
  return out;
}

std::vector<std::string> Book::token_texts(TokenRange range) const {
  std::vector<std::string> out;
  out.reserve(range.size());
  for (std::size_t i = range.begin; i < range.end; ++i) out.push_back(tokens_[i].text);
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

namespace {

// RFC 4180 records; quoted fields may contain commas, quotes ("") and newlines.
// Returns false at end of input. `line` tracks the 1-based line number.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  int ch = in.peek();
  if (ch == EOF) return false;
  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  ++line;
  while (true) {
    ch = in.get();
    if (ch == EOF) {
      if (quoted) throw DataError("metadata CSV line " + std::to_string(line) + ": unterminated quote");
      fields.push_back(std::move(field));
      return true;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || field_started_quoted)
        throw DataError("metadata CSV line " + std::to_string(line) + ": stray quote");
      quoted = true;
      field_started_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      if (field_started_quoted)
        throw DataError("metadata CSV line " + std::to_string(line) + ": text after closing quote");
      field.push_back(c);
    }
  }
}

const std::vector<std::string> kMetadataColumns = {"book_id", "title", "author", "pub_year", "source_library",
                                                   "digitizer"};

}  // namespace

std::vector<BookMeta> read_metadata_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open metadata CSV " + path.string());
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!read_csv_record(in, fields, line)) throw DataError("metadata CSV " + path.string() + " is empty");
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
  if (fields != kMetadataColumns)
    throw DataError("metadata CSV header must be exactly book_id,title,author,pub_year,source_library,digitizer");

  std::vector<BookMeta> rows;
  std::set<std::string> seen;
  while (read_csv_record(in, fields, line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    auto fail = [&](const std::string& why) -> DataError {
      return DataError("metadata CSV line " + std::to_string(line) + ": " + why);
    };
    if (fields.size() != kMetadataColumns.size())
      throw fail("expected 6 fields, found " + std::to_string(fields.size()));
    for (const auto& f : fields)
      if (!text::is_valid_utf8(f)) throw fail("invalid UTF-8");
    BookMeta m;
    m.book_id = fields[0];
    m.title = text::nfc(fields[1]);
    m.author = text::nfc(fields[2]);
    if (m.book_id.empty()) throw fail("book_id is required");
    if (m.book_id.find('/') != std::string::npos) throw fail("book_id may not contain '/'");
    if (m.title.empty()) throw fail("title is required");
    if (!seen.insert(m.book_id).second) throw fail("duplicate book_id '" + m.book_id + "'");
    if (!fields[3].empty()) {
      int year = 0;
      const auto& y = fields[3];
      auto [ptr, ec] = std::from_chars(y.data(), y.data() + y.size(), year);
      if (ec != std::errc() || ptr != y.data() + y.size()) throw fail("pub_year is not an integer");
      if (year < 1000 || year > 2100) throw fail("pub_year outside [1000, 2100]");
      m.pub_year = year;
    }
    if (!fields[4].empty()) m.source_library = fields[4];
    auto dig = parse_digitizer(fields[5]);
    if (!dig) throw fail("unknown digitizer '" + fields[5] + "'");
    m.digitizer = *dig;
    rows.push_back(std::move(m));
  }
  return rows;
}

LoadedCorpus load_corpus(const std::filesystem::path& dir, const std::filesystem::path& metadata_path) {
  LoadedCorpus out;
  for (auto& meta : read_metadata_csv(metadata_path)) {
    const auto file = dir / (meta.book_id + ".txt");
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      out.skipped.push_back({meta.book_id, "missing file " + file.string()});
      continue;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string raw = buf.str();
    if (auto bad = text::find_invalid_utf8(raw))
      throw DataError("invalid UTF-8 in " + file.string() + " at byte " + std::to_string(*bad));
    out.books.emplace_back(std::move(meta), raw);
  }
  std::sort(out.books.begin(), out.books.end(), [](const Book& a, const Book& b) { return a.id() < b.id(); });
  std::sort(out.skipped.begin(), out.skipped.end(),
            [](const SkipEntry& a, const SkipEntry& b) { return a.book_id < b.book_id; });
  return out;
}

}  // namespace scanalign
