#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scanalign {

enum class Digitizer { google, internet_archive, local, unknown };

/// Parses the metadata CSV code ("google", "ia", "local", "").
std::optional<Digitizer> parse_digitizer(std::string_view code);
std::string_view digitizer_code(Digitizer d);

struct BookMeta {
  std::string book_id;
  std::string title;
  std::string author;
  std::optional<int> pub_year;
  std::optional<std::string> source_library;
  Digitizer digitizer = Digitizer::unknown;
};

struct Token {
  std::string text;
  std::size_t char_start = 0;  // byte offsets into the raw text
  std::size_t char_end = 0;
  bool is_word = false;
};

/// Half-open range of token indices.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

/// Alphabetic runs (with internal apostrophes) and digit runs are single
/// tokens; every other non-space character is a token by itself.
std::vector<Token> tokenize(std::string_view text);

/// Splits at '.', '!' or '?' when followed by end of text, an uppercase
/// initial or an opening quote. Ranges partition the token sequence.
std::vector<TokenRange> segment_sentences(std::span<const Token> tokens);

/// A tokenized, sentence-segmented text. Immutable once built.
class Book {
 public:
  Book() = default;
  /// Validates UTF-8, applies NFC, tokenizes and segments.
  Book(BookMeta meta, std::string_view raw_text);

  const BookMeta& meta() const { return meta_; }
  const std::string& id() const { return meta_.book_id; }
  const std::string& raw_text() const { return raw_text_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<TokenRange>& sentences() const { return sentences_; }
  std::size_t token_count() const { return tokens_.size(); }

  /// Index of the sentence containing token `i` (i < token_count()).
  std::size_t sentence_of(std::size_t token_index) const;

  /// Token texts in [range.begin, range.end) joined by single spaces.
  std::string join(TokenRange range) const;
  std::vector<std::string> token_texts(TokenRange range) const;

 private:
  BookMeta meta_;
  std::string raw_text_;
  std::vector<Token> tokens_;
  std::vector<TokenRange> sentences_;
};

std::string join_tokens(std::span<const std::string> tokens);

struct SkipEntry {
  std::string book_id;
  std::string reason;
};

struct LoadedCorpus {
  std::vector<Book> books;  // sorted by book_id
  std::vector<SkipEntry> skipped;
};

/// Reads the metadata CSV. Throws DataError naming the line on malformed rows.
std::vector<BookMeta> read_metadata_csv(const std::filesystem::path& path);

/// Loads `<dir>/<book_id>.txt` for every metadata row. Missing files are
/// reported in `skipped`; invalid UTF-8 throws DataError.
LoadedCorpus load_corpus(const std::filesystem::path& dir, const std::filesystem::path& metadata_path);

}  // namespace scanalign
