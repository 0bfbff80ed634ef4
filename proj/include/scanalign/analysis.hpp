#pragma once

// Corpus quality analytics and character-substitution statistics.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scanalign/singlecopy.hpp"

namespace scanalign {

struct QualityReport {
  std::string book_id;
  double quality = 1.0;  // share of sentences without a flagged error
  std::size_t sentence_count = 0;
  std::size_t error_sentence_count = 0;
};

using SpanDetector = std::function<std::vector<DetectionSpan>(std::span<const std::string>)>;

/// A sentence is erroneous when it holds a span with confidence >= threshold.
/// Throws DataError for a book without sentences.
QualityReport book_quality(const Book& book, const SpanDetector& detector, double threshold = 0.95);
QualityReport book_quality(const Book& book, const ChannelModel& model, double threshold = 0.95);

/// Duplicate books: a sentence is erroneous when it lost a rated pairing.
QualityReport book_quality_from_pairs(const Book& book, std::span<const ScoredSentencePair> pairs);

struct LibraryQuality {
  std::string library;
  std::string digitizer;  // most common in the group
  std::size_t count = 0;
  std::optional<double> mean_year;
  double mean_quality = 0.0;
};

struct YearQuality {
  int year = 0;
  double mean_quality = 0.0;
  std::size_t count = 0;
};

struct QualityTables {
  std::vector<LibraryQuality> by_library;  // sorted by library code
  std::vector<YearQuality> by_year;        // sorted by year; undated books omitted
};

/// Joins reports with metadata by book id; reports without metadata are
/// skipped.
QualityTables aggregate_quality(std::span<const QualityReport> reports, std::span<const BookMeta> meta);

void write_library_csv(const std::filesystem::path& path, std::span<const LibraryQuality> rows);
void write_year_csv(const std::filesystem::path& path, std::span<const YearQuality> rows);

struct Substitution {
  std::string replacement;
  std::uint64_t count = 0;
  double norm_freq = 0.0;  // count over all substitutions in the table
};

/// Source character (lowercase letter seen in the losing reading) ->
/// replacements from the winning reading.
class SubstitutionTable {
 public:
  void add(const std::string& source, const std::string& replacement, std::uint64_t n = 1);

  std::uint64_t total() const { return total_; }
  std::uint64_t count(const std::string& source, const std::string& replacement) const;
  /// Replacements for one source, count descending then replacement order.
  std::vector<Substitution> row(const std::string& source) const;
  std::vector<std::string> sources() const;

  /// source_char, replacement, count, norm_freq
  void save_tsv(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::map<std::string, std::uint64_t>> counts_;
  std::uint64_t total_ = 0;
};

/// The lowercase letter a single-codepoint string folds to, if any.
std::optional<std::string> substitution_source(std::string_view s);

/// Per non-tied pair: when the losing gap is one single-character token,
/// that character maps to the whole winning gap; otherwise single-character
/// observed sides of the character-level edit blocks are recorded. Only
/// letter sources count.
SubstitutionTable mine_substitutions(std::span<const ScoredSentencePair> pairs);

}  // namespace scanalign
