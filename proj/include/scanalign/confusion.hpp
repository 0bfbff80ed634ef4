#pragma once

// Character-level confusions between an OCR reading and the reading it
// should have been, mined from rated sentence pairs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scanalign/scoring.hpp"

namespace scanalign {

/// A maximal run of non-matching characters in a Levenshtein alignment.
struct EditBlock {
  std::string observed;  // text in the erroneous reading
  std::string correct;   // text it replaces
  friend bool operator==(const EditBlock&, const EditBlock&) = default;
};

/// Codepoint-level Levenshtein alignment of `observed` against `correct`,
/// reported as edit blocks in left-to-right order. Identical inputs give none.
std::vector<EditBlock> edit_blocks(std::string_view observed, std::string_view correct);

/// Codepoint Levenshtein distance.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// In a scored pair, the loser's gap is the observed side and the winner's
/// gap the correct side. Gaps are rendered as space-joined tokens.
std::string loser_gap_text(const ScoredSentencePair& pair);
std::string winner_gap_text(const ScoredSentencePair& pair);

struct Confusion {
  std::string correct;
  std::string observed;
  std::uint64_t count = 0;
};

/// correct -> observed counts.
class ConfusionTable {
 public:
  void add(const std::string& correct, const std::string& observed, std::uint64_t n = 1);
  void merge(const ConfusionTable& other);

  std::uint64_t count(const std::string& correct, const std::string& observed) const;
  std::uint64_t total() const { return total_; }
  bool empty() const { return counts_.empty(); }

  /// Sorted by count descending, then by (correct, observed).
  std::vector<Confusion> entries() const;

  /// Tab-separated: correct, observed, count. Spaces are kept literally.
  void save(const std::filesystem::path& path) const;
  static ConfusionTable load(const std::filesystem::path& path);

 private:
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Edit blocks between each non-tied pair's loser and winner gaps. Blocks
/// longer than `max_block_chars` on either side and very long gaps are
/// skipped.
ConfusionTable mine_confusions(std::span<const ScoredSentencePair> pairs, std::size_t max_block_chars = 4);

}  // namespace scanalign
