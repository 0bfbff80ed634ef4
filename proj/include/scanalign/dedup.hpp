#pragma once

// Duplicate detection over five-gram sets: author blocking, pairwise
// overlap, connected components and anthology filtering.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "scanalign/corpus.hpp"
#include "scanalign/rng.hpp"

namespace scanalign {

enum class OverlapMetric { containment_min, jaccard };

struct FiveGramSet {
  std::string book_id;
  std::vector<std::uint64_t> grams;  // sorted, distinct
};

struct DuplicateSet {
  std::string set_id;
  std::vector<std::string> member_book_ids;     // sorted
  std::vector<std::string> anthology_book_ids;  // sorted; removed members
};

/// Title prefixes that mark a volume as a collection.
std::vector<std::string> default_anthology_patterns();

/// One pattern per line; blank lines and lines starting with '#' ignored.
std::vector<std::string> load_anthology_patterns(const std::filesystem::path& path);

struct DedupConfig {
  double threshold = 0.5;
  OverlapMetric metric = OverlapMetric::containment_min;
  std::vector<std::string> anthology_patterns = default_anthology_patterns();
};

FiveGramSet build_fivegrams(const Book& book);

/// |a∩b| / min(|a|,|b|) (or Jaccard); 0 when either set is empty.
double overlap(const FiveGramSet& a, const FiveGramSet& b, OverlapMetric metric = OverlapMetric::containment_min);

/// Case-folded, punctuation stripped, whitespace collapsed.
std::string normalize_author(std::string_view author);

/// Components of the similarity graph restricted to author blocks.
/// Singletons included. Set ids are assigned in order of smallest member.
std::vector<DuplicateSet> cluster(std::span<const Book> books, const DedupConfig& config = {});

using BookIndex = std::unordered_map<std::string, const Book*>;
BookIndex index_books(std::span<const Book> books);

bool title_matches_anthology_pattern(std::string_view title, std::span<const std::string> patterns);

/// Marks anthology members of `set` and re-clusters the survivors. The
/// result has one set per surviving component; the anthology ids are
/// recorded on the first of them. Set ids in the result are provisional
/// (`<set_id>.<k>`); dedup_corpus renumbers them.
std::vector<DuplicateSet> filter_anthologies(const DuplicateSet& set, const BookIndex& books,
                                             const DedupConfig& config = {});

/// cluster → filter_anthologies → final renumbering.
std::vector<DuplicateSet> dedup_corpus(std::span<const Book> books, const DedupConfig& config = {});

}  // namespace scanalign
