#pragma once

// Which of two scans is better (majority prior plus confidence-weighted
// log posterior), and which member of a duplicate set is canonical.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scanalign/dedup.hpp"
#include "scanalign/scoring.hpp"

namespace scanalign {

struct ConfidencePair {
  double p = 0.5;  // confidence for book 1
  double q = 0.5;  // confidence for book 2
};

enum class BookSide { first = 1, second = 2 };

/// count(p_i > q_i) / n for book 1, count(q_i > p_i) / n for book 2. Ties
/// count for neither. Throws EmptyComparison when n = 0.
double majority_prior(std::span<const ConfidencePair> pairs, BookSide side = BookSide::first);

/// Σ ln p_i + ln prior (q_i for book 2). A zero prior is floored to 1/(n+1).
double log_posterior(std::span<const ConfidencePair> pairs, BookSide side);

struct BookComparison {
  std::string book1_id;
  std::string book2_id;
  std::size_t n = 0;
  std::vector<ConfidencePair> pairs;
  std::size_t majority_1 = 0;
  std::size_t majority_2 = 0;
  double log_posterior_1 = 0.0;
  double log_posterior_2 = 0.0;
  std::string winner;
  bool no_evidence = false;     // no difference records; smaller id wins
  bool low_confidence = false;  // alignment fell back to greedy matching somewhere
};

/// Builds the comparison from already-rated pairs. Pairs must come from
/// aligning book1 (side a) against book2 (side b).
BookComparison compare_scored(const std::string& book1_id, const std::string& book2_id,
                              std::span<const ScoredSentencePair> rated);

struct CompareOptions {
  AlignConfig align;
  std::uint64_t seed = 0;
};

/// align_pair → extract_differences → rate_pairs → compare_scored.
/// AlignmentImpossible propagates.
BookComparison compare_books(const Book& a, const Book& b, const SentenceScorer& scorer,
                             const CompareOptions& options = {});

struct BracketMatch {
  std::string a;
  std::string b;  // empty for a bye
  std::string winner;
  double lp_a = 0.0;
  double lp_b = 0.0;
  bool bye = false;
  bool flagged = false;  // comparison failed or carried no evidence
  std::string note;
};

struct CanonicalResult {
  std::string set_id;
  std::string canonical_book_id;
  std::vector<std::vector<BracketMatch>> bracket;  // one entry per round
};

using BookComparator = std::function<BookComparison(const std::string&, const std::string&)>;

/// Single-elimination over the sorted members; the last unpaired member of
/// a round gets the bye. A match whose comparison throws is flagged and won
/// by the smaller id.
CanonicalResult tournament(const DuplicateSet& set, const BookComparator& compare);

CanonicalResult tournament(const DuplicateSet& set, const BookIndex& books, const SentenceScorer& scorer,
                           const CompareOptions& options = {});

struct GoldenPair {
  std::string truth_id;
  std::string scanned_id;
};

struct GoldenResult {
  std::size_t total = 0;
  std::size_t preferred_truth = 0;
  std::size_t failed = 0;  // alignment impossible; counted against the truth side
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(preferred_truth) / static_cast<double>(total); }
};

/// Fraction of pairs where compare_books picks the truth side. Throws
/// std::invalid_argument on empty input.
GoldenResult golden_eval(std::span<const GoldenPair> pairs, const BookIndex& books, const SentenceScorer& scorer,
                         const CompareOptions& options = {});

}  // namespace scanalign
