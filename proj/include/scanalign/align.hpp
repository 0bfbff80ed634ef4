#pragma once

// Token-level alignment of two scans of the same work.
//
// Tokens unique in both books ("anchors") are chained by a longest
// increasing subsequence; the stretches between consecutive anchors are
// aligned exactly by LCS dynamic programming. Oversized stretches recurse on
// anchors local to the stretch, then on anchor bigrams, and finally fall back
// to greedy run matching (flagged low_confidence).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scanalign/corpus.hpp"

namespace scanalign {

struct AlignConfig {
  // A stretch is aligned by full DP when rows*cols <= max_segment_tokens^2.
  std::size_t max_segment_tokens = 5000;
  // Drop an anchor when forcing it shortens the alignment of its two
  // neighbouring stretches.
  bool validate_anchors = true;
};

struct Anchor {
  std::size_t token_index = 0;
  std::string token_text;
};

struct AnchorSequence {
  std::string book_id;
  std::vector<Anchor> anchors;
};

struct Match {
  std::size_t a = 0;
  std::size_t b = 0;
  friend bool operator==(const Match&, const Match&) = default;
};

struct TokenAlignment {
  std::vector<Match> matches;  // strictly increasing in both coordinates
  bool low_confidence = false;
};

struct PairAlignment {
  std::string book_a_id;
  std::string book_b_id;
  std::vector<Match> matches;
  bool low_confidence = false;
};

/// Tokens occurring exactly once in the book (case-sensitive), in order.
AnchorSequence extract_anchors(const Book& book);

/// Aligns two token sequences. The result does not depend on argument
/// order beyond mirroring: align_tokens(b, a) is align_tokens(a, b) with the
/// coordinates swapped. Throws AlignmentImpossible when the sequences differ
/// and share neither anchor tokens nor anchor bigrams.
TokenAlignment align_tokens(std::span<const std::string> a, std::span<const std::string> b,
                            const AlignConfig& config = {});

PairAlignment align_pair(const Book& a, const Book& b, const AlignConfig& config = {});

/// One maximal alignment gap (adjacent gaps sharing a sentence are merged).
struct DifferenceRecord {
  std::string book_a_id;
  std::string book_b_id;
  std::size_t index = 0;        // position within the pair's record list
  TokenRange gap_a;             // may be empty
  TokenRange gap_b;             // may be empty
  TokenRange sentence_a_range;  // token range of the enclosing sentence(s)
  TokenRange sentence_b_range;
  std::string sentence_a;
  std::string sentence_b;
  std::vector<std::string> gap_a_tokens;
  std::vector<std::string> gap_b_tokens;
  std::string context_before;  // matched token preceding the gap, if any
  std::string context_after;   // matched token following the gap, if any
  bool low_confidence = false;

  /// Sentence tokens (as re-tokenizable strings) for each side.
  std::vector<std::string> sentence_tokens_a() const;
  std::vector<std::string> sentence_tokens_b() const;
  /// Gap offsets relative to the start of the enclosing sentence.
  TokenRange relative_gap_a() const { return {gap_a.begin - sentence_a_range.begin, gap_a.end - sentence_a_range.begin}; }
  TokenRange relative_gap_b() const { return {gap_b.begin - sentence_b_range.begin, gap_b.end - sentence_b_range.begin}; }
};

std::vector<DifferenceRecord> extract_differences(const PairAlignment& alignment, const Book& a, const Book& b);

}  // namespace scanalign
