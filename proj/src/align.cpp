#include "scanalign/align.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "scanalign/errors.hpp"

namespace scanalign {

AnchorSequence extract_anchors(const Book& book) {
  std::unordered_map<std::string_view, std::size_t> freq;
  for (const auto& t : book.tokens()) ++freq[t.text];
  AnchorSequence out{book.id(), {}};
  const auto& toks = book.tokens();
  for (std::size_t i = 0; i < toks.size(); ++i)
    if (freq[toks[i].text] == 1) out.anchors.push_back({i, toks[i].text});
  return out;
}

namespace {

using Id = std::uint32_t;

// A run of `len` equal tokens starting at (a, b).
struct Block {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t len = 0;
};

struct Range {
  std::size_t a0, a1, b0, b1;
  std::size_t rows() const { return a1 - a0; }
  std::size_t cols() const { return b1 - b0; }
  bool degenerate() const { return a0 == a1 || b0 == b1; }
};

enum class AnchorKind { unigram, bigram, greedy };

template <typename Cell>
void dp_trace(const Id* A, std::size_t n, const Id* B, std::size_t m, std::size_t oa, std::size_t ob,
              std::vector<Cell>& table, std::vector<Match>& out) {
  const std::size_t w = m + 1;
  table.assign((n + 1) * w, 0);
  for (std::size_t i = n; i-- > 0;) {
    Cell* row = &table[i * w];
    const Cell* below = &table[(i + 1) * w];
    for (std::size_t j = m; j-- > 0;) {
      row[j] = A[i] == B[j] ? static_cast<Cell>(below[j + 1] + 1) : std::max(below[j], row[j + 1]);
    }
  }
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (A[i] == B[j]) {
      out.push_back({oa + i, ob + j});
      ++i;
      ++j;
    } else if (table[(i + 1) * w + j] >= table[i * w + j + 1]) {
      ++i;
    } else {
      ++j;
    }
  }
}

// Exact LCS of A[0..n) and B[0..m): matches equal tokens eagerly, otherwise
// skips in A before B on ties.
void dp_align(const Id* A, std::size_t n, const Id* B, std::size_t m, std::size_t oa, std::size_t ob,
              std::vector<Match>& out) {
  while (n > 0 && m > 0 && *A == *B) {
    out.push_back({oa, ob});
    ++A, ++B, ++oa, ++ob, --n, --m;
  }
  if (n == 0 || m == 0) return;
  if (std::min(n, m) < 0xFFFF) {
    thread_local std::vector<std::uint16_t> table;
    dp_trace(A, n, B, m, oa, ob, table, out);
  } else {
    thread_local std::vector<std::uint32_t> table;
    dp_trace(A, n, B, m, oa, ob, table, out);
  }
}

std::size_t dp_length(const Id* A, std::size_t n, const Id* B, std::size_t m) {
  if (n == 0 || m == 0) return 0;
  thread_local std::vector<std::uint32_t> prev, cur;
  prev.assign(m + 1, 0);
  cur.assign(m + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      cur[j + 1] = A[i] == B[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    std::swap(prev, cur);
  }
  return prev[m];
}

// Longest chain of points strictly increasing in both coordinates. Points
// must be sorted by `a`.
std::vector<Block> longest_chain(const std::vector<Block>& pts) {
  std::vector<std::size_t> tails;  // index into pts of the smallest tail per length
  std::vector<std::size_t> pred(pts.size(), static_cast<std::size_t>(-1));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    auto it = std::lower_bound(tails.begin(), tails.end(), pts[k].b,
                               [&](std::size_t t, std::size_t b) { return pts[t].b < b; });
    if (it != tails.begin()) pred[k] = *(it - 1);
    if (it == tails.end()) tails.push_back(k);
    else *it = k;
  }
  std::vector<Block> chain;
  if (tails.empty()) return chain;
  for (std::size_t k = tails.back(); k != static_cast<std::size_t>(-1); k = pred[k]) chain.push_back(pts[k]);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

class Aligner {
 public:
  Aligner(const std::vector<Id>& A, const std::vector<Id>& B, std::size_t vocab, const AlignConfig& config)
      : A_(A), B_(B), config_(config), count_a_(vocab, 0), count_b_(vocab, 0), pos_a_(vocab), pos_b_(vocab) {}

  std::vector<Match> run() {
    const Range all{0, A_.size(), 0, B_.size()};
    auto blocks = unigram_anchors(all);
    AnchorKind kind = AnchorKind::unigram;
    if (blocks.empty()) {
      blocks = bigram_anchors(all);
      kind = AnchorKind::bigram;
    }
    if (blocks.empty()) throw AlignmentImpossible("books share no anchor tokens or anchor bigrams");
    chain(all, blocks, kind);
    return std::move(out_);
  }

  bool low_confidence() const { return low_confidence_; }

 private:
  std::size_t cap() const { return config_.max_segment_tokens * config_.max_segment_tokens; }
  bool fits(const Range& r) const { return r.rows() * r.cols() <= cap(); }

  std::size_t lcs_length(const Range& r) const {
    return dp_length(A_.data() + r.a0, r.rows(), B_.data() + r.b0, r.cols());
  }

  std::vector<Block> unigram_anchors(const Range& r) {
    std::vector<Id> touched;
    for (std::size_t i = r.a0; i < r.a1; ++i) {
      const Id t = A_[i];
      if (count_a_[t]++ == 0 && count_b_[t] == 0) touched.push_back(t);
      pos_a_[t] = i;
    }
    for (std::size_t j = r.b0; j < r.b1; ++j) {
      const Id t = B_[j];
      if (count_b_[t]++ == 0 && count_a_[t] == 0) touched.push_back(t);
      pos_b_[t] = j;
    }
    std::vector<Block> pts;
    for (Id t : touched)
      if (count_a_[t] == 1 && count_b_[t] == 1) pts.push_back({pos_a_[t], pos_b_[t], 1});
    for (Id t : touched) count_a_[t] = count_b_[t] = 0;
    std::sort(pts.begin(), pts.end(), [](const Block& x, const Block& y) { return x.a < y.a; });
    return merge_diagonal(longest_chain(pts));
  }

  std::vector<Block> bigram_anchors(const Range& r) {
    if (r.rows() < 2 || r.cols() < 2) return {};
    struct Seen {
      std::uint32_t count_a = 0, count_b = 0;
      std::size_t pos_a = 0, pos_b = 0;
    };
    std::unordered_map<std::uint64_t, Seen> grams;
    auto key = [](Id x, Id y) { return (static_cast<std::uint64_t>(x) << 32) | y; };
    for (std::size_t i = r.a0; i + 1 < r.a1; ++i) {
      auto& s = grams[key(A_[i], A_[i + 1])];
      ++s.count_a;
      s.pos_a = i;
    }
    for (std::size_t j = r.b0; j + 1 < r.b1; ++j) {
      auto it = grams.find(key(B_[j], B_[j + 1]));
      if (it == grams.end()) continue;
      ++it->second.count_b;
      it->second.pos_b = j;
    }
    std::vector<Block> pts;
    for (const auto& [k, s] : grams)
      if (s.count_a == 1 && s.count_b == 1) pts.push_back({s.pos_a, s.pos_b, 2});
    std::sort(pts.begin(), pts.end(), [](const Block& x, const Block& y) { return x.a < y.a; });
    // Drop bigrams overlapping the previous one unless they continue it on the diagonal.
    std::vector<Block> kept;
    for (const auto& p : longest_chain(pts)) {
      if (!kept.empty()) {
        const auto& q = kept.back();
        const bool diagonal = p.a - q.a == p.b - q.b && p.a < q.a + q.len;
        if (!diagonal && (p.a < q.a + q.len || p.b < q.b + q.len)) continue;
      }
      kept.push_back(p);
    }
    return merge_diagonal(kept);
  }

  static std::vector<Block> merge_diagonal(const std::vector<Block>& blocks) {
    std::vector<Block> out;
    for (const auto& blk : blocks) {
      if (!out.empty()) {
        auto& q = out.back();
        if (blk.a - q.a == blk.b - q.b && blk.a <= q.a + q.len) {
          q.len = std::max(q.len, blk.a + blk.len - q.a);
          continue;
        }
      }
      out.push_back(blk);
    }
    return out;
  }

  // Aligns the stretches between consecutive blocks of a chain.
  void chain(const Range& r, const std::vector<Block>& blocks, AnchorKind kind) {
    std::size_t pa = r.a0, pb = r.b0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const Block& blk = blocks[k];
      if (config_.validate_anchors) {
        const std::size_t na = k + 1 < blocks.size() ? blocks[k + 1].a : r.a1;
        const std::size_t nb = k + 1 < blocks.size() ? blocks[k + 1].b : r.b1;
        const Range window{pa, na, pb, nb};
        if (fits(window)) {
          const std::size_t forced = lcs_length({pa, blk.a, pb, blk.b}) + blk.len +
                                     lcs_length({blk.a + blk.len, na, blk.b + blk.len, nb});
          if (lcs_length(window) > forced) continue;
        }
      }
      segment({pa, blk.a, pb, blk.b}, kind);
      for (std::size_t d = 0; d < blk.len; ++d) out_.push_back({blk.a + d, blk.b + d});
      pa = blk.a + blk.len;
      pb = blk.b + blk.len;
    }
    segment({pa, r.a1, pb, r.b1}, kind);
  }

  void segment(const Range& r, AnchorKind kind) {
    if (r.degenerate()) return;
    if (fits(r)) {
      dp_align(A_.data() + r.a0, r.rows(), B_.data() + r.b0, r.cols(), r.a0, r.b0, out_);
      return;
    }
    if (kind == AnchorKind::unigram) {
      if (auto blocks = unigram_anchors(r); !blocks.empty()) return chain(r, blocks, AnchorKind::unigram);
      kind = AnchorKind::bigram;
    }
    if (kind == AnchorKind::bigram) {
      if (auto blocks = bigram_anchors(r); !blocks.empty()) return chain(r, blocks, AnchorKind::bigram);
    }
    greedy(r);
  }

  // Walks both stretches in lockstep, resynchronising on the nearest run of
  // three equal tokens.
  void greedy(const Range& r) {
    low_confidence_ = true;
    constexpr std::size_t kWindow = 64;
    constexpr std::size_t kRun = 3;
    std::size_t i = r.a0, j = r.b0;
    auto run_at = [&](std::size_t x, std::size_t y) {
      for (std::size_t d = 0; d < kRun; ++d)
        if (x + d >= r.a1 || y + d >= r.b1 || A_[x + d] != B_[y + d]) return false;
      return true;
    };
    while (i < r.a1 && j < r.b1) {
      if (A_[i] == B_[j]) {
        out_.push_back({i, j});
        ++i, ++j;
        continue;
      }
      bool found = false;
      for (std::size_t d = 1; d <= kWindow && !found; ++d) {
        for (std::size_t da = 0; da <= d; ++da) {
          if (run_at(i + da, j + d - da)) {
            i += da;
            j += d - da;
            found = true;
            break;
          }
        }
      }
      if (!found) ++i, ++j;
    }
  }

  const std::vector<Id>& A_;
  const std::vector<Id>& B_;
  const AlignConfig& config_;
  std::vector<std::uint32_t> count_a_, count_b_;
  std::vector<std::size_t> pos_a_, pos_b_;
  std::vector<Match> out_;
  bool low_confidence_ = false;
};

TokenAlignment align_oriented(std::span<const std::string> a, std::span<const std::string> b,
                              const AlignConfig& config) {
  TokenAlignment result;
  if (std::equal(a.begin(), a.end(), b.begin(), b.end())) {
    result.matches.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) result.matches.push_back({i, i});
    return result;
  }
  std::unordered_map<std::string_view, Id> ids;
  ids.reserve(a.size() + b.size());
  auto intern = [&](std::span<const std::string> seq) {
    std::vector<Id> out;
    out.reserve(seq.size());
    for (const auto& s : seq) out.push_back(ids.try_emplace(s, static_cast<Id>(ids.size())).first->second);
    return out;
  };
  const auto A = intern(a);
  const auto B = intern(b);
  Aligner aligner(A, B, ids.size(), config);
  result.matches = aligner.run();
  result.low_confidence = aligner.low_confidence();
  return result;
}

}  // namespace

TokenAlignment align_tokens(std::span<const std::string> a, std::span<const std::string> b,
                            const AlignConfig& config) {
  // Always align in one canonical orientation so that swapping the inputs
  // mirrors the result exactly, tie-breaks included.
  if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end())) {
    auto r = align_oriented(b, a, config);
    for (auto& m : r.matches) std::swap(m.a, m.b);
    return r;
  }
  return align_oriented(a, b, config);
}

PairAlignment align_pair(const Book& a, const Book& b, const AlignConfig& config) {
  const auto ta = a.token_texts({0, a.token_count()});
  const auto tb = b.token_texts({0, b.token_count()});
  auto r = align_tokens(ta, tb, config);
  return {a.id(), b.id(), std::move(r.matches), r.low_confidence};
}

namespace {

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find(' ', start);
    if (end == std::string::npos) end = s.size();
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

// Inclusive sentence-index span touched by a gap. Empty gaps attach to the
// sentence of the preceding matched token (or the following one at the start).
struct SentenceSpan {
  std::size_t first = 0, last = 0;
  bool valid = false;
};

SentenceSpan sentences_for(const Book& book, TokenRange gap, std::size_t prev_match, bool has_prev) {
  if (book.sentences().empty()) return {};
  if (!gap.empty()) return {book.sentence_of(gap.begin), book.sentence_of(gap.end - 1), true};
  std::size_t at = has_prev ? prev_match : gap.begin;
  if (at >= book.token_count()) at = book.token_count() - 1;
  const std::size_t s = book.sentence_of(at);
  return {s, s, true};
}

bool spans_overlap(const SentenceSpan& x, const SentenceSpan& y) {
  return x.valid && y.valid && x.first <= y.last && y.first <= x.last;
}

TokenRange to_tokens(const Book& book, const SentenceSpan& s) {
  if (!s.valid) return {0, 0};
  return {book.sentences()[s.first].begin, book.sentences()[s.last].end};
}

}  // namespace

std::vector<std::string> DifferenceRecord::sentence_tokens_a() const { return split_spaces(sentence_a); }
std::vector<std::string> DifferenceRecord::sentence_tokens_b() const { return split_spaces(sentence_b); }

std::vector<DifferenceRecord> extract_differences(const PairAlignment& alignment, const Book& a, const Book& b) {
  struct Gap {
    TokenRange ga, gb;
    SentenceSpan sa, sb;
    std::size_t before_a;  // index of preceding matched token in A, or npos
    std::size_t after_a;   // index of following matched token in A, or npos
  };
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<Gap> gaps;
  std::size_t next_a = 0, next_b = 0;
  std::size_t prev_a = npos, prev_b = npos;
  const auto& ms = alignment.matches;
  for (std::size_t k = 0; k <= ms.size(); ++k) {
    const std::size_t ma = k < ms.size() ? ms[k].a : a.token_count();
    const std::size_t mb = k < ms.size() ? ms[k].b : b.token_count();
    if (ma > next_a || mb > next_b) {
      Gap g;
      g.ga = {next_a, ma};
      g.gb = {next_b, mb};
      g.sa = sentences_for(a, g.ga, prev_a, prev_a != npos);
      g.sb = sentences_for(b, g.gb, prev_b, prev_b != npos);
      g.before_a = prev_a;
      g.after_a = k < ms.size() ? ms[k].a : npos;
      if (!gaps.empty() && (spans_overlap(gaps.back().sa, g.sa) || spans_overlap(gaps.back().sb, g.sb))) {
        auto& p = gaps.back();
        p.ga.end = g.ga.end;
        p.gb.end = g.gb.end;
        if (p.sa.valid && g.sa.valid) p.sa.last = std::max(p.sa.last, g.sa.last);
        if (p.sb.valid && g.sb.valid) p.sb.last = std::max(p.sb.last, g.sb.last);
        p.after_a = g.after_a;
      } else {
        gaps.push_back(g);
      }
    }
    if (k < ms.size()) {
      prev_a = ms[k].a;
      prev_b = ms[k].b;
      next_a = ms[k].a + 1;
      next_b = ms[k].b + 1;
    }
  }

  std::vector<DifferenceRecord> out;
  out.reserve(gaps.size());
  for (const auto& g : gaps) {
    DifferenceRecord r;
    r.book_a_id = a.id();
    r.book_b_id = b.id();
    r.index = out.size();
    r.gap_a = g.ga;
    r.gap_b = g.gb;
    r.sentence_a_range = to_tokens(a, g.sa);
    r.sentence_b_range = to_tokens(b, g.sb);
    r.sentence_a = a.join(r.sentence_a_range);
    r.sentence_b = b.join(r.sentence_b_range);
    r.gap_a_tokens = a.token_texts(r.gap_a);
    r.gap_b_tokens = b.token_texts(r.gap_b);
    if (g.before_a != npos) r.context_before = a.tokens()[g.before_a].text;
    if (g.after_a != npos) r.context_after = a.tokens()[g.after_a].text;
    r.low_confidence = alignment.low_confidence;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace scanalign
