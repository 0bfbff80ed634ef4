#include "scanalign/canonical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scanalign/errors.hpp"
#include "scanalign/parallel.hpp"

namespace scanalign {

namespace {

std::size_t wins(std::span<const ConfidencePair> pairs, BookSide side) {
  std::size_t n = 0;
  for (const auto& c : pairs) n += side == BookSide::first ? (c.p > c.q) : (c.q > c.p);
  return n;
}

}  // namespace

double majority_prior(std::span<const ConfidencePair> pairs, BookSide side) {
  if (pairs.empty()) throw EmptyComparison("no sentence pairs to compare");
  return static_cast<double>(wins(pairs, side)) / static_cast<double>(pairs.size());
}

double log_posterior(std::span<const ConfidencePair> pairs, BookSide side) {
  double prior = majority_prior(pairs, side);
  if (prior == 0.0) prior = 1.0 / static_cast<double>(pairs.size() + 1);
  double sum = std::log(prior);
  for (const auto& c : pairs) sum += std::log(side == BookSide::first ? c.p : c.q);
  return sum;
}

BookComparison compare_scored(const std::string& book1_id, const std::string& book2_id,
                              std::span<const ScoredSentencePair> rated) {
  BookComparison out;
  out.book1_id = book1_id;
  out.book2_id = book2_id;
  out.n = rated.size();
  out.pairs.reserve(rated.size());
  for (const auto& r : rated) {
    out.pairs.push_back({r.p, r.q});
    out.low_confidence = out.low_confidence || r.record.low_confidence;
  }
  const std::string& smaller = std::min(book1_id, book2_id);
  if (out.pairs.empty()) {
    out.no_evidence = true;
    out.winner = smaller;
    return out;
  }
  out.majority_1 = wins(out.pairs, BookSide::first);
  out.majority_2 = wins(out.pairs, BookSide::second);
  out.log_posterior_1 = log_posterior(out.pairs, BookSide::first);
  out.log_posterior_2 = log_posterior(out.pairs, BookSide::second);
  if (out.log_posterior_1 > out.log_posterior_2) out.winner = book1_id;
  else if (out.log_posterior_2 > out.log_posterior_1) out.winner = book2_id;
  else out.winner = smaller;
  return out;
}

BookComparison compare_books(const Book& a, const Book& b, const SentenceScorer& scorer,
                             const CompareOptions& options) {
  const PairAlignment alignment = align_pair(a, b, options.align);
  const auto records = extract_differences(alignment, a, b);
  const auto rated = rate_pairs(records, scorer, options.seed);
  BookComparison out = compare_scored(a.id(), b.id(), rated);
  out.low_confidence = out.low_confidence || alignment.low_confidence;
  return out;
}

CanonicalResult tournament(const DuplicateSet& set, const BookComparator& compare) {
  if (set.member_book_ids.empty()) throw std::invalid_argument("tournament over an empty set " + set.set_id);
  CanonicalResult out;
  out.set_id = set.set_id;
  std::vector<std::string> alive = set.member_book_ids;
  std::sort(alive.begin(), alive.end());

  while (alive.size() > 1) {
    const std::size_t matches = alive.size() / 2;
    std::vector<BracketMatch> round(matches);
    parallel_for(matches, [&](std::size_t k) {
      BracketMatch& m = round[k];
      m.a = alive[2 * k];
      m.b = alive[2 * k + 1];
      try {
        const BookComparison c = compare(m.a, m.b);
        m.winner = c.winner;
        m.lp_a = c.log_posterior_1;
        m.lp_b = c.log_posterior_2;
        if (c.no_evidence) {
          m.flagged = true;
          m.note = "no_evidence";
        }
      } catch (const std::exception& e) {
        m.winner = std::min(m.a, m.b);
        m.flagged = true;
        m.note = e.what();
      }
    });
    std::vector<std::string> next;
    next.reserve(matches + 1);
    for (const auto& m : round) next.push_back(m.winner);
    if (alive.size() % 2 == 1) {
      BracketMatch bye;
      bye.a = bye.winner = alive.back();
      bye.bye = true;
      round.push_back(std::move(bye));
      next.push_back(alive.back());
    }
    out.bracket.push_back(std::move(round));
    alive = std::move(next);
  }
  out.canonical_book_id = alive.front();
  return out;
}

CanonicalResult tournament(const DuplicateSet& set, const BookIndex& books, const SentenceScorer& scorer,
                           const CompareOptions& options) {
  auto find = [&](const std::string& id) -> const Book& {
    auto it = books.find(id);
    if (it == books.end()) throw DataError("duplicate set " + set.set_id + " names unknown book " + id);
    return *it->second;
  };
  for (const auto& id : set.member_book_ids) find(id);
  return tournament(set, [&](const std::string& a, const std::string& b) {
    return compare_books(find(a), find(b), scorer, options);
  });
}

GoldenResult golden_eval(std::span<const GoldenPair> pairs, const BookIndex& books, const SentenceScorer& scorer,
                         const CompareOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("golden evaluation needs at least one pair");
  auto find = [&](const std::string& id) -> const Book& {
    auto it = books.find(id);
    if (it == books.end()) throw DataError("golden pair names unknown book " + id);
    return *it->second;
  };
  std::vector<char> truth_won(pairs.size(), 0), failed(pairs.size(), 0);
  for (const auto& p : pairs) {
    find(p.truth_id);
    find(p.scanned_id);
  }
  parallel_for(pairs.size(), [&](std::size_t i) {
    try {
      const auto c = compare_books(find(pairs[i].truth_id), find(pairs[i].scanned_id), scorer, options);
      truth_won[i] = c.winner == pairs[i].truth_id;
    } catch (const AlignmentImpossible&) {
      failed[i] = 1;
    }
  });
  GoldenResult out;
  out.total = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.preferred_truth += truth_won[i];
    out.failed += failed[i];
  }
  return out;
}

}  // namespace scanalign
