#pragma once

// Sentence-pair rating: which of two variant sentences is more likely the
// correct reading.

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scanalign/align.hpp"
#include "scanalign/external.hpp"
#include "scanalign/lm.hpp"

namespace scanalign {

struct SentenceScore {
  double normalized_ll = 0.0;  // mean per-token natural-log probability, <= 0
  std::size_t token_count = 0;
  std::string scorer_id;
};

class SentenceScorer {
 public:
  virtual ~SentenceScorer() = default;
  virtual std::string id() const = 0;
  virtual std::vector<SentenceScore> score(std::span<const std::vector<std::string>> sentences) const = 0;

  SentenceScore score_one(const std::vector<std::string>& sentence) const {
    return score(std::span<const std::vector<std::string>>(&sentence, 1)).front();
  }
};

/// Log of the in-lexicon ratio among word tokens.
class DictionaryScorer final : public SentenceScorer {
 public:
  explicit DictionaryScorer(std::shared_ptr<const Lexicon> lexicon, double log_floor = -20.0)
      : lexicon_(std::move(lexicon)), log_floor_(log_floor) {}
  std::string id() const override { return "dict"; }
  std::vector<SentenceScore> score(std::span<const std::vector<std::string>> sentences) const override;

 private:
  std::shared_ptr<const Lexicon> lexicon_;
  double log_floor_;
};

SentenceScore dict_score(std::span<const std::string> sentence, const Lexicon& lexicon, double log_floor = -20.0);

class NgramScorer final : public SentenceScorer {
 public:
  explicit NgramScorer(std::shared_ptr<const NgramLM> model) : model_(std::move(model)) {}
  std::string id() const override { return "ngram" + std::to_string(model_->order()); }
  std::vector<SentenceScore> score(std::span<const std::vector<std::string>> sentences) const override;
  const NgramLM& model() const { return *model_; }

 private:
  std::shared_ptr<const NgramLM> model_;
};

SentenceScore ngram_score(std::span<const std::string> sentence, const NgramLM& model);

/// Scores through an external process ("score" op).
class ExternalScorer final : public SentenceScorer {
 public:
  explicit ExternalScorer(std::shared_ptr<ExternalClient> client) : client_(std::move(client)) {}
  std::string id() const override { return client_->scorer_id(); }
  std::vector<SentenceScore> score(std::span<const std::vector<std::string>> sentences) const override;

 private:
  std::shared_ptr<ExternalClient> client_;
};

std::vector<SentenceScore> external_score(std::span<const std::string> texts, ExternalClient& client);

/// Uses `primary`; if it throws ExternalScorerDied, switches to `fallback`
/// for this and every later call.
class FallbackScorer final : public SentenceScorer {
 public:
  FallbackScorer(std::shared_ptr<const SentenceScorer> primary, std::shared_ptr<const SentenceScorer> fallback)
      : primary_(std::move(primary)), fallback_(std::move(fallback)) {}
  std::string id() const override { return primary_->id(); }
  std::vector<SentenceScore> score(std::span<const std::vector<std::string>> sentences) const override;

 private:
  std::shared_ptr<const SentenceScorer> primary_;
  std::shared_ptr<const SentenceScorer> fallback_;
  mutable std::atomic<bool> failed_{false};
};

enum class Side { a, b };

struct ScoredSentencePair {
  DifferenceRecord record;
  SentenceScore score_a;
  SentenceScore score_b;
  double p = 0.5;  // confidence that A is correct
  double q = 0.5;
  Side winner = Side::a;
  bool tie = false;  // equal scores; winner drawn from the seeded RNG

  const std::string& winner_id() const { return winner == Side::a ? record.book_a_id : record.book_b_id; }
  const std::string& loser_id() const { return winner == Side::a ? record.book_b_id : record.book_a_id; }
};

/// Numerically stable two-way softmax: exp(a) / (exp(a) + exp(b)).
double softmax2(double a, double b);

/// Deterministic coin for an exact tie, keyed on seed and record identity.
Side tie_break(std::uint64_t seed, const DifferenceRecord& record);

ScoredSentencePair rate_pair(const DifferenceRecord& record, const SentenceScorer& scorer, std::uint64_t seed = 0);

/// Batched rate_pair: one scorer call for all sentences.
std::vector<ScoredSentencePair> rate_pairs(std::span<const DifferenceRecord> records, const SentenceScorer& scorer,
                                           std::uint64_t seed = 0);

ScoredSentencePair make_scored_pair(const DifferenceRecord& record, SentenceScore sa, SentenceScore sb,
                                    std::uint64_t seed);

}  // namespace scanalign
