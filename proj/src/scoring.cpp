#include "scanalign/scoring.hpp"

#include <cmath>

#include "scanalign/errors.hpp"
#include "scanalign/rng.hpp"

namespace scanalign {

SentenceScore dict_score(std::span<const std::string> sentence, const Lexicon& lexicon, double log_floor) {
  std::size_t words = 0, known = 0;
  for (const auto& t : sentence) {
    if (!is_word_token(t)) continue;
    ++words;
    if (lexicon.contains(t)) ++known;
  }
  SentenceScore s;
  s.scorer_id = "dict";
  if (words == 0) {
    s.normalized_ll = 0.0;  // no evidence
    s.token_count = std::max<std::size_t>(sentence.size(), 1);
    return s;
  }
  s.token_count = words;
  s.normalized_ll = known == 0 ? log_floor : std::log(static_cast<double>(known) / static_cast<double>(words));
  return s;
}

std::vector<SentenceScore> DictionaryScorer::score(std::span<const std::vector<std::string>> sentences) const {
  std::vector<SentenceScore> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(dict_score(s, *lexicon_, log_floor_));
  return out;
}

SentenceScore ngram_score(std::span<const std::string> sentence, const NgramLM& model) {
  SentenceScore s;
  s.scorer_id = "ngram" + std::to_string(model.order());
  s.token_count = std::max<std::size_t>(sentence.size(), 1);
  s.normalized_ll = model.normalized_log_likelihood(sentence);
  return s;
}

std::vector<SentenceScore> NgramScorer::score(std::span<const std::vector<std::string>> sentences) const {
  std::vector<SentenceScore> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(ngram_score(s, *model_));
  return out;
}

std::vector<SentenceScore> external_score(std::span<const std::string> texts, ExternalClient& client) {
  const auto replies = client.request("score", texts);
  std::vector<SentenceScore> out;
  out.reserve(replies.size());
  for (const auto& r : replies) {
    if (!r.contains("nll_per_token") || !r["nll_per_token"].is_number())
      throw ProtocolError("score response without nll_per_token: " + r.dump());
    SentenceScore s;
    s.scorer_id = client.scorer_id();
    s.normalized_ll = -r["nll_per_token"].get<double>();
    if (!std::isfinite(s.normalized_ll)) throw ProtocolError("non-finite score: " + r.dump());
    s.token_count = r.value("num_tokens", std::size_t{1});
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SentenceScore> ExternalScorer::score(std::span<const std::vector<std::string>> sentences) const {
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(join_tokens(s));
  return external_score(texts, *client_);
}

std::vector<SentenceScore> FallbackScorer::score(std::span<const std::vector<std::string>> sentences) const {
  if (!failed_) {
    try {
      return primary_->score(sentences);
    } catch (const ExternalScorerDied&) {
      failed_ = true;
    }
  }
  return fallback_->score(sentences);
}

double softmax2(double a, double b) {
  if (a >= b) return 1.0 / (1.0 + std::exp(b - a));
  const double e = std::exp(a - b);
  return e / (1.0 + e);
}

Side tie_break(std::uint64_t seed, const DifferenceRecord& record) {
  std::uint64_t h = stable_hash(record.book_a_id, splitmix64(seed));
  h = stable_hash(std::string_view("\x1f", 1), h);
  h = stable_hash(record.book_b_id, h);
  return splitmix64(h ^ record.index) & 1 ? Side::b : Side::a;
}

ScoredSentencePair make_scored_pair(const DifferenceRecord& record, SentenceScore sa, SentenceScore sb,
                                    std::uint64_t seed) {
  ScoredSentencePair out;
  out.record = record;
  out.p = softmax2(sa.normalized_ll, sb.normalized_ll);
  out.q = 1.0 - out.p;
  if (sa.normalized_ll == sb.normalized_ll) {
    out.tie = true;
    out.p = out.q = 0.5;
    out.winner = tie_break(seed, record);
  } else {
    out.winner = sa.normalized_ll > sb.normalized_ll ? Side::a : Side::b;
  }
  out.score_a = std::move(sa);
  out.score_b = std::move(sb);
  return out;
}

ScoredSentencePair rate_pair(const DifferenceRecord& record, const SentenceScorer& scorer, std::uint64_t seed) {
  return rate_pairs(std::span<const DifferenceRecord>(&record, 1), scorer, seed).front();
}

std::vector<ScoredSentencePair> rate_pairs(std::span<const DifferenceRecord> records, const SentenceScorer& scorer,
                                           std::uint64_t seed) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(records.size() * 2);
  for (const auto& r : records) {
    sentences.push_back(r.sentence_tokens_a());
    sentences.push_back(r.sentence_tokens_b());
  }
  auto scores = scorer.score(sentences);
  std::vector<ScoredSentencePair> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    out.push_back(make_scored_pair(records[i], std::move(scores[2 * i]), std::move(scores[2 * i + 1]), seed));
  return out;
}

}  // namespace scanalign
