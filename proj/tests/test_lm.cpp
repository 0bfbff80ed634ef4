#include <cmath>
#include <sstream>

#include "doctest.h"
#include "scanalign/lm.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace scanalign;
using Strings = std::vector<std::string>;
using Id = NgramLM::Id;

namespace {

std::vector<Strings> synthetic_sentences(std::uint64_t seed, std::size_t n) {
  const synth::Language lang(seed);
  Rng rng(seed + 1);
  std::vector<Strings> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(lang.sentence(rng));
  return out;
}

// Every predictable id: words from 3 up, plus <unk> and </s>.
std::vector<Id> predictable(const NgramLM& lm) {
  std::vector<Id> out{NgramLM::kUnk, NgramLM::kEos};
  for (Id id = 3; id < lm.vocab_size() + 1; ++id) out.push_back(id);
  return out;
}

double perplexity(const NgramLM& lm, const std::vector<Strings>& held_out) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : held_out)
    for (double lp : lm.token_log_probs(s)) {
      sum += lp;
      ++n;
    }
  return std::exp(-sum / static_cast<double>(n));
}

}  // namespace

TEST_CASE("lexicon is case-insensitive and skips comments") {
  scanalign::testing::TempDir dir;
  scanalign::testing::spit(dir / "lex.txt", "# words\nThe\n\ncat\n  dog  \n");
  const auto lex = Lexicon::load(dir / "lex.txt");
  CHECK(lex.size() == 3);
  CHECK(lex.contains("the"));
  CHECK(lex.contains("THE"));
  CHECK(lex.contains("dog"));
  CHECK_FALSE(lex.contains("# words"));
}

TEST_CASE("word tokens start with a letter") {
  CHECK(is_word_token("isn't"));
  CHECK(is_word_token("se\xC3\xB1or"));
  CHECK_FALSE(is_word_token("1791"));
  CHECK_FALSE(is_word_token(","));
  CHECK_FALSE(is_word_token(""));
}

TEST_CASE("single-sentence bigram closed form") {
  NgramConfig cfg;
  cfg.order = 2;
  cfg.alpha = 0.1;
  cfg.min_count = 1;
  const std::vector<Strings> corpus = {{"a", "b"}};
  const auto lm = NgramLM::train(corpus, cfg);
  // Predictable types: a, b, <unk>, </s>, so V = 4. Unigram events a, b,
  // </s>; P(b) = (1 + α) / (3 + αV). Context "a" has one continuation:
  // P(b|a) = (1 + αV·P(b)) / (1 + αV).
  const double alpha = 0.1, V = 4.0;
  const double pb = (1.0 + alpha) / (3.0 + alpha * V);
  const double expected = (1.0 + alpha * V * pb) / (1.0 + alpha * V);
  const Id a = lm.lookup("a");
  CHECK(lm.vocab_size() == 4);
  CHECK(std::exp(lm.log_prob(std::span<const Id>(&a, 1), lm.lookup("b"))) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected > 0.8);
}

TEST_CASE("conditional distributions sum to one") {
  const auto corpus = synthetic_sentences(3, 400);
  for (const auto smoothing : {Smoothing::add_alpha_backoff, Smoothing::kneser_ney}) {
    for (int order : {1, 2, 3, 4}) {
      NgramConfig cfg;
      cfg.order = order;
      cfg.smoothing = smoothing;
      const auto lm = NgramLM::train(corpus, cfg);
      const auto ids = predictable(lm);
      Rng rng(order);
      for (int trial = 0; trial < 8; ++trial) {
        std::vector<Id> ctx;
        // Half the contexts come from training text so seen histories are covered.
        const auto& s = corpus[rng.below(corpus.size())];
        for (int k = 0; k + 1 < order; ++k)
          ctx.push_back(trial % 2 == 0 && static_cast<std::size_t>(k) < s.size() ? lm.lookup(s[k])
                                                                                   : ids[rng.below(ids.size())]);
        double total = 0.0;
        for (Id w : ids) total += std::exp(lm.log_prob(ctx, w));
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("rare words fold into unk and case folds") {
  NgramConfig cfg;
  cfg.min_count = 2;
  const std::vector<Strings> corpus = {{"The", "cat", "sat"}, {"the", "cat", "ran"}};
  const auto lm = NgramLM::train(corpus, cfg);
  CHECK(lm.known("THE"));
  CHECK(lm.known("cat"));
  CHECK_FALSE(lm.known("sat"));
  CHECK(lm.lookup("<unk>") == NgramLM::kUnk);
  CHECK(lm.unigram_count("the") == 2);
  CHECK(lm.unigram_count("zebra") == 0);
}

TEST_CASE("an unknown token shares the unk mass with the other folded types") {
  NgramConfig cfg;
  cfg.order = 1;
  const std::vector<Strings> corpus = {{"the", "cat", "sat"}, {"the", "cat", "ran"}, {"a", "dog"}};
  const auto lm = NgramLM::train(corpus, cfg);
  // sat, ran, a and dog occur once each.
  CHECK(lm.unk_types() == 4);
  const Strings zebra = {"zebra"};
  CHECK(lm.token_log_probs(zebra)[0] == doctest::Approx(lm.log_prob({}, NgramLM::kUnk) - std::log(4.0)));
  const Strings cat = {"cat"};
  CHECK(lm.token_log_probs(cat)[0] == doctest::Approx(lm.log_prob({}, lm.lookup("cat"))));
  std::stringstream ss;
  lm.save(ss);
  CHECK(NgramLM::load(ss).unk_types() == 4);
}

TEST_CASE("empty corpus and bad orders are rejected") {
  CHECK_THROWS_AS(NgramLM::train(std::vector<Strings>{}), std::invalid_argument);
  NgramConfig cfg;
  cfg.order = 6;
  CHECK_THROWS_AS(NgramLM::train(std::vector<Strings>{{"a"}}, cfg), std::invalid_argument);
  cfg.order = 0;
  CHECK_THROWS_AS(NgramLM::train(std::vector<Strings>{{"a"}}, cfg), std::invalid_argument);
}

TEST_CASE("serialisation round-trip gives identical scores") {
  const auto corpus = synthetic_sentences(5, 300);
  for (const auto smoothing : {Smoothing::add_alpha_backoff, Smoothing::kneser_ney}) {
    NgramConfig cfg;
    cfg.smoothing = smoothing;
    const auto lm = NgramLM::train(corpus, cfg);
    std::stringstream buf;
    lm.save(buf);
    const auto back = NgramLM::load(buf);
    for (std::size_t i = 0; i < 50; ++i) CHECK(back.normalized_log_likelihood(corpus[i]) == lm.normalized_log_likelihood(corpus[i]));
    CHECK(back.normalized_log_likelihood(Strings{"never", "seen", "words"}) ==
          lm.normalized_log_likelihood(Strings{"never", "seen", "words"}));
  }
}

TEST_CASE("a trigram model beats a unigram model on held-out text") {
  const auto all = synthetic_sentences(9, 3000);
  const std::vector<Strings> train(all.begin(), all.begin() + 2500), test(all.begin() + 2500, all.end());
  for (const auto smoothing : {Smoothing::add_alpha_backoff, Smoothing::kneser_ney}) {
    NgramConfig c1, c3;
    c1.order = 1;
    c3.order = 3;
    c1.smoothing = c3.smoothing = smoothing;
    CHECK(perplexity(NgramLM::train(train, c3), test) < perplexity(NgramLM::train(train, c1), test));
  }
}

TEST_CASE("normalised likelihood is the mean token log probability") {
  const auto corpus = synthetic_sentences(4, 200);
  const auto lm = NgramLM::train(corpus);
  const auto& s = corpus[7];
  const auto lps = lm.token_log_probs(s);
  double sum = 0.0;
  for (double lp : lps) sum += lp;
  CHECK(lps.size() == s.size());
  CHECK(lm.normalized_log_likelihood(s) == doctest::Approx(sum / static_cast<double>(s.size())));
  CHECK(lm.normalized_log_likelihood(Strings{}) == 0.0);
}

TEST_CASE("an order-1 model scores a single token by its unigram probability") {
  NgramConfig cfg;
  cfg.order = 1;
  cfg.min_count = 1;
  std::vector<Strings> corpus;
  for (int i = 0; i < 99; ++i) corpus.push_back({"x"});
  corpus.push_back({"t"});
  const auto lm = NgramLM::train(corpus, cfg);
  // 200 unigram events (100 words, 100 </s>), V = 4 (x, t, <unk>, </s>).
  const double pt = (1.0 + cfg.alpha) / (200.0 + cfg.alpha * 4.0);
  CHECK(lm.normalized_log_likelihood(Strings{"t"}) == doctest::Approx(std::log(pt)).epsilon(1e-12));
}
