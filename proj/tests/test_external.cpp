#include <thread>

#include "doctest.h"
#include "scanalign/errors.hpp"
#include "scanalign/external.hpp"
#include "scanalign/rng.hpp"
#include "scanalign/scoring.hpp"

using namespace scanalign;
using namespace std::chrono_literals;
using Strings = std::vector<std::string>;

namespace {

std::string mock(const std::string& mode) { return std::string(SCANALIGN_MOCK_SIDECAR) + " " + mode; }

// Fixed score, so a switch to it is visible.
class ConstantScorer final : public SentenceScorer {
 public:
  std::string id() const override { return "const"; }
  std::vector<SentenceScore> score(std::span<const std::vector<std::string>> sentences) const override {
    return std::vector<SentenceScore>(sentences.size(), SentenceScore{-42.0, 1, id()});
  }
};

}  // namespace

TEST_CASE("handshake reports the scorer id") {
  ExternalClient client(mock("normal"));
  CHECK(client.scorer_id() == "mock-normal");
}

TEST_CASE("score replies map to negated nll in input order") {
  ExternalClient client(mock("normal"));
  const Strings texts = {"plain words", "one x here", "xx and x"};
  const auto scores = external_score(texts, client);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0].normalized_ll == -1.0);
  CHECK(scores[1].normalized_ll == -2.0);
  CHECK(scores[2].normalized_ll == -4.0);
  CHECK(scores[2].token_count == 3);
  CHECK(scores[0].scorer_id == "mock-normal");
  CHECK(external_score(Strings{}, client).empty());
}

TEST_CASE("replies out of order are matched by id") {
  ExternalClient client(mock("reverse"));
  Strings texts;
  for (int i = 0; i < 100; ++i) texts.push_back(std::string(static_cast<std::size_t>(i % 7), 'x'));
  const auto scores = external_score(texts, client);
  REQUIRE(scores.size() == texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) CHECK(scores[i].normalized_ll == -(1.0 + static_cast<double>(i % 7)));
}

TEST_CASE("a thousand random requests come back matched") {
  ExternalClient client(mock("reverse"));
  Rng rng(17);
  Strings texts;
  std::vector<double> expected;
  for (int i = 0; i < 1000; ++i) {
    std::string t;
    std::size_t xs = 0;
    for (std::uint64_t k = 0, n = 1 + rng.below(30); k < n; ++k) {
      const bool x = rng.chance(0.2);
      t += x ? 'x' : 'a';
      xs += x;
      if (rng.chance(0.2)) t += ' ';
    }
    texts.push_back(t);
    expected.push_back(-(1.0 + static_cast<double>(xs)));
  }
  const auto scores = external_score(texts, client);
  REQUIRE(scores.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) REQUIRE(scores[i].normalized_ll == expected[i]);
}

TEST_CASE("concurrent callers share one client") {
  auto client = std::make_shared<ExternalClient>(mock("normal"));
  const ExternalScorer scorer(client);
  std::vector<std::thread> threads;
  std::vector<int> ok(4, 0);
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      std::vector<Strings> sentences;
      for (int i = 0; i < 50; ++i) sentences.push_back(Strings(static_cast<std::size_t>(t + 1), "x"));
      const auto scores = scorer.score(sentences);
      bool all = scores.size() == 50;
      for (const auto& s : scores) all &= s.normalized_ll == -(1.0 + t + 1);
      ok[static_cast<std::size_t>(t)] = all;
    });
  for (auto& th : threads) th.join();
  for (int v : ok) CHECK(v == 1);
}

TEST_CASE("detect and correct ops") {
  ExternalClient client(mock("normal"));
  const auto det = client.request("detect", Strings{"the qxick fox"});
  REQUIRE(det.size() == 1);
  REQUIRE(det[0]["spans"].size() == 2);
  CHECK(det[0]["spans"][0]["start_token"] == 1);
  CHECK(det[0]["spans"][0]["conf"] == 0.97);
  const auto cor = client.request("correct", Strings{"the <ocr> qxick </ocr> fox"});
  CHECK(cor[0]["replacement"] == "qick");
  CHECK(cor[0]["score"] == 0.99);
}

TEST_CASE("failure modes raise the matching error") {
  SUBCASE("process dies mid-batch") {
    ExternalClient client(mock("die 2"));
    CHECK(external_score(Strings{"a"}, client).size() == 1);
    CHECK_THROWS_AS(external_score(Strings{"a", "b", "c"}, client), ExternalScorerDied);
  }
  SUBCASE("malformed reply") {
    ExternalClient client(mock("malformed"));
    CHECK_THROWS_AS(external_score(Strings{"a"}, client), ProtocolError);
  }
  SUBCASE("no reply in time") {
    ExternalClient client(mock("hang"), 300ms);
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(external_score(Strings{"a"}, client), ExternalTimeout);
    CHECK(std::chrono::steady_clock::now() - t0 < 5s);
  }
  SUBCASE("error op") {
    ExternalClient client(mock("error"));
    CHECK_THROWS_AS(external_score(Strings{"a"}, client), ProtocolError);
  }
  SUBCASE("wrong protocol version") { CHECK_THROWS_AS(ExternalClient(mock("bad-hello")), ProtocolError); }
  SUBCASE("reply without a score") {
    ExternalClient client(mock("missing"));
    CHECK_THROWS_AS(external_score(Strings{"a"}, client), ProtocolError);
  }
  SUBCASE("reply for an id never sent") {
    ExternalClient client(mock("wrong-id"));
    CHECK_THROWS_AS(external_score(Strings{"a"}, client), ProtocolError);
  }
  SUBCASE("command that does not exist") {
    CHECK_THROWS_AS(ExternalClient("/nonexistent/scanalign-model"), ExternalScorerDied);
  }
}

TEST_CASE("fallback takes over once the process dies and stays") {
  auto client = std::make_shared<ExternalClient>(mock("die 3"));
  const FallbackScorer scorer(std::make_shared<ExternalScorer>(client), std::make_shared<ConstantScorer>());
  CHECK(scorer.id() == "mock-die");
  const std::vector<Strings> two = {{"a"}, {"x"}};
  auto s = scorer.score(two);
  CHECK(s[0].normalized_ll == -1.0);
  CHECK(s[1].normalized_ll == -2.0);
  s = scorer.score(two);
  CHECK(s[0].normalized_ll == -42.0);
  CHECK(s[0].scorer_id == "const");
  CHECK(scorer.score(two)[1].normalized_ll == -42.0);
}

TEST_CASE("fallback does not hide protocol errors") {
  auto client = std::make_shared<ExternalClient>(mock("malformed"));
  const FallbackScorer scorer(std::make_shared<ExternalScorer>(client), std::make_shared<ConstantScorer>());
  CHECK_THROWS_AS(scorer.score(std::vector<Strings>{{"a"}}), ProtocolError);
}
