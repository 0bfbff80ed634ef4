#include "doctest.h"
#include "scanalign/analysis.hpp"
#include "scanalign/errors.hpp"
#include "test_util.hpp"

using namespace scanalign;
using scanalign::testing::make_book;
using scanalign::testing::slurp;
using Strings = std::vector<std::string>;

namespace {

// Flags any sentence containing the token "bad".
std::vector<DetectionSpan> flag_bad(std::span<const std::string> tokens) {
  std::vector<DetectionSpan> out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i] == "bad") out.push_back({{i, i + 1}, 0.99});
    else if (tokens[i] == "meh") out.push_back({{i, i + 1}, 0.5});
  return out;
}

std::string sentences(std::size_t n, std::size_t bad_every) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (bad_every && i % bad_every == 0 ? "A bad one. " : "A good one. ");
  return s;
}

BookMeta meta(const std::string& id, const std::string& lib, std::optional<int> year, Digitizer d = Digitizer::google) {
  BookMeta m;
  m.book_id = id;
  m.title = "T";
  m.source_library = lib;
  m.pub_year = year;
  m.digitizer = d;
  return m;
}

ScoredSentencePair sub_pair(const Strings& loser, const Strings& winner) {
  ScoredSentencePair p;
  p.record.gap_a_tokens = loser;
  p.record.gap_b_tokens = winner;
  p.winner = Side::b;
  return p;
}

}  // namespace

TEST_CASE("quality of a clean book is one") {
  const Book b = make_book("c", sentences(20, 0));
  const auto q = book_quality(b, flag_bad);
  CHECK(q.sentence_count == 20);
  CHECK(q.error_sentence_count == 0);
  CHECK(q.quality == 1.0);
}

TEST_CASE("quality is the share of sentences without a flagged span") {
  // Sentences 0, 9, 18 are flagged out of 25: 22/25 = 0.88.
  const Book b = make_book("d", sentences(25, 9));
  const auto q = book_quality(b, flag_bad);
  CHECK(q.error_sentence_count == 3);
  CHECK(q.quality == doctest::Approx(0.88));
}

TEST_CASE("spans below the threshold do not count") {
  const Book b = make_book("m", "A meh one. A good one.");
  CHECK(book_quality(b, flag_bad, 0.95).quality == 1.0);
  CHECK(book_quality(b, flag_bad, 0.5).quality == 0.5);
}

TEST_CASE("a book without sentences has undefined quality") {
  CHECK_THROWS_AS(book_quality(make_book("e", ""), flag_bad), DataError);
  CHECK_THROWS_AS(book_quality_from_pairs(make_book("e", "   "), std::vector<ScoredSentencePair>{}), DataError);
}

TEST_CASE("quality from pairs counts lost sentences") {
  const Book a = make_book("a", "The lamp was lit. The boat came in. The bells rang.");
  const Book b = make_book("b", "The larnp was lit. The boat came in. The bclls rang.");
  const auto records = extract_differences(align_pair(a, b), a, b);
  REQUIRE(records.size() == 2);
  std::vector<ScoredSentencePair> pairs;
  for (const auto& r : records) {
    ScoredSentencePair p;
    p.record = r;
    p.winner = Side::a;
    p.p = 0.9;
    p.q = 0.1;
    pairs.push_back(p);
  }
  const auto qb = book_quality_from_pairs(b, pairs);
  CHECK(qb.error_sentence_count == 2);
  CHECK(qb.quality == doctest::Approx(1.0 / 3.0));
  CHECK(book_quality_from_pairs(a, pairs).quality == 1.0);
  pairs[0].tie = true;
  CHECK(book_quality_from_pairs(b, pairs).error_sentence_count == 1);
}

TEST_CASE("aggregation by library and year") {
  const std::vector<BookMeta> metas = {meta("a", "nyp", 1850), meta("b", "nyp", 1870, Digitizer::internet_archive),
                                       meta("c", "nyp", std::nullopt), meta("d", "hvd", 1850),
                                       meta("orphan-meta", "bl", 1900)};
  const std::vector<QualityReport> reports = {{"a", 0.9, 10, 1}, {"b", 0.7, 10, 3}, {"c", 0.5, 10, 5},
                                              {"d", 0.6, 10, 4}, {"unknown", 0.0, 1, 1}};
  const auto t = aggregate_quality(reports, metas);
  REQUIRE(t.by_library.size() == 2);
  CHECK(t.by_library[0].library == "hvd");
  CHECK(t.by_library[0].count == 1);
  CHECK(t.by_library[0].mean_quality == doctest::Approx(0.6));
  CHECK(t.by_library[1].library == "nyp");
  CHECK(t.by_library[1].count == 3);
  CHECK(t.by_library[1].mean_quality == doctest::Approx(0.7));
  CHECK(t.by_library[1].mean_year == std::optional<double>(1860.0));
  CHECK(t.by_library[1].digitizer == "google");
  REQUIRE(t.by_year.size() == 2);
  CHECK(t.by_year[0].year == 1850);
  CHECK(t.by_year[0].count == 2);
  CHECK(t.by_year[0].mean_quality == doctest::Approx(0.75));
  CHECK(t.by_year[1].year == 1870);
}

TEST_CASE("quality tables are written as csv") {
  scanalign::testing::TempDir dir;
  const std::vector<LibraryQuality> libs = {{"nyp", "google", 3, 1860.0, 0.7}, {"x,y", "ia", 1, std::nullopt, 0.5}};
  write_library_csv(dir / "lib.csv", libs);
  CHECK(slurp(dir / "lib.csv") ==
        "library,digitizer,count,mean_year,mean_quality\nnyp,google,3,1860.000000,0.700000\n\"x,y\",ia,1,,0.500000\n");
  write_year_csv(dir / "year.csv", std::vector<YearQuality>{{1850, 0.75, 2}});
  CHECK(slurp(dir / "year.csv") == "year,mean_quality,count\n1850,0.750000,2\n");
}

TEST_CASE("substitution source folding") {
  CHECK(substitution_source("j") == std::optional<std::string>("j"));
  CHECK(substitution_source("J") == std::optional<std::string>("j"));
  CHECK(substitution_source("\xC3\x89") == std::optional<std::string>("\xC3\xA9"));
  CHECK_FALSE(substitution_source(";"));
  CHECK_FALSE(substitution_source("ab"));
  CHECK_FALSE(substitution_source(""));
}

TEST_CASE("a single-letter losing token maps to the whole winning gap") {
  const std::vector<ScoredSentencePair> pairs = {sub_pair({"l"}, {"!"}), sub_pair({"L"}, {"!"}), sub_pair({"j"}, {";"})};
  const auto t = mine_substitutions(pairs);
  CHECK(t.count("l", "!") == 2);
  CHECK(t.count("j", ";") == 1);
  CHECK(t.total() == 3);
  const auto row = t.row("l");
  REQUIRE(row.size() == 1);
  CHECK(row[0].norm_freq == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("letters inside words come from edit blocks") {
  std::vector<ScoredSentencePair> pairs;
  for (int i = 0; i < 8; ++i) pairs.push_back(sub_pair({"jn"}, {"in"}));
  for (int i = 0; i < 2; ++i) pairs.push_back(sub_pair({"ajd"}, {"a;d"}));
  pairs.push_back(sub_pair({"tlie"}, {"the"}));
  auto tied = sub_pair({"hjs"}, {"his"});
  tied.tie = true;
  pairs.push_back(tied);
  const auto t = mine_substitutions(pairs);
  const auto row = t.row("j");
  REQUIRE(row.size() == 2);
  CHECK(row[0].replacement == "i");
  CHECK(row[0].count == 8);
  CHECK(row[1].replacement == ";");
  CHECK(row[1].count == 2);
  // "li" -> "h" is a two-character observed block and is not a letter source.
  CHECK(t.total() == 10);
  CHECK(t.sources() == Strings{"j"});
}

TEST_CASE("substitution counts add up") {
  SubstitutionTable t;
  t.add("a", "o", 3);
  t.add("a", "e", 3);
  t.add("c", "e", 4);
  t.add("c", "x", 0);
  std::uint64_t sum = 0;
  double freq = 0.0;
  for (const auto& s : t.sources())
    for (const auto& r : t.row(s)) {
      sum += r.count;
      freq += r.norm_freq;
    }
  CHECK(sum == t.total());
  CHECK(freq == doctest::Approx(1.0));
  // Equal counts keep replacement order.
  CHECK(t.row("a")[0].replacement == "e");
  scanalign::testing::TempDir dir;
  t.save_tsv(dir / "s.tsv");
  CHECK(slurp(dir / "s.tsv") ==
        "source_char\treplacement\tcount\tnorm_freq\n"
        "a\te\t3\t0.30000000\na\to\t3\t0.30000000\nc\te\t4\t0.40000000\n");
}
