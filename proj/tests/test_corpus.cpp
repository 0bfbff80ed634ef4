#include <algorithm>
#include <cctype>

#include "doctest.h"
#include "scanalign/corpus.hpp"
#include "scanalign/errors.hpp"
#include "scanalign/rng.hpp"
#include "scanalign/text.hpp"
#include "test_util.hpp"

using namespace scanalign;
using scanalign::testing::TempDir;
using scanalign::testing::spit;
using scanalign::testing::texts;

using Strings = std::vector<std::string>;

TEST_CASE("tokenize keeps contractions whole") {
  CHECK(texts(tokenize("I know it isn't my business")) == Strings{"I", "know", "it", "isn't", "my", "business"});
}

TEST_CASE("tokenize empty input") { CHECK(tokenize("").empty()); }

TEST_CASE("tokenize splits off punctuation") {
  CHECK(texts(tokenize("He returned hone.")) == Strings{"He", "returned", "hone", "."});
}

TEST_CASE("tokenize digit runs and mixed characters") {
  CHECK(texts(tokenize("built in 1791, by 2 men--twice")) ==
        Strings{"built", "in", "1791", ",", "by", "2", "men", "-", "-", "twice"});
  CHECK(texts(tokenize("abc123")) == Strings{"abc", "123"});
  CHECK(texts(tokenize("o\xE2\x80\x99" "clock")) == Strings{"o\xE2\x80\x99" "clock"});
  CHECK(texts(tokenize("'quoted' end'")) == Strings{"'", "quoted", "'", "end", "'"});
  CHECK(texts(tokenize("se\xC3\xB1or")) == Strings{"se\xC3\xB1or"});
}

TEST_CASE("token spans index the raw text and flag words") {
  const std::string raw = "  Tis  the 3rd, se\xC3\xB1or!\n";
  const auto toks = tokenize(raw);
  REQUIRE(!toks.empty());
  for (const auto& t : toks) {
    CHECK(t.char_start < t.char_end);
    CHECK(t.char_end <= raw.size());
    CHECK(raw.substr(t.char_start, t.char_end - t.char_start) == t.text);
  }
  CHECK(toks[0].is_word);
  CHECK_FALSE(toks[2].is_word);  // "3"
  CHECK(toks[3].is_word);        // "rd"
}

TEST_CASE("tokenization round-trip loses only whitespace") {
  const Strings pieces = {"a", "B", "z", "'", "\xE2\x80\x99", "7", ".", ",", "!", "?", " ", " ", "\n", "\t",
                          "\"", "\xC3\xA9", "-", ";", "(", "\xCE\xBB"};
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const auto len = rng.below(60);
    for (std::uint64_t i = 0; i < len; ++i) s += pieces[rng.below(pieces.size())];
    std::string joined;
    for (const auto& t : tokenize(s)) joined += t.text;
    std::string stripped;
    for (char c : s)
      if (c != ' ' && c != '\n' && c != '\t') stripped += c;
    REQUIRE(joined == stripped);
  }
}

std::vector<Token> words(const Strings& ts) {
  std::vector<Token> out;
  for (const auto& t : ts) out.push_back({t, 0, t.size(), std::isalpha(static_cast<unsigned char>(t[0])) != 0});
  return out;
}

TEST_CASE("segment_sentences follows terminal punctuation and capitals") {
  CHECK(segment_sentences(words({"What", "did", "he", "clo", "?"})) == std::vector<TokenRange>{{0, 5}});
  CHECK(segment_sentences(std::vector<Token>{}).empty());
  // "." before lowercase "c" is not a boundary under the rule, so only the
  // first period splits.
  CHECK(segment_sentences(words({"a", ".", "B", ".", "c"})) == std::vector<TokenRange>{{0, 2}, {2, 5}});
  CHECK(segment_sentences(words({"Go", "!", "\"", "Now", "?", "Yes"})) ==
        std::vector<TokenRange>{{0, 2}, {2, 5}, {5, 6}});
  CHECK(segment_sentences(words({"End", "."})) == std::vector<TokenRange>{{0, 2}});
}

TEST_CASE("sentences partition every token stream") {
  Rng rng(5);
  const Strings vocab = {"a", "The", "b", ".", "!", "?", "C", ",", "\"", "d"};
  for (int trial = 0; trial < 300; ++trial) {
    Strings ts;
    for (std::uint64_t i = 0, n = rng.below(40); i < n; ++i) ts.push_back(vocab[rng.below(vocab.size())]);
    const auto ranges = segment_sentences(words(ts));
    std::size_t next = 0, total = 0;
    for (const auto& r : ranges) {
      REQUIRE(r.begin == next);
      REQUIRE(!r.empty());
      next = r.end;
      total += r.size();
    }
    REQUIRE(total == ts.size());
  }
}

TEST_CASE("Book normalises to NFC and maps tokens to sentences") {
  BookMeta m;
  m.book_id = "x";
  m.title = "T";
  const Book b(m, "Cafe\xCC\x81 open. Then closed.");
  CHECK(b.raw_text() == "Caf\xC3\xA9 open. Then closed.");
  CHECK(b.token_count() == 6);
  CHECK(b.sentences().size() == 2);
  CHECK(b.sentence_of(0) == 0);
  CHECK(b.sentence_of(3) == 1);
  CHECK(b.join({0, 3}) == "Caf\xC3\xA9 open .");
}

TEST_CASE("digitizer codes") {
  CHECK(parse_digitizer("google") == Digitizer::google);
  CHECK(parse_digitizer("ia") == Digitizer::internet_archive);
  CHECK(parse_digitizer("local") == Digitizer::local);
  CHECK(parse_digitizer("") == Digitizer::unknown);
  CHECK_FALSE(parse_digitizer("kodak"));
  CHECK(digitizer_code(Digitizer::internet_archive) == "ia");
}

TEST_CASE("fixture corpus token counts match independent tokenization") {
  const std::filesystem::path dir = SCANALIGN_FIXTURES "/corpus";
  const auto corpus = load_corpus(dir, dir / "metadata.csv");
  REQUIRE(corpus.books.size() == 6);
  CHECK(corpus.skipped.empty());
  // Counted with a separate regex tokenizer over the fixture files.
  const std::vector<std::pair<std::string, std::size_t>> expected = {
      {"b001", 135}, {"b002", 136}, {"b003", 135}, {"b004", 96}, {"b005", 201}, {"b006", 59}};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(corpus.books[i].id() == expected[i].first);
    CHECK(corpus.books[i].token_count() == expected[i].second);
  }
  const auto& b006 = corpus.books[5].meta();
  CHECK(b006.author.empty());
  CHECK_FALSE(b006.pub_year);
  CHECK(b006.source_library == std::optional<std::string>("hvd"));
  CHECK(b006.digitizer == Digitizer::unknown);
  CHECK(corpus.books[0].meta().pub_year == 1884);
}

struct MiniCorpus {
  TempDir dir{"corpus"};
  void write(const std::string& meta_rows, const std::vector<std::pair<std::string, std::string>>& files) {
    spit(dir / "metadata.csv", "book_id,title,author,pub_year,source_library,digitizer\n" + meta_rows);
    for (const auto& [id, text] : files) spit(dir / (id + ".txt"), text);
  }
  LoadedCorpus load() { return load_corpus(dir.path(), dir / "metadata.csv"); }
};

TEST_CASE("three files and three rows load three books") {
  MiniCorpus c;
  c.write("c,C,x,,,\na,A,x,1900,nyp,google\nb,B,x,,,ia\n", {{"a", "One."}, {"b", "Two."}, {"c", "Three."}});
  const auto loaded = c.load();
  REQUIRE(loaded.books.size() == 3);
  CHECK(loaded.books[0].id() == "a");
  CHECK(loaded.books[2].id() == "c");
}

TEST_CASE("a row without a text file is skipped, not fatal") {
  MiniCorpus c;
  c.write("a,A,x,,,\nghost,G,x,,,\n", {{"a", "Here."}});
  const auto loaded = c.load();
  CHECK(loaded.books.size() == 1);
  REQUIRE(loaded.skipped.size() == 1);
  CHECK(loaded.skipped[0].book_id == "ghost");
}

TEST_CASE("malformed metadata is fatal and names the line") {
  MiniCorpus c;
  c.write("a,A,x,,,\nb,B,x,,\n", {{"a", "x"}, {"b", "y"}});
  try {
    c.load();
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  MiniCorpus year;
  year.write("a,A,x,999,,\n", {{"a", "x"}});
  CHECK_THROWS_AS(year.load(), DataError);
  MiniCorpus dup;
  dup.write("a,A,x,,,\na,A,x,,,\n", {{"a", "x"}});
  CHECK_THROWS_AS(dup.load(), DataError);
  MiniCorpus notitle;
  notitle.write("a,,x,,,\n", {{"a", "x"}});
  CHECK_THROWS_AS(notitle.load(), DataError);
  MiniCorpus digit;
  digit.write("a,A,x,,,kodak\n", {{"a", "x"}});
  CHECK_THROWS_AS(digit.load(), DataError);
}

TEST_CASE("quoted metadata fields") {
  MiniCorpus c;
  c.write("a,\"Tales, Old and \"\"New\"\"\",\"Marsh, Ada\",1850,,local\n", {{"a", "Text."}});
  const auto loaded = c.load();
  REQUIRE(loaded.books.size() == 1);
  CHECK(loaded.books[0].meta().title == "Tales, Old and \"New\"");
  CHECK(loaded.books[0].meta().author == "Marsh, Ada");
}

TEST_CASE("invalid UTF-8 is fatal and names the file") {
  MiniCorpus c;
  c.write("bad,B,x,,,\n", {{"bad", "ok \xC3\x28 not"}});
  try {
    c.load();
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("bad.txt") != std::string::npos);
  }
}

TEST_CASE("utf8 validation and case folding") {
  CHECK(text::is_valid_utf8("plain"));
  CHECK(text::find_invalid_utf8("ab\xFF") == std::optional<std::size_t>(2));
  CHECK(text::fold_case("STRASSE") == "strasse");
  CHECK(text::fold_case("Stra\xC3\x9F" "e") == "strasse");
  CHECK(text::codepoint_length("se\xC3\xB1or") == 5);
}
