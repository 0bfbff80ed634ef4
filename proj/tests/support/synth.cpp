#include "synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace scanalign::synth {

namespace {

const std::vector<std::string> kOnsets = {"b", "c",  "d",  "f",  "g",  "h",  "k",  "l",  "m", "n",
                                          "p", "r",  "s",  "t",  "v",  "w",  "st", "tr", "pl", "gr",
                                          "th", "sh", "ch", "br", "",   "",   "n",  "r",  "s",  "t"};
const std::vector<std::string> kVowels = {"a", "e", "i", "o", "u", "e", "a", "o", "ai", "ea", "ou", "ie"};
const std::vector<std::string> kCodas = {"", "", "", "n", "r", "s", "t", "l", "nd", "rn", "st", "m", "d", "th"};

const std::vector<std::string> kDeterminers = {"the", "the", "the", "a", "his", "her", "that", "this", "every"};
const std::vector<std::string> kPrepositions = {"of", "of", "in", "to", "with", "by", "from", "upon", "at"};
const std::vector<std::string> kConjunctions = {"and", "and", "but", "for", "so", "while"};
const std::vector<std::string> kPronouns = {"he", "she", "it", "they", "we"};
const std::vector<std::string> kFunctionWords = {"the",  "a",  "his", "her",  "that", "this", "every", "of",
                                                 "in",   "to", "with", "by",  "from", "upon", "at",    "and",
                                                 "but",  "for", "so",  "while", "he",  "she",  "it",    "they",
                                                 "we",   "said", "not"};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

std::string make_word(Rng& rng, std::size_t syllables) {
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += pick(kOnsets, rng);
    w += pick(kVowels, rng);
    if (s + 1 == syllables || rng.chance(0.4)) w += pick(kCodas, rng);
  }
  return w;
}

std::vector<double> zipf_cdf(std::size_t n) {
  std::vector<double> cdf(n);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    total += 1.0 / static_cast<double>(r + 1);
    cdf[r] = total;
  }
  for (auto& c : cdf) c /= total;
  return cdf;
}

bool is_lower_word(const std::string& t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool no_space_before(const std::string& t) { return t == "," || t == "." || t == ";" || t == "!" || t == "?" || t == ":"; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Language::Language(std::uint64_t seed, std::size_t nouns, std::size_t verbs, std::size_t adjectives) {
  Rng rng(seed);
  std::set<std::string> used(kFunctionWords.begin(), kFunctionWords.end());
  auto fill = [&](std::vector<std::string>& out, std::size_t n) {
    while (out.size() < n) {
      std::string w = make_word(rng, 1 + rng.below(3));
      if (w.size() < 2 || !used.insert(w).second) continue;
      out.push_back(std::move(w));
    }
  };
  fill(nouns_, nouns);
  fill(verbs_, verbs);
  fill(adjectives_, adjectives);
  noun_cdf_ = zipf_cdf(nouns_.size());
  verb_cdf_ = zipf_cdf(verbs_.size());
  adjective_cdf_ = zipf_cdf(adjectives_.size());
}

const std::string& Language::zipf(const std::vector<std::string>& words, const std::vector<double>& cdf,
                                  Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return words[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), words.size() - 1)];
}

void Language::clause(Rng& rng, std::vector<std::string>& out) const {
  auto noun_phrase = [&] {
    out.push_back(pick(kDeterminers, rng));
    if (rng.chance(0.3)) out.push_back(zipf(adjectives_, adjective_cdf_, rng));
    out.push_back(zipf(nouns_, noun_cdf_, rng));
  };
  if (rng.chance(0.2)) out.push_back(pick(kPronouns, rng));
  else noun_phrase();
  if (rng.chance(0.05)) out.push_back("not");
  out.push_back(zipf(verbs_, verb_cdf_, rng));
  if (rng.chance(0.7)) noun_phrase();
  if (rng.chance(0.4)) {
    out.push_back(pick(kPrepositions, rng));
    noun_phrase();
  }
  if (rng.chance(0.04)) {
    out.push_back("in");
    out.push_back(std::to_string(1500 + rng.below(400)));
  }
}

std::vector<std::string> Language::sentence(Rng& rng) const {
  std::vector<std::string> out;
  clause(rng, out);
  if (rng.chance(0.35)) {
    out.push_back(",");
    out.push_back(pick(kConjunctions, rng));
    clause(rng, out);
  }
  if (rng.chance(0.12)) {
    out.push_back(";");
    clause(rng, out);
  }
  if (rng.chance(0.08)) {
    out.push_back(",");
    out.push_back("said");
    out.push_back("\"");
    clause(rng, out);
    out.push_back("\"");
  }
  const double e = rng.uniform();
  out.push_back(e < 0.8 ? "." : e < 0.88 ? "!" : "?");
  out.front()[0] = static_cast<char>(out.front()[0] - 'a' + 'A');
  return out;
}

std::vector<std::string> Language::text(Rng& rng, std::size_t sentences) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < sentences; ++i) {
    auto s = sentence(rng);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<std::string> Language::lexicon() const {
  std::set<std::string> all(kFunctionWords.begin(), kFunctionWords.end());
  all.insert(nouns_.begin(), nouns_.end());
  all.insert(verbs_.begin(), verbs_.end());
  all.insert(adjectives_.begin(), adjectives_.end());
  return {all.begin(), all.end()};
}

std::string Language::fresh_word(Rng& rng) const {
  const auto lex = lexicon();
  const std::set<std::string> known(lex.begin(), lex.end());
  while (true) {
    std::string w = make_word(rng, 1 + rng.below(3));
    if (w.size() >= 2 && !known.count(w)) return w;
  }
}

std::string render(std::span<const std::string> tokens) {
  std::string out;
  bool in_quote = false;
  bool glue_next = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    bool space = i > 0 && !glue_next;
    glue_next = false;
    if (t == "\"") {
      if (in_quote) space = false;
      else glue_next = true;
      in_quote = !in_quote;
    } else if (no_space_before(t)) {
      space = false;
    }
    if (space) out += ' ';
    out += t;
    // Paragraph break after every twelfth sentence gives the text some shape.
    if ((t == "." || t == "!" || t == "?") && i + 1 < tokens.size() && stable_hash(tokens[i + 1]) % 12 == 0)
      out += '\n';
  }
  out += '\n';
  return out;
}

std::vector<Plant> default_plants() {
  return {{"h", "b", 0.7}, {"d", "b", 0.3}, {"e", "c", 0.75}, {"o", "c", 0.25}, {";", "j", 0.6},
          {"i", "j", 0.4}, {"rn", "m", 0.5}, {"n", "m", 0.25}, {"n", "u", 0.5},  {"s", "f", 0.8},
          {"t", "f", 0.2}};
}

Corrupted corrupt(std::span<const std::string> tokens, const CorruptOptions& options, Rng& rng) {
  Corrupted out;
  out.tokens.assign(tokens.begin(), tokens.end());

  auto applicable = [&](const std::string& tok) {
    std::vector<const Plant*> ps;
    for (const auto& p : options.plants) {
      if (!std::isalpha(static_cast<unsigned char>(p.correct[0]))) {
        if (tok == p.correct) ps.push_back(&p);
      } else if (is_lower_word(tok.substr(tok.size() > 1 ? 1 : 0)) && tok.find(p.correct, 1) != std::string::npos) {
        ps.push_back(&p);
      }
    }
    return ps;
  };
  auto eligible = [&](std::size_t i) {
    if (!applicable(tokens[i]).empty()) return true;
    return options.scramble_fallback && tokens[i].size() > 1 && std::isalpha(static_cast<unsigned char>(tokens[i][0]));
  };
  auto apply = [&](std::size_t i) {
    const std::string& tok = tokens[i];
    CorruptionEvent ev;
    ev.token = i;
    ev.clean_token = tok;
    const auto ps = applicable(tok);
    if (ps.empty()) {
      // Scramble one non-initial letter.
      const std::size_t pos = 1 + rng.below(tok.size() - 1);
      char c = tok[pos];
      while (c == tok[pos]) c = static_cast<char>('a' + rng.below(26));
      ev.correct = tok.substr(pos, 1);
      ev.observed = std::string(1, c);
      ev.dirty_token = tok;
      ev.dirty_token[pos] = c;
    } else {
      double total = 0.0;
      for (const auto* p : ps) total += p->weight;
      double u = rng.uniform() * total;
      const Plant* chosen = ps.back();
      for (const auto* p : ps) {
        if (u < p->weight) {
          chosen = p;
          break;
        }
        u -= p->weight;
      }
      ev.correct = chosen->correct;
      ev.observed = chosen->observed;
      if (tok == chosen->correct) {
        ev.dirty_token = chosen->observed;
      } else {
        std::vector<std::size_t> at;
        for (auto k = tok.find(chosen->correct, 1); k != std::string::npos; k = tok.find(chosen->correct, k + 1)) at.push_back(k);
        const std::size_t k = at[rng.below(at.size())];
        ev.dirty_token = tok.substr(0, k) + chosen->observed + tok.substr(k + chosen->correct.size());
      }
    }
    out.tokens[i] = ev.dirty_token;
    out.events.push_back(std::move(ev));
  };

  const auto target = static_cast<std::size_t>(std::llround(options.rate * static_cast<double>(tokens.size())));
  std::vector<char> hit(tokens.size(), 0);
  if (!options.bursty) {
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (eligible(i)) cand.push_back(i);
    for (std::size_t i = 0; i + 1 < cand.size(); ++i) std::swap(cand[i], cand[i + rng.below(cand.size() - i)]);
    cand.resize(std::min(cand.size(), target));
    std::sort(cand.begin(), cand.end());
    for (auto i : cand) apply(i);
    return out;
  }
  std::size_t done = 0, attempts = 0;
  while (done < target && attempts++ < 100 * (target + 1) && !tokens.empty()) {
    const std::size_t start = rng.below(tokens.size());
    const auto len = 1 + static_cast<std::size_t>(-std::log(1.0 - rng.uniform()) * (options.mean_burst - 1.0));
    for (std::size_t i = start; i < std::min(tokens.size(), start + len) && done < target; ++i)
      if (!hit[i] && eligible(i)) {
        hit[i] = 1;
        ++done;
      }
  }
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (hit[i]) apply(i);
  return out;
}

void write_corpus(const std::filesystem::path& dir, std::span<const SynthBook> books) {
  std::filesystem::create_directories(dir);
  std::ofstream meta(dir / "metadata.csv", std::ios::binary);
  meta << "book_id,title,author,pub_year,source_library,digitizer\n";
  for (const auto& b : books) {
    std::ofstream(dir / (b.meta.book_id + ".txt"), std::ios::binary) << b.text;
    meta << csv_field(b.meta.book_id) << ',' << csv_field(b.meta.title) << ',' << csv_field(b.meta.author) << ','
         << (b.meta.pub_year ? std::to_string(*b.meta.pub_year) : "") << ','
         << csv_field(b.meta.source_library.value_or("")) << ',' << digitizer_code(b.meta.digitizer) << '\n';
  }
  if (!meta) throw std::runtime_error("cannot write " + (dir / "metadata.csv").string());
}

void write_lexicon(const std::filesystem::path& path, std::span<const std::string> words) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& w : words) out << w << '\n';
}

}  // namespace scanalign::synth
