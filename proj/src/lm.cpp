#include "scanalign/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "scanalign/errors.hpp"
#include "scanalign/text.hpp"

namespace scanalign {

bool is_word_token(std::string_view token) {
  if (token.empty()) return false;
  std::size_t p = 0;
  return text::is_alpha(text::next_codepoint(token, p));
}

Lexicon::Lexicon(std::span<const std::string> words) {
  for (const auto& w : words) insert(w);
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word list " + path.string());
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    lex.insert(line.substr(b, line.find_last_not_of(" \t\r") - b + 1));
  }
  return lex;
}

bool Lexicon::contains(std::string_view word) const { return words_.count(text::fold_case(word)) != 0; }

void Lexicon::insert(std::string_view word) { words_.insert(text::fold_case(word)); }

namespace {

const char* smoothing_name(Smoothing s) { return s == Smoothing::kneser_ney ? "kneser_ney" : "add_alpha_backoff"; }

}  // namespace

NgramLM::Key NgramLM::make_key(std::span<const Id> ids) {
  Key k(ids.size() * sizeof(Id), '\0');
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Id v = ids[i];
    for (std::size_t b = 0; b < sizeof(Id); ++b) k[i * sizeof(Id) + b] = static_cast<char>((v >> (8 * b)) & 0xFF);
  }
  return k;
}

NgramLM NgramLM::train(std::span<const std::vector<std::string>> sentences, const NgramConfig& config) {
  if (config.order < 1 || config.order > 5) throw std::invalid_argument("n-gram order must be in 1..5");
  auto norm = [&](const std::string& t) { return config.fold_case ? text::fold_case(t) : t; };

  std::map<std::string, std::uint64_t> freq;
  std::size_t tokens = 0;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++freq[norm(t)];
    tokens += s.size();
  }
  if (tokens == 0) throw std::invalid_argument("cannot train a language model on an empty corpus");

  NgramLM lm;
  lm.config_ = config;
  lm.words_ = {"<unk>", "<s>", "</s>"};
  for (const auto& [w, c] : freq) {
    if (w == "<unk>" || w == "<s>" || w == "</s>") continue;
    if (c >= std::max<std::size_t>(config.min_count, 1)) lm.words_.push_back(w);
    else ++lm.unk_types_;
  }
  for (Id i = 0; i < lm.words_.size(); ++i) lm.ids_.emplace(lm.words_[i], i);

  const auto k = static_cast<std::size_t>(config.order);
  lm.counts_.assign(k, {});
  std::vector<Id> seq;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    seq.assign(k - 1, kBos);
    for (const auto& t : s) {
      auto it = lm.ids_.find(norm(t));
      seq.push_back(it == lm.ids_.end() ? kUnk : it->second);
    }
    seq.push_back(kEos);
    for (std::size_t p = k - 1; p < seq.size(); ++p)
      for (std::size_t n = 1; n <= k; ++n)
        ++lm.counts_[n - 1][make_key(std::span<const Id>(seq).subspan(p + 1 - n, n))];
  }
  lm.rebuild_derived();
  return lm;
}

NgramLM NgramLM::train(std::span<const Book> books, const NgramConfig& config) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& b : books)
    for (const auto& r : b.sentences()) sentences.push_back(b.token_texts(r));
  return train(sentences, config);
}

void NgramLM::rebuild_derived() {
  const auto k = static_cast<std::size_t>(config_.order);
  contexts_.assign(k, {});
  continuation_.assign(k, {});
  continuation_contexts_.assign(k, {});
  unigram_total_ = 0;
  for (const auto& [key, c] : counts_[0]) unigram_total_ += c;
  for (std::size_t n = 2; n <= k; ++n) {
    for (const auto& [key, c] : counts_[n - 1]) {
      auto& st = contexts_[n - 1][key.substr(0, (n - 1) * sizeof(Id))];
      st.total += c;
      ++st.distinct;
    }
  }
  if (config_.smoothing != Smoothing::kneser_ney) return;
  for (std::size_t n = 1; n < k; ++n) {
    for (const auto& [key, c] : counts_[n]) ++continuation_[n - 1][key.substr(sizeof(Id))];
    if (n >= 2) {
      for (const auto& [key, cc] : continuation_[n - 1]) {
        auto& st = continuation_contexts_[n - 1][key.substr(0, (n - 1) * sizeof(Id))];
        st.total += cc;
        ++st.distinct;
      }
    }
  }
  continuation_total_ = 0;
  continuation_types_ = 0;
  if (k > 1) {
    for (const auto& [key, cc] : continuation_[0]) {
      continuation_total_ += cc;
      ++continuation_types_;
    }
  }
}

NgramLM::Id NgramLM::lookup(std::string_view token) const {
  auto it = ids_.find(config_.fold_case ? text::fold_case(token) : std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

std::uint64_t NgramLM::unigram_count(std::string_view token) const {
  const Id id = lookup(token);
  if (id == kUnk) return 0;
  auto it = counts_[0].find(make_key(std::span<const Id>(&id, 1)));
  return it == counts_[0].end() ? 0 : it->second;
}

double NgramLM::prob(std::span<const Id> context, Id word) const {
  const std::size_t n = context.size() + 1;
  const auto V = static_cast<double>(vocab_size());
  const std::size_t k = static_cast<std::size_t>(config_.order);

  std::vector<Id> gram(context.begin(), context.end());
  gram.push_back(word);
  const Key key = make_key(gram);
  auto count_of = [](const std::unordered_map<Key, std::uint64_t>& m, const Key& kk) -> double {
    auto it = m.find(kk);
    return it == m.end() ? 0.0 : static_cast<double>(it->second);
  };

  if (config_.smoothing == Smoothing::add_alpha_backoff) {
    const double a = config_.alpha * V;
    if (n == 1) return (count_of(counts_[0], key) + config_.alpha) / (static_cast<double>(unigram_total_) + a);
    const double lower = prob(context.subspan(1), word);
    auto it = contexts_[n - 1].find(key.substr(0, context.size() * sizeof(Id)));
    if (it == contexts_[n - 1].end() || it->second.total == 0) return lower;
    return (count_of(counts_[n - 1], key) + a * lower) / (static_cast<double>(it->second.total) + a);
  }

  const double D = config_.discount;
  const bool highest = n == k;
  if (n == 1) {
    if (highest) {
      const auto total = static_cast<double>(unigram_total_);
      const auto types = static_cast<double>(counts_[0].size());
      return std::max(count_of(counts_[0], key) - D, 0.0) / total + D * types / total / V;
    }
    const auto total = static_cast<double>(continuation_total_);
    return std::max(count_of(continuation_[0], key) - D, 0.0) / total +
           D * static_cast<double>(continuation_types_) / total / V;
  }
  const double lower = prob(context.subspan(1), word);
  const auto& ctx_map = highest ? contexts_[n - 1] : continuation_contexts_[n - 1];
  const auto& cnt_map = highest ? counts_[n - 1] : continuation_[n - 1];
  auto it = ctx_map.find(key.substr(0, context.size() * sizeof(Id)));
  if (it == ctx_map.end() || it->second.total == 0) return lower;
  const auto total = static_cast<double>(it->second.total);
  return std::max(count_of(cnt_map, key) - D, 0.0) / total +
         D * static_cast<double>(it->second.distinct) / total * lower;
}

double NgramLM::log_prob(std::span<const Id> context, Id word) const {
  const std::size_t keep = std::min<std::size_t>(context.size(), static_cast<std::size_t>(config_.order - 1));
  return std::log(prob(context.subspan(context.size() - keep), word));
}

std::vector<double> NgramLM::token_log_probs(std::span<const std::string> tokens) const {
  const std::size_t k = static_cast<std::size_t>(config_.order);
  std::vector<Id> seq(k - 1, kBos);
  for (const auto& t : tokens) seq.push_back(lookup(t));
  std::vector<double> out;
  out.reserve(tokens.size());
  // <unk> stands for every folded type, so one string gets an equal share.
  const double unk_share = std::log(static_cast<double>(std::max<std::uint64_t>(unk_types_, 1)));
  for (std::size_t p = k - 1; p < seq.size(); ++p)
    out.push_back(log_prob(std::span<const Id>(seq).subspan(p + 1 - k, k - 1), seq[p]) -
                  (seq[p] == kUnk ? unk_share : 0.0));
  return out;
}

double NgramLM::normalized_log_likelihood(std::span<const std::string> tokens) const {
  if (tokens.empty()) return 0.0;
  double sum = 0.0;
  for (double lp : token_log_probs(tokens)) sum += lp;
  return sum / static_cast<double>(tokens.size());
}

void NgramLM::save(std::ostream& out) const {
  out << "scanalign-ngram 1\n";
  out << std::setprecision(17);
  out << "order " << config_.order << " smoothing " << smoothing_name(config_.smoothing) << " alpha " << config_.alpha
      << " discount " << config_.discount << " min_count " << config_.min_count << " fold_case "
      << (config_.fold_case ? 1 : 0) << "\n";
  out << "vocab " << words_.size() - 3 << " unk_types " << unk_types_ << "\n";
  for (std::size_t i = 3; i < words_.size(); ++i) out << words_[i] << "\n";
  for (std::size_t n = 1; n <= counts_.size(); ++n) {
    std::vector<std::pair<std::vector<Id>, std::uint64_t>> rows;
    rows.reserve(counts_[n - 1].size());
    for (const auto& [key, c] : counts_[n - 1]) {
      std::vector<Id> ids(n);
      for (std::size_t i = 0; i < n; ++i) {
        Id v = 0;
        for (std::size_t b = 0; b < sizeof(Id); ++b)
          v |= static_cast<Id>(static_cast<unsigned char>(key[i * sizeof(Id) + b])) << (8 * b);
        ids[i] = v;
      }
      rows.emplace_back(std::move(ids), c);
    }
    std::sort(rows.begin(), rows.end());
    out << "counts " << n << " " << rows.size() << "\n";
    for (const auto& [ids, c] : rows) {
      for (Id v : ids) out << v << ' ';
      out << c << "\n";
    }
  }
}

void NgramLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write language model " + path.string());
  save(out);
}

NgramLM NgramLM::load(std::istream& in) {
  auto fail = [](const std::string& why) { return DataError("bad language model file: " + why); };
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "scanalign-ngram" || version != 1) throw fail("unrecognised header");
  NgramLM lm;
  std::string tag, smoothing;
  int fold = 1;
  in >> tag >> lm.config_.order >> tag >> smoothing >> tag >> lm.config_.alpha >> tag >> lm.config_.discount >> tag >>
      lm.config_.min_count >> tag >> fold;
  if (!in || lm.config_.order < 1 || lm.config_.order > 5) throw fail("bad config line");
  lm.config_.smoothing = smoothing == "kneser_ney" ? Smoothing::kneser_ney : Smoothing::add_alpha_backoff;
  lm.config_.fold_case = fold != 0;
  std::size_t nv = 0;
  in >> tag >> nv;
  if (tag != "vocab") throw fail("missing vocab");
  in >> tag >> lm.unk_types_;
  if (tag != "unk_types") throw fail("missing unk_types");
  lm.words_ = {"<unk>", "<s>", "</s>"};
  for (std::size_t i = 0; i < nv; ++i) {
    std::string w;
    in >> w;
    lm.words_.push_back(w);
  }
  for (Id i = 0; i < lm.words_.size(); ++i) lm.ids_.emplace(lm.words_[i], i);
  lm.counts_.assign(static_cast<std::size_t>(lm.config_.order), {});
  for (int n = 1; n <= lm.config_.order; ++n) {
    int order = 0;
    std::size_t rows = 0;
    in >> tag >> order >> rows;
    if (tag != "counts" || order != n) throw fail("missing counts for order " + std::to_string(n));
    std::vector<Id> ids(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < rows; ++r) {
      for (auto& v : ids) in >> v;
      std::uint64_t c = 0;
      in >> c;
      lm.counts_[static_cast<std::size_t>(n - 1)][make_key(ids)] = c;
    }
  }
  if (!in) throw fail("truncated");
  lm.rebuild_derived();
  return lm;
}

NgramLM NgramLM::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open language model " + path.string());
  return load(in);
}

}  // namespace scanalign
