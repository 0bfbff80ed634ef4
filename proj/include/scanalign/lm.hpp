#pragma once

// Word list and n-gram language model used by the built-in scorers, the
// detector and the corrector.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "scanalign/corpus.hpp"

namespace scanalign {

/// True when the token starts with an alphabetic character.
bool is_word_token(std::string_view token);

/// Case-insensitive word list.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::span<const std::string> words);

  /// One word per line; '#' comments and blank lines ignored.
  static Lexicon load(const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  void insert(std::string_view word);
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

enum class Smoothing { add_alpha_backoff, kneser_ney };

struct NgramConfig {
  int order = 3;  // 1..5
  Smoothing smoothing = Smoothing::add_alpha_backoff;
  double alpha = 0.1;
  double discount = 0.75;    // Kneser–Ney
  std::size_t min_count = 2;  // rarer words map to <unk>
  bool fold_case = true;
};

class NgramLM {
 public:
  using Id = std::uint32_t;
  static constexpr Id kUnk = 0;
  static constexpr Id kBos = 1;
  static constexpr Id kEos = 2;

  /// Throws std::invalid_argument on an empty corpus or a bad order.
  static NgramLM train(std::span<const std::vector<std::string>> sentences, const NgramConfig& config = {});
  static NgramLM train(std::span<const Book> books, const NgramConfig& config = {});

  static NgramLM load(std::istream& in);
  static NgramLM load(const std::filesystem::path& path);
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;

  const NgramConfig& config() const { return config_; }
  int order() const { return config_.order; }
  /// Predictable types: words, <unk> and </s>.
  std::size_t vocab_size() const { return words_.size() - 1; }

  Id lookup(std::string_view token) const;
  bool known(std::string_view token) const { return lookup(token) != kUnk; }
  /// Training count of a word (0 for unknown words).
  std::uint64_t unigram_count(std::string_view token) const;

  /// ln P(word | context); context holds the preceding ids, oldest first.
  double log_prob(std::span<const Id> context, Id word) const;

  /// Word types folded into <unk> at training time.
  std::uint64_t unk_types() const { return unk_types_; }

  /// ln P of each token given its predecessors (sentence-initial padding).
  /// An unknown token gets <unk>'s mass divided evenly among the folded types.
  std::vector<double> token_log_probs(std::span<const std::string> tokens) const;

  /// Mean per-token log probability; 0 for an empty sentence.
  double normalized_log_likelihood(std::span<const std::string> tokens) const;

 private:
  struct ContextStats {
    std::uint64_t total = 0;
    std::uint32_t distinct = 0;
  };
  using Key = std::string;  // packed little-endian ids

  static Key make_key(std::span<const Id> ids);
  void rebuild_derived();
  double prob(std::span<const Id> context, Id word) const;  // context length = order - 1 at most

  NgramConfig config_;
  std::vector<std::string> words_;  // index = id
  std::unordered_map<std::string, Id> ids_;
  // counts_[n-1]: raw n-gram counts.
  std::vector<std::unordered_map<Key, std::uint64_t>> counts_;
  std::vector<std::unordered_map<Key, ContextStats>> contexts_;
  // Kneser–Ney continuation statistics for orders below the highest.
  std::vector<std::unordered_map<Key, std::uint64_t>> continuation_;
  std::vector<std::unordered_map<Key, ContextStats>> continuation_contexts_;
  std::uint64_t unigram_total_ = 0;
  std::uint64_t continuation_total_ = 0;
  std::uint64_t continuation_types_ = 0;
  std::uint64_t unk_types_ = 0;
};

}  // namespace scanalign
