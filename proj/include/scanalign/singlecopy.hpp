#pragma once

// OCR error detection and correction for books without a duplicate: export
// of silver-labelled training data, a noisy-channel detector/corrector built
// from mined confusions, thresholding and evaluation against ground truth.

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scanalign/confusion.hpp"
#include "scanalign/external.hpp"
#include "scanalign/lm.hpp"
#include "scanalign/scoring.hpp"

namespace scanalign {

inline constexpr std::string_view kOpenMarker = "<ocr>";
inline constexpr std::string_view kCloseMarker = "</ocr>";

enum class ExampleLabel { clean, error };

struct TrainingExample {
  std::string text;    // space-joined tokens, error span wrapped in markers
  std::string target;  // replacement for the marked span; empty when clean
  ExampleLabel label = ExampleLabel::clean;
  std::string book_id;
};

struct TrainingSplit {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> test;
};

struct ExportConfig {
  double clean_ratio = 0.5;    // share of clean examples in the output
  double test_fraction = 0.2;  // share of books held out
  std::uint64_t seed = 0;
};

/// Renders tokens with [span.begin, span.end) wrapped in markers.
std::string mark_span(std::span<const std::string> tokens, TokenRange span);

struct MarkedSentence {
  std::vector<std::string> tokens;  // markers removed
  TokenRange span;
};

/// Splits a marked sentence. Throws DataError unless there is exactly one
/// open marker followed by exactly one close marker.
MarkedSentence parse_marked(std::string_view text);

bool is_test_book(const std::string& book_id, const ExportConfig& config);

/// Loser sentences become error examples (gap marked, winner's gap as the
/// target). Clean examples come from winning sentences, then from sentences
/// of `clean_books` not covered by any record, until they make up
/// clean_ratio of the output. Tied pairs are skipped. Books are assigned
/// wholesale to train or test.
TrainingSplit export_training(std::span<const ScoredSentencePair> pairs, std::span<const Book> clean_books,
                              const ExportConfig& config = {});

nlohmann::json to_json(const TrainingExample& e);
TrainingExample training_example_from_json(const nlohmann::json& j);

struct DetectionSpan {
  TokenRange tokens;
  double confidence = 0.0;
};

struct CorrectionCandidate {
  std::string replacement;
  double score = 0.0;  // min over replacement tokens of the marginal posterior
  bool changed = false;
};

struct ChannelConfig {
  std::size_t max_edits = 3;
  std::size_t top_k = 50;
  std::uint64_t min_confusion_count = 2;
  double generic_edit_log_prob = -11.5;  // about ln(1e-5)
  double surprisal_sd_floor = 0.25;
  double l2 = 1e-3;
};

/// Lexicon-restricted LM for the channel: word tokens outside the lexicon
/// are trained as <unk>.
NgramLM train_channel_lm(std::span<const Book> books, const Lexicon& lexicon, const NgramConfig& config = {});

/// L2-regularised logistic regression by iteratively reweighted least
/// squares. Each row of `x` excludes the intercept; the result has the
/// intercept first.
std::vector<double> fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                 double l2 = 1e-3, int max_iter = 50);

class ChannelModel {
 public:
  static constexpr std::size_t kFeatures = 3;  // lexicon, surprisal z, corruption pattern
  using Weights = std::array<double, kFeatures + 1>;

  /// Edit probabilities are P(observed | correct) per occurrence of the
  /// correct string in `reference_sentences`.
  ChannelModel(std::shared_ptr<const Lexicon> lexicon, std::shared_ptr<const NgramLM> lm,
               const ConfusionTable& confusions, std::span<const std::vector<std::string>> reference_sentences,
               ChannelConfig config = {});

  const ChannelConfig& config() const { return config_; }
  const Weights& weights() const { return weights_; }
  void set_weights(const Weights& w) { weights_ = w; }

  std::vector<std::array<double, kFeatures>> features(std::span<const std::string> tokens) const;
  std::vector<double> token_error_probs(std::span<const std::string> tokens) const;

  /// Fits the detector weights on token labels derived from the examples.
  void fit_detector(std::span<const TrainingExample> examples);

  /// Maximal runs of tokens whose error probability is at least `threshold`;
  /// span confidence is the largest token probability in the run.
  std::vector<DetectionSpan> detect(std::span<const std::string> tokens, double threshold) const;

  CorrectionCandidate correct(const MarkedSentence& input) const;
  CorrectionCandidate correct(std::string_view marked_text) const { return correct(parse_marked(marked_text)); }

  /// Open-vocabulary sentence log probability used to rank candidates.
  double sentence_log_prob(std::span<const std::string> tokens) const;

  nlohmann::json to_json() const;
  static ChannelModel from_json(const nlohmann::json& j, std::shared_ptr<const Lexicon> lexicon,
                                std::shared_ptr<const NgramLM> lm);

 private:
  ChannelModel() = default;
  struct Edit {
    std::string correct;
    std::string observed;
    std::uint64_t count = 0;
    double log_prob = 0.0;
  };
  bool acceptable(std::string_view candidate) const;
  bool matches_pattern(const std::string& token) const;

  std::shared_ptr<const Lexicon> lexicon_;
  std::shared_ptr<const NgramLM> lm_;
  ChannelConfig config_;
  std::vector<Edit> edits_;
  Weights weights_{0.0, 0.0, 0.0, 0.0};
};

ChannelModel build_channel(std::shared_ptr<const Lexicon> lexicon, std::shared_ptr<const NgramLM> lm,
                           const ConfusionTable& confusions, std::span<const Book> reference_books,
                           std::span<const TrainingExample> training, ChannelConfig config = {});

struct ProposedCorrection {
  std::string book_id;
  std::size_t sentence = 0;
  TokenRange span;  // book token range
  std::string original;
  std::string replacement;
  double score = 0.0;
  double detection_confidence = 0.0;
};

/// Detects at `detection_threshold` and proposes a correction per span.
/// Identity proposals are dropped.
std::vector<ProposedCorrection> propose_corrections(const Book& book, const ChannelModel& model,
                                                    double detection_threshold);

/// Keeps proposals with score >= tau and detection confidence >= the
/// detection threshold.
std::vector<ProposedCorrection> apply_threshold(std::span<const ProposedCorrection> proposals, double tau = 0.95,
                                                double detection_threshold = 0.0);

/// Rewrites the book text with the given corrections applied.
std::string apply_corrections(const Book& book, std::span<const ProposedCorrection> accepted);

struct CorrectionReport {
  std::string book_id;
  std::size_t errors_corrected = 0;
  std::size_t errors_introduced = 0;
  std::size_t errors_missed = 0;
};

/// Counts over truth token positions: corrected = unmatched in dirty and
/// matched in corrected; introduced = matched in dirty, unmatched in
/// corrected; missed = unmatched in both.
CorrectionReport evaluate_corrections(const Book& truth, const Book& dirty, const Book& corrected);

/// External model ops ("detect" and "correct").
std::vector<std::vector<DetectionSpan>> external_detect(std::span<const std::string> texts, ExternalClient& client);
std::vector<CorrectionCandidate> external_correct(std::span<const std::string> marked_texts, ExternalClient& client);

}  // namespace scanalign
