#include "scanalign/singlecopy.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "scanalign/errors.hpp"
#include "scanalign/parallel.hpp"
#include "scanalign/rng.hpp"
#include "scanalign/text.hpp"

namespace scanalign {

namespace {

std::vector<std::string> token_strings(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : tokenize(s)) out.push_back(std::move(t.text));
  return out;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0, pos = 0;
  while (pos < s.size()) {
    text::next_codepoint(s, pos);
    ++n;
  }
  return n;
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

const char* label_name(ExampleLabel l) { return l == ExampleLabel::error ? "error" : "clean"; }

}  // namespace

std::string mark_span(std::span<const std::string> tokens, TokenRange span) {
  std::vector<std::string> parts;
  parts.reserve(tokens.size() + 2);
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    if (i == span.begin) parts.emplace_back(kOpenMarker);
    if (i == span.end) parts.emplace_back(kCloseMarker);
    if (i < tokens.size()) parts.push_back(tokens[i]);
  }
  return join_tokens(parts);
}

MarkedSentence parse_marked(std::string_view s) {
  const std::size_t opens = count_occurrences(s, kOpenMarker);
  const std::size_t closes = count_occurrences(s, kCloseMarker);
  const std::size_t open = s.find(kOpenMarker);
  const std::size_t close = s.find(kCloseMarker);
  if (opens != 1 || closes != 1 || close < open)
    throw DataError("expected exactly one <ocr> ... </ocr> span in: " + std::string(s));
  MarkedSentence out;
  out.tokens = token_strings(s.substr(0, open));
  out.span.begin = out.tokens.size();
  for (auto& t : token_strings(s.substr(open + kOpenMarker.size(), close - open - kOpenMarker.size())))
    out.tokens.push_back(std::move(t));
  out.span.end = out.tokens.size();
  for (auto& t : token_strings(s.substr(close + kCloseMarker.size()))) out.tokens.push_back(std::move(t));
  return out;
}

bool is_test_book(const std::string& book_id, const ExportConfig& config) {
  return to_unit(splitmix64(stable_hash(book_id) ^ splitmix64(config.seed))) < config.test_fraction;
}

TrainingSplit export_training(std::span<const ScoredSentencePair> pairs, std::span<const Book> clean_books,
                              const ExportConfig& config) {
  std::vector<TrainingExample> errors;
  struct CleanCandidate {
    std::uint64_t key;
    int tier;
    TrainingExample example;
  };
  std::vector<CleanCandidate> clean;
  std::set<std::pair<std::string, std::string>> seen_clean;
  std::map<std::string, std::vector<TokenRange>> covered;

  auto add_clean = [&](const std::string& book_id, std::string text, int tier) {
    if (text.empty() || !seen_clean.emplace(book_id, text).second) return;
    const std::uint64_t key = stable_hash(text, stable_hash(book_id, splitmix64(config.seed)));
    clean.push_back({key, tier, {std::move(text), "", ExampleLabel::clean, book_id}});
  };

  for (const auto& p : pairs) {
    covered[p.record.book_a_id].push_back(p.record.sentence_a_range);
    covered[p.record.book_b_id].push_back(p.record.sentence_b_range);
    if (p.tie) continue;
    const bool a_wins = p.winner == Side::a;
    const auto loser_tokens = a_wins ? p.record.sentence_tokens_b() : p.record.sentence_tokens_a();
    const TokenRange gap = a_wins ? p.record.relative_gap_b() : p.record.relative_gap_a();
    const auto& target = a_wins ? p.record.gap_a_tokens : p.record.gap_b_tokens;
    errors.push_back({mark_span(loser_tokens, gap), join_tokens(target), ExampleLabel::error, p.loser_id()});
    add_clean(p.winner_id(), a_wins ? p.record.sentence_a : p.record.sentence_b, 0);
  }
  for (const auto& book : clean_books) {
    const auto it = covered.find(book.id());
    for (const auto& r : book.sentences()) {
      bool hit = false;
      if (it != covered.end())
        for (const auto& c : it->second) hit = hit || (r.begin < c.end && c.begin < r.end);
      if (!hit) add_clean(book.id(), book.join(r), 1);
    }
  }
  std::sort(clean.begin(), clean.end(), [](const CleanCandidate& x, const CleanCandidate& y) {
    if (x.tier != y.tier) return x.tier < y.tier;
    if (x.key != y.key) return x.key < y.key;
    return x.example.text < y.example.text;
  });

  std::size_t want = clean.size();
  if (config.clean_ratio <= 0.0) want = 0;
  else if (config.clean_ratio < 1.0)
    want = std::min(clean.size(), static_cast<std::size_t>(std::llround(static_cast<double>(errors.size()) *
                                                                         config.clean_ratio / (1.0 - config.clean_ratio))));

  TrainingSplit out;
  auto place = [&](TrainingExample e) {
    (is_test_book(e.book_id, config) ? out.test : out.train).push_back(std::move(e));
  };
  for (auto& e : errors) place(std::move(e));
  for (std::size_t i = 0; i < want; ++i) place(std::move(clean[i].example));
  return out;
}

nlohmann::json to_json(const TrainingExample& e) {
  return {{"text", e.text}, {"target", e.target}, {"label", label_name(e.label)}, {"book_id", e.book_id}};
}

TrainingExample training_example_from_json(const nlohmann::json& j) {
  TrainingExample e;
  try {
    e.text = j.at("text").get<std::string>();
    e.target = j.at("target").get<std::string>();
    e.book_id = j.value("book_id", std::string());
    const auto label = j.at("label").get<std::string>();
    if (label == "error") e.label = ExampleLabel::error;
    else if (label == "clean") e.label = ExampleLabel::clean;
    else throw DataError("unknown training label " + label);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("bad training example: ") + ex.what());
  }
  return e;
}

NgramLM train_channel_lm(std::span<const Book> books, const Lexicon& lexicon, const NgramConfig& config) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& b : books) {
    for (const auto& r : b.sentences()) {
      auto s = b.token_texts(r);
      for (auto& t : s)
        if (is_word_token(t) && !lexicon.contains(t)) t = "<unk>";
      sentences.push_back(std::move(s));
    }
  }
  return NgramLM::train(sentences, config);
}

std::vector<double> fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double l2,
                                 int max_iter) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("logistic fit needs matching, non-empty data");
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index d = static_cast<Eigen::Index>(x.front().size()) + 1;
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index k = 1; k < d; ++k) X(i, k) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k - 1)];
    Y(i) = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  }
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(d, l2);
  reg(0) = 0.0;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd mu = (X * w).unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd s = mu.unaryExpr([](double m) { return std::max(m * (1.0 - m), 1e-10); });
    Eigen::MatrixXd H = X.transpose() * (X.array().colwise() * s.array()).matrix();
    H.diagonal() += reg;
    H.diagonal().array() += 1e-12;
    const Eigen::VectorXd g = X.transpose() * (Y - mu) - reg.cwiseProduct(w);
    const Eigen::VectorXd step = H.ldlt().solve(g);
    w += step;
    if (step.cwiseAbs().maxCoeff() < 1e-9) break;
  }
  return {w.data(), w.data() + w.size()};
}

ChannelModel::ChannelModel(std::shared_ptr<const Lexicon> lexicon, std::shared_ptr<const NgramLM> lm,
                           const ConfusionTable& confusions,
                           std::span<const std::vector<std::string>> reference_sentences, ChannelConfig config)
    : lexicon_(std::move(lexicon)), lm_(std::move(lm)), config_(config) {
  std::vector<std::string> joined;
  joined.reserve(reference_sentences.size());
  std::size_t chars = 0;
  for (const auto& s : reference_sentences) {
    joined.push_back(join_tokens(s));
    chars += codepoint_count(joined.back());
  }
  std::unordered_map<std::string, std::size_t> occurrences;
  for (const auto& c : confusions.entries()) {
    if (c.count < config_.min_confusion_count || c.observed.empty() || c.observed == c.correct) continue;
    auto [it, fresh] = occurrences.try_emplace(c.correct, 0);
    if (fresh) {
      if (c.correct.empty()) it->second = chars;
      else
        for (const auto& s : joined) it->second += count_occurrences(s, c.correct);
    }
    const double occ = static_cast<double>(std::max<std::size_t>(it->second, c.count));
    edits_.push_back({c.correct, c.observed, c.count, std::log(static_cast<double>(c.count) / occ)});
  }
}

bool ChannelModel::acceptable(std::string_view candidate) const {
  for (const auto& t : tokenize(candidate))
    if (t.is_word && !lexicon_->contains(t.text)) return false;
  return true;
}

bool ChannelModel::matches_pattern(const std::string& token) const {
  for (const auto& e : edits_) {
    if (e.observed.find(' ') != std::string::npos) continue;
    for (std::size_t pos = token.find(e.observed); pos != std::string::npos; pos = token.find(e.observed, pos + 1)) {
      std::string repaired = token;
      repaired.replace(pos, e.observed.size(), e.correct);
      if (repaired != token && acceptable(repaired) && !repaired.empty()) return true;
    }
  }
  return false;
}

double ChannelModel::sentence_log_prob(std::span<const std::string> tokens) const {
  const auto lps = lm_->token_log_probs(tokens);
  const double lexicon_penalty = -std::log(static_cast<double>(std::max<std::size_t>(lexicon_->size(), 1)));
  const double char_penalty = -std::log(30.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    sum += lps[i];
    if (lm_->lookup(tokens[i]) != NgramLM::kUnk) continue;
    if (is_word_token(tokens[i]) && lexicon_->contains(tokens[i])) sum += lexicon_penalty;
    else sum += char_penalty * static_cast<double>(codepoint_count(tokens[i]) + 1);
  }
  return sum;
}

std::vector<std::array<double, ChannelModel::kFeatures>> ChannelModel::features(
    std::span<const std::string> tokens) const {
  std::vector<std::array<double, kFeatures>> out(tokens.size());
  if (tokens.empty()) return out;
  const auto lps = lm_->token_log_probs(tokens);
  double mean = 0.0;
  for (double lp : lps) mean -= lp;
  mean /= static_cast<double>(lps.size());
  double var = 0.0;
  for (double lp : lps) var += (-lp - mean) * (-lp - mean);
  const double sd = std::max(std::sqrt(var / static_cast<double>(lps.size())), config_.surprisal_sd_floor);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool word = is_word_token(tokens[i]);
    out[i][0] = !word || lexicon_->contains(tokens[i]) ? 1.0 : 0.0;
    out[i][1] = (-lps[i] - mean) / sd;
    out[i][2] = matches_pattern(tokens[i]) ? 1.0 : 0.0;
  }
  return out;
}

std::vector<double> ChannelModel::token_error_probs(std::span<const std::string> tokens) const {
  const auto f = features(tokens);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    double z = weights_[0];
    for (std::size_t k = 0; k < kFeatures; ++k) z += weights_[k + 1] * f[i][k];
    out[i] = sigmoid(z);
  }
  return out;
}

void ChannelModel::fit_detector(std::span<const TrainingExample> examples) {
  std::vector<std::vector<std::vector<double>>> rows(examples.size());
  std::vector<std::vector<int>> labels(examples.size());
  parallel_for(examples.size(), [&](std::size_t i) {
    const auto& e = examples[i];
    MarkedSentence m;
    if (e.label == ExampleLabel::error) {
      m = parse_marked(e.text);
    } else {
      m.tokens = token_strings(e.text);
      m.span = {0, 0};
    }
    const auto f = features(m.tokens);
    for (std::size_t t = 0; t < f.size(); ++t) {
      rows[i].emplace_back(f[t].begin(), f[t].end());
      labels[i].push_back(m.span.contains(t) ? 1 : 0);
    }
  });
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (auto& r : rows[i]) x.push_back(std::move(r));
    y.insert(y.end(), labels[i].begin(), labels[i].end());
  }
  if (x.empty()) throw DataError("no tokens to fit the detector on");
  const auto w = fit_logistic(x, y, config_.l2);
  std::copy(w.begin(), w.end(), weights_.begin());
}

std::vector<DetectionSpan> ChannelModel::detect(std::span<const std::string> tokens, double threshold) const {
  const auto probs = token_error_probs(tokens);
  std::vector<DetectionSpan> out;
  for (std::size_t i = 0; i < probs.size();) {
    if (probs[i] < threshold) {
      ++i;
      continue;
    }
    DetectionSpan s{{i, i}, 0.0};
    while (i < probs.size() && probs[i] >= threshold) s.confidence = std::max(s.confidence, probs[i++]);
    s.tokens.end = i;
    out.push_back(s);
  }
  return out;
}

CorrectionCandidate ChannelModel::correct(const MarkedSentence& input) const {
  const auto& tokens = input.tokens;
  const TokenRange span = input.span;
  if (span.end > tokens.size() || span.begin > span.end) throw DataError("marked span outside the sentence");
  const std::string observed =
      join_tokens(std::span<const std::string>(tokens).subspan(span.begin, span.end - span.begin));

  // Channel log probability of reaching `observed` from each candidate.
  std::map<std::string, double> channel;
  auto offer = [&](std::map<std::string, double>& into, std::string s, double lp) {
    if (s == observed) return;
    auto [it, fresh] = into.try_emplace(std::move(s), lp);
    if (!fresh) it->second = std::max(it->second, lp);
  };
  std::vector<std::pair<std::string, double>> frontier{{observed, 0.0}};
  for (std::size_t depth = 1; depth <= config_.max_edits && !frontier.empty(); ++depth) {
    std::map<std::string, double> next;
    for (const auto& [state, lp] : frontier) {
      for (const auto& e : edits_) {
        for (std::size_t pos = state.find(e.observed); pos != std::string::npos; pos = state.find(e.observed, pos + 1)) {
          std::string s = state;
          s.replace(pos, e.observed.size(), e.correct);
          offer(next, std::move(s), lp + e.log_prob);
        }
      }
    }
    if (depth == 1 && observed.size() <= 24) {
      const double g = config_.generic_edit_log_prob;
      std::vector<std::size_t> starts;
      for (std::size_t pos = 0; pos < observed.size();) {
        starts.push_back(pos);
        text::next_codepoint(observed, pos);
      }
      starts.push_back(observed.size());
      for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
        const std::size_t b = starts[k], len = starts[k + 1] - b;
        offer(next, observed.substr(0, b) + observed.substr(b + len), g);
        for (char c = 'a'; c <= 'z'; ++c)
          offer(next, observed.substr(0, b) + c + observed.substr(b + len), g);
        if (k > 0 && observed[b - 1] != ' ' && observed[b] != ' ')
          offer(next, observed.substr(0, b) + ' ' + observed.substr(b), g);
      }
      for (std::size_t b : starts)
        for (char c = 'a'; c <= 'z'; ++c) offer(next, observed.substr(0, b) + c + observed.substr(b), g);
    }
    for (const auto& [s, lp] : next) offer(channel, s, lp);
    std::vector<std::pair<std::string, double>> ranked(next.begin(), next.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    if (ranked.size() > config_.top_k) ranked.resize(config_.top_k);
    frontier = std::move(ranked);
  }

  std::vector<std::pair<std::string, double>> candidates;
  for (const auto& [s, lp] : channel)
    if (acceptable(s)) candidates.emplace_back(s, lp);
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  if (candidates.size() > config_.top_k) candidates.resize(config_.top_k);

  // Index 0 is the unchanged span.
  std::vector<std::vector<std::string>> outputs{
      std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(span.begin),
                               tokens.begin() + static_cast<std::ptrdiff_t>(span.end))};
  std::vector<double> total{sentence_log_prob(tokens)};
  std::vector<std::string> strings{observed};
  for (const auto& [s, lp] : candidates) {
    auto repl = token_strings(s);
    std::vector<std::string> full(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(span.begin));
    full.insert(full.end(), repl.begin(), repl.end());
    full.insert(full.end(), tokens.begin() + static_cast<std::ptrdiff_t>(span.end), tokens.end());
    total.push_back(lp + sentence_log_prob(full));
    outputs.push_back(std::move(repl));
    strings.push_back(s);
  }
  const double top = *std::max_element(total.begin(), total.end());
  std::vector<double> post(total.size());
  double z = 0.0;
  for (std::size_t i = 0; i < total.size(); ++i) z += post[i] = std::exp(total[i] - top);
  for (auto& v : post) v /= z;
  const std::size_t best = static_cast<std::size_t>(std::max_element(total.begin(), total.end()) - total.begin());

  double score = post[best];
  if (!outputs[best].empty()) {
    score = 1.0;
    for (std::size_t k = 0; k < outputs[best].size(); ++k) {
      double mass = 0.0;
      for (std::size_t c = 0; c < outputs.size(); ++c)
        if (outputs[c].size() > k && outputs[c][k] == outputs[best][k]) mass += post[c];
      score = std::min(score, mass);
    }
  }
  return {strings[best], std::clamp(score, 0.0, 1.0), best != 0};
}

nlohmann::json ChannelModel::to_json() const {
  nlohmann::json edits = nlohmann::json::array();
  for (const auto& e : edits_)
    edits.push_back({{"correct", e.correct}, {"observed", e.observed}, {"count", e.count}, {"log_prob", e.log_prob}});
  return {{"version", 1},
          {"config",
           {{"max_edits", config_.max_edits},
            {"top_k", config_.top_k},
            {"min_confusion_count", config_.min_confusion_count},
            {"generic_edit_log_prob", config_.generic_edit_log_prob},
            {"surprisal_sd_floor", config_.surprisal_sd_floor},
            {"l2", config_.l2}}},
          {"weights", weights_},
          {"edits", edits}};
}

ChannelModel ChannelModel::from_json(const nlohmann::json& j, std::shared_ptr<const Lexicon> lexicon,
                                     std::shared_ptr<const NgramLM> lm) {
  ChannelModel m;
  m.lexicon_ = std::move(lexicon);
  m.lm_ = std::move(lm);
  try {
    if (j.at("version").get<int>() != 1) throw DataError("unsupported channel model version");
    const auto& c = j.at("config");
    m.config_.max_edits = c.at("max_edits").get<std::size_t>();
    m.config_.top_k = c.at("top_k").get<std::size_t>();
    m.config_.min_confusion_count = c.at("min_confusion_count").get<std::uint64_t>();
    m.config_.generic_edit_log_prob = c.at("generic_edit_log_prob").get<double>();
    m.config_.surprisal_sd_floor = c.at("surprisal_sd_floor").get<double>();
    m.config_.l2 = c.at("l2").get<double>();
    m.weights_ = j.at("weights").get<Weights>();
    for (const auto& e : j.at("edits"))
      m.edits_.push_back({e.at("correct").get<std::string>(), e.at("observed").get<std::string>(),
                          e.at("count").get<std::uint64_t>(), e.at("log_prob").get<double>()});
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("bad channel model: ") + ex.what());
  }
  return m;
}

ChannelModel build_channel(std::shared_ptr<const Lexicon> lexicon, std::shared_ptr<const NgramLM> lm,
                           const ConfusionTable& confusions, std::span<const Book> reference_books,
                           std::span<const TrainingExample> training, ChannelConfig config) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& b : reference_books)
    for (const auto& r : b.sentences()) sentences.push_back(b.token_texts(r));
  ChannelModel m(std::move(lexicon), std::move(lm), confusions, sentences, config);
  m.fit_detector(training);
  return m;
}

std::vector<ProposedCorrection> propose_corrections(const Book& book, const ChannelModel& model,
                                                    double detection_threshold) {
  const auto& sentences = book.sentences();
  std::vector<std::vector<ProposedCorrection>> per(sentences.size());
  parallel_for(sentences.size(), [&](std::size_t s) {
    const TokenRange range = sentences[s];
    const auto tokens = book.token_texts(range);
    for (const auto& d : model.detect(tokens, detection_threshold)) {
      const auto c = model.correct(MarkedSentence{tokens, d.tokens});
      if (!c.changed) continue;
      ProposedCorrection p;
      p.book_id = book.id();
      p.sentence = s;
      p.span = {range.begin + d.tokens.begin, range.begin + d.tokens.end};
      p.original = book.join(p.span);
      p.replacement = c.replacement;
      p.score = c.score;
      p.detection_confidence = d.confidence;
      per[s].push_back(std::move(p));
    }
  });
  std::vector<ProposedCorrection> out;
  for (auto& v : per)
    for (auto& p : v) out.push_back(std::move(p));
  return out;
}

std::vector<ProposedCorrection> apply_threshold(std::span<const ProposedCorrection> proposals, double tau,
                                                double detection_threshold) {
  std::vector<ProposedCorrection> out;
  for (const auto& p : proposals)
    if (p.score >= tau && p.detection_confidence >= detection_threshold) out.push_back(p);
  return out;
}

std::string apply_corrections(const Book& book, std::span<const ProposedCorrection> accepted) {
  std::vector<const ProposedCorrection*> order;
  for (const auto& p : accepted) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* x, const auto* y) { return x->span.begin < y->span.begin; });
  const auto& raw = book.raw_text();
  const auto& toks = book.tokens();
  std::string out;
  out.reserve(raw.size());
  std::size_t cursor = 0;       // byte offset into raw
  std::size_t token_floor = 0;  // first token that may still be rewritten
  for (const auto* p : order) {
    if (p->span.begin < token_floor || p->span.end > toks.size()) continue;
    if (p->span.empty()) {
      const std::size_t at = p->span.begin < toks.size() ? toks[p->span.begin].char_start : raw.size();
      out.append(raw, cursor, at - cursor);
      out += p->replacement;
      if (!p->replacement.empty()) out += ' ';
      cursor = at;
      token_floor = p->span.begin;
      continue;
    }
    const std::size_t from = toks[p->span.begin].char_start, to = toks[p->span.end - 1].char_end;
    out.append(raw, cursor, from - cursor);
    out += p->replacement;
    cursor = to;
    token_floor = p->span.end;
  }
  out.append(raw, cursor, std::string::npos);
  return out;
}

CorrectionReport evaluate_corrections(const Book& truth, const Book& dirty, const Book& corrected) {
  const auto t = truth.token_texts({0, truth.token_count()});
  const auto d = dirty.token_texts({0, dirty.token_count()});
  const auto c = corrected.token_texts({0, corrected.token_count()});
  std::vector<char> in_dirty(t.size(), 0), in_corrected(t.size(), 0);
  for (const auto& m : align_tokens(t, d).matches) in_dirty[m.a] = 1;
  for (const auto& m : align_tokens(t, c).matches) in_corrected[m.a] = 1;
  CorrectionReport r;
  r.book_id = dirty.id();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!in_dirty[i] && in_corrected[i]) ++r.errors_corrected;
    else if (in_dirty[i] && !in_corrected[i]) ++r.errors_introduced;
    else if (!in_dirty[i] && !in_corrected[i]) ++r.errors_missed;
  }
  return r;
}

std::vector<std::vector<DetectionSpan>> external_detect(std::span<const std::string> texts, ExternalClient& client) {
  std::vector<std::vector<DetectionSpan>> out;
  for (const auto& r : client.request("detect", texts)) {
    if (!r.contains("spans") || !r["spans"].is_array()) throw ProtocolError("detect response without spans: " + r.dump());
    std::vector<DetectionSpan> spans;
    try {
      for (const auto& s : r["spans"]) {
        DetectionSpan d;
        d.tokens = {s.at("start_token").get<std::size_t>(), s.at("end_token").get<std::size_t>()};
        d.confidence = s.at("conf").get<double>();
        if (d.tokens.end < d.tokens.begin || !(d.confidence >= 0.0 && d.confidence <= 1.0))
          throw ProtocolError("bad detect span: " + s.dump());
        spans.push_back(d);
      }
    } catch (const nlohmann::json::exception&) {
      throw ProtocolError("malformed detect span in: " + r.dump());
    }
    out.push_back(std::move(spans));
  }
  return out;
}

std::vector<CorrectionCandidate> external_correct(std::span<const std::string> marked_texts, ExternalClient& client) {
  for (const auto& t : marked_texts) parse_marked(t);
  std::vector<CorrectionCandidate> out;
  const auto replies = client.request("correct", marked_texts);
  for (std::size_t i = 0; i < replies.size(); ++i) {
    const auto& r = replies[i];
    if (!r.contains("replacement") || !r["replacement"].is_string() || !r.contains("score") || !r["score"].is_number())
      throw ProtocolError("correct response without replacement/score: " + r.dump());
    const auto m = parse_marked(marked_texts[i]);
    const std::string original =
        join_tokens(std::span<const std::string>(m.tokens).subspan(m.span.begin, m.span.end - m.span.begin));
    CorrectionCandidate c;
    c.replacement = r["replacement"].get<std::string>();
    c.score = std::clamp(r["score"].get<double>(), 0.0, 1.0);
    c.changed = c.replacement != original;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace scanalign
