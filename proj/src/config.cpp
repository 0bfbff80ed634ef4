#include "scanalign/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "scanalign/errors.hpp"

namespace scanalign {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

// Parses a value starting at s[0]; returns the value and the unparsed rest.
std::pair<ConfigValue, std::string> parse_value(std::string_view s, std::size_t line) {
  auto fail = [&](const std::string& why) { return DataError("config line " + std::to_string(line) + ": " + why); };
  if (s.empty()) throw fail("missing value");
  if (s.front() == '"') {
    std::string out;
    std::size_t i = 1;
    for (; i < s.size() && s[i] != '"'; ++i) {
      if (s[i] != '\\') {
        out += s[i];
        continue;
      }
      if (++i == s.size()) throw fail("unterminated escape");
      switch (s[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: throw fail(std::string("unknown escape \\") + s[i]);
      }
    }
    if (i == s.size()) throw fail("unterminated string");
    return {out, std::string(s.substr(i + 1))};
  }
  if (s.front() == '\'') {
    const auto end = s.find('\'', 1);
    if (end == std::string_view::npos) throw fail("unterminated string");
    return {std::string(s.substr(1, end - 1)), std::string(s.substr(end + 1))};
  }
  const auto end = s.find_first_of(" \t#");
  const std::string tok(s.substr(0, end));
  const std::string rest = end == std::string_view::npos ? std::string() : std::string(s.substr(end));
  if (tok == "true") return {true, rest};
  if (tok == "false") return {false, rest};
  std::string digits;
  for (char c : tok)
    if (c != '_') digits += c;
  char* stop = nullptr;
  const double v = std::strtod(digits.c_str(), &stop);
  if (digits.empty() || *stop != '\0' || !std::isfinite(v)) throw fail("cannot parse value '" + tok + "'");
  return {v, rest};
}

}  // namespace

std::map<std::string, ConfigValue> parse_config_text(std::string_view text) {
  std::map<std::string, ConfigValue> out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fail = [&](const std::string& why) { return DataError("config line " + std::to_string(lineno) + ": " + why); };
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw fail("unterminated section header");
      const std::string rest = trim(std::string_view(line).substr(close + 1));
      if (!rest.empty() && rest.front() != '#') throw fail("trailing text after section header");
      section = trim(std::string_view(line).substr(1, close - 1));
      if (!bare_key(section)) throw fail("bad section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (!bare_key(key)) throw fail("bad key '" + key + "'");
    auto [value, rest] = parse_value(trim(std::string_view(line).substr(eq + 1)), lineno);
    rest = trim(rest);
    if (!rest.empty() && rest.front() != '#') throw fail("trailing text after value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!out.emplace(full, std::move(value)).second) throw fail("repeated key " + full);
  }
  return out;
}

std::optional<ScorerKind> parse_scorer_kind(std::string_view s) {
  if (s == "dict") return ScorerKind::dict;
  if (s == "ngram") return ScorerKind::ngram;
  if (s == "external") return ScorerKind::external;
  return std::nullopt;
}

PipelineConfig pipeline_config_from_text(std::string_view text, const std::filesystem::path& base_dir) {
  auto values = parse_config_text(text);
  PipelineConfig cfg;
  cfg.work_dir = base_dir / "work";

  auto bad = [](const std::string& key, const std::string& why) { return DataError("config key " + key + ": " + why); };
  auto str = [&](const std::string& key) {
    auto* s = std::get_if<std::string>(&values.at(key));
    if (!s) throw bad(key, "expected a string");
    return *s;
  };
  auto num = [&](const std::string& key) {
    auto* d = std::get_if<double>(&values.at(key));
    if (!d) throw bad(key, "expected a number");
    return *d;
  };
  auto boolean = [&](const std::string& key) {
    auto* b = std::get_if<bool>(&values.at(key));
    if (!b) throw bad(key, "expected true or false");
    return *b;
  };
  auto path = [&](const std::string& key) {
    const std::filesystem::path p = str(key);
    return p.empty() || p.is_absolute() ? p : base_dir / p;
  };
  auto count = [&](const std::string& key) {
    const double v = num(key);
    if (v < 0 || v != std::floor(v)) throw bad(key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  };
  auto unit = [&](const std::string& key) {
    const double v = num(key);
    if (!(v >= 0.0 && v <= 1.0)) throw bad(key, "must lie in [0, 1]");
    return v;
  };

  const std::map<std::string, std::function<void(const std::string&)>> handlers = {
      {"corpus.text_dir", [&](const std::string& k) { cfg.text_dir = path(k); }},
      {"corpus.metadata", [&](const std::string& k) { cfg.metadata = path(k); }},
      {"corpus.work_dir", [&](const std::string& k) { cfg.work_dir = path(k); }},
      {"dedup.threshold", [&](const std::string& k) { cfg.dedup.threshold = unit(k); }},
      {"dedup.metric",
       [&](const std::string& k) {
         const auto m = str(k);
         if (m == "containment_min") cfg.dedup.metric = OverlapMetric::containment_min;
         else if (m == "jaccard") cfg.dedup.metric = OverlapMetric::jaccard;
         else throw bad(k, "expected containment_min or jaccard");
       }},
      {"dedup.anthology_patterns", [&](const std::string& k) { cfg.dedup.anthology_patterns = load_anthology_patterns(path(k)); }},
      {"align.max_segment_tokens",
       [&](const std::string& k) {
         cfg.align.max_segment_tokens = count(k);
         if (cfg.align.max_segment_tokens == 0) throw bad(k, "must be positive");
       }},
      {"align.validate_anchors", [&](const std::string& k) { cfg.align.validate_anchors = boolean(k); }},
      {"scorer.kind",
       [&](const std::string& k) {
         auto kind = parse_scorer_kind(str(k));
         if (!kind) throw bad(k, "expected dict, ngram or external");
         cfg.scorer = *kind;
       }},
      {"scorer.lexicon", [&](const std::string& k) { cfg.lexicon = path(k); }},
      {"scorer.ngram_model", [&](const std::string& k) { cfg.ngram_model = path(k); }},
      {"scorer.order",
       [&](const std::string& k) {
         const auto v = count(k);
         if (v < 1 || v > 5) throw bad(k, "must lie in 1..5");
         cfg.ngram.order = static_cast<int>(v);
       }},
      {"scorer.smoothing",
       [&](const std::string& k) {
         const auto s = str(k);
         if (s == "add_alpha") cfg.ngram.smoothing = Smoothing::add_alpha_backoff;
         else if (s == "kneser_ney") cfg.ngram.smoothing = Smoothing::kneser_ney;
         else throw bad(k, "expected add_alpha or kneser_ney");
       }},
      {"scorer.alpha", [&](const std::string& k) { cfg.ngram.alpha = num(k); }},
      {"scorer.discount", [&](const std::string& k) { cfg.ngram.discount = unit(k); }},
      {"scorer.min_count", [&](const std::string& k) { cfg.ngram.min_count = count(k); }},
      {"scorer.fold_case", [&](const std::string& k) { cfg.ngram.fold_case = boolean(k); }},
      {"scorer.log_floor", [&](const std::string& k) { cfg.dict_log_floor = num(k); }},
      {"scorer.external_cmd", [&](const std::string& k) { cfg.external_cmd = str(k); }},
      {"scorer.timeout_s", [&](const std::string& k) { cfg.external_timeout_s = num(k); }},
      {"scorer.fallback", [&](const std::string& k) { cfg.external_fallback = boolean(k); }},
      {"export.clean_ratio", [&](const std::string& k) { cfg.export_config.clean_ratio = unit(k); }},
      {"export.test_fraction", [&](const std::string& k) { cfg.export_config.test_fraction = unit(k); }},
      {"singlecopy.detection_threshold", [&](const std::string& k) { cfg.detection_threshold = unit(k); }},
      {"singlecopy.tau", [&](const std::string& k) { cfg.tau = num(k); }},
      {"singlecopy.max_edits", [&](const std::string& k) { cfg.channel.max_edits = count(k); }},
      {"singlecopy.top_k", [&](const std::string& k) { cfg.channel.top_k = count(k); }},
      {"singlecopy.min_confusion_count", [&](const std::string& k) { cfg.channel.min_confusion_count = count(k); }},
      {"singlecopy.generic_edit_log_prob", [&](const std::string& k) { cfg.channel.generic_edit_log_prob = num(k); }},
      {"singlecopy.correct_all_books", [&](const std::string& k) { cfg.correct_all_books = boolean(k); }},
      {"eval.truth_dir", [&](const std::string& k) { cfg.truth_dir = path(k); }},
      {"golden.pairs", [&](const std::string& k) { cfg.golden_pairs = path(k); }},
      {"analysis.quality_threshold", [&](const std::string& k) { cfg.quality_threshold = unit(k); }},
      {"pipeline.seed", [&](const std::string& k) { cfg.seed = count(k); }},
      {"pipeline.jobs", [&](const std::string& k) { cfg.jobs = static_cast<unsigned>(count(k)); }},
  };
  for (const auto& [key, value] : values) {
    auto it = handlers.find(key);
    if (it == handlers.end()) throw DataError("unknown config key " + key);
    it->second(key);
  }
  if (cfg.text_dir.empty()) throw DataError("config is missing corpus.text_dir");
  if (cfg.metadata.empty()) throw DataError("config is missing corpus.metadata");
  cfg.export_config.seed = cfg.seed;
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return pipeline_config_from_text(ss.str(), path.parent_path());
}

}  // namespace scanalign
