#pragma once

// Pipeline configuration: a small TOML subset ([section] headers and
// key = value lines with quoted strings, numbers and booleans).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "scanalign/align.hpp"
#include "scanalign/dedup.hpp"
#include "scanalign/lm.hpp"
#include "scanalign/singlecopy.hpp"

namespace scanalign {

using ConfigValue = std::variant<std::string, double, bool>;

/// Flat "section.key" -> value map. Throws DataError with the line number
/// on syntax errors or repeated keys.
std::map<std::string, ConfigValue> parse_config_text(std::string_view text);

enum class ScorerKind { dict, ngram, external };

std::optional<ScorerKind> parse_scorer_kind(std::string_view s);

struct PipelineConfig {
  std::filesystem::path text_dir;
  std::filesystem::path metadata;
  std::filesystem::path work_dir;

  DedupConfig dedup;
  AlignConfig align;

  ScorerKind scorer = ScorerKind::ngram;
  std::filesystem::path lexicon;      // optional
  std::filesystem::path ngram_model;  // optional; trained from the corpus otherwise
  NgramConfig ngram;
  double dict_log_floor = -20.0;
  std::string external_cmd;
  double external_timeout_s = 60.0;
  bool external_fallback = true;  // fall back to the n-gram scorer if the process dies

  ExportConfig export_config;
  ChannelConfig channel;
  double detection_threshold = 0.95;
  double tau = 0.95;
  bool correct_all_books = false;  // otherwise only books without duplicates

  std::filesystem::path truth_dir;   // eval-corrections
  std::filesystem::path golden_pairs;  // golden-eval: CSV truth_id,scanned_id
  double quality_threshold = 0.95;

  std::uint64_t seed = 0;
  unsigned jobs = 0;
};

/// Relative paths resolve against the config file's directory. Unknown keys
/// and out-of-range thresholds throw DataError.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_text(std::string_view text, const std::filesystem::path& base_dir);

}  // namespace scanalign
