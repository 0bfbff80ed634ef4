#pragma once

// JSONL serialisation of pipeline artifacts.

#include <filesystem>
#include <vector>

#include "json.hpp"
#include "scanalign/canonical.hpp"
#include "scanalign/dedup.hpp"
#include "scanalign/scoring.hpp"

namespace scanalign {

/// One JSON object per line. Throws DataError naming the file and line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Writes through a temporary file and renames it into place.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);
void write_text_file(const std::filesystem::path& path, const std::string& contents);

nlohmann::json to_json(const BookMeta& meta);

nlohmann::json to_json(const DuplicateSet& set);
DuplicateSet duplicate_set_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DifferenceRecord& r);
DifferenceRecord difference_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ScoredSentencePair& p);
ScoredSentencePair scored_pair_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CanonicalResult& r);

}  // namespace scanalign
