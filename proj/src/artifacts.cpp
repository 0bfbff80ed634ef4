#include "scanalign/artifacts.hpp"

#include <fstream>

#include "scanalign/errors.hpp"

namespace scanalign {

using nlohmann::json;

namespace {

json range_json(TokenRange r) { return json::array({r.begin, r.end}); }

TokenRange range_from(const json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

json score_json(const SentenceScore& s) {
  return {{"normalized_ll", s.normalized_ll}, {"token_count", s.token_count}, {"scorer_id", s.scorer_id}};
}

SentenceScore score_from(const json& j) {
  return {j.at("normalized_ll").get<double>(), j.at("token_count").get<std::size_t>(),
          j.at("scorer_id").get<std::string>()};
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing artifact " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::string body;
  for (const auto& r : rows) {
    body += r.dump();
    body += '\n';
  }
  write_text_file(path, body);
}

json to_json(const BookMeta& m) {
  json j = {{"book_id", m.book_id}, {"title", m.title}, {"author", m.author}};
  j["pub_year"] = m.pub_year ? json(*m.pub_year) : json(nullptr);
  j["source_library"] = m.source_library ? json(*m.source_library) : json(nullptr);
  j["digitizer"] = std::string(digitizer_code(m.digitizer));
  return j;
}

json to_json(const DuplicateSet& s) {
  return {{"set_id", s.set_id}, {"members", s.member_book_ids}, {"anthologies", s.anthology_book_ids}};
}

DuplicateSet duplicate_set_from_json(const json& j) {
  return guarded("duplicate set", [&] {
    return DuplicateSet{j.at("set_id").get<std::string>(), j.at("members").get<std::vector<std::string>>(),
                        j.at("anthologies").get<std::vector<std::string>>()};
  });
}

json to_json(const DifferenceRecord& r) {
  return {{"pair", {r.book_a_id, r.book_b_id}},
          {"index", r.index},
          {"gap_a", r.gap_a_tokens},
          {"gap_b", r.gap_b_tokens},
          {"sent_a", r.sentence_a},
          {"sent_b", r.sentence_b},
          {"low_confidence", r.low_confidence},
          {"span_a", range_json(r.gap_a)},
          {"span_b", range_json(r.gap_b)},
          {"sent_span_a", range_json(r.sentence_a_range)},
          {"sent_span_b", range_json(r.sentence_b_range)},
          {"context", {r.context_before, r.context_after}}};
}

DifferenceRecord difference_from_json(const json& j) {
  return guarded("difference record", [&] {
    DifferenceRecord r;
    r.book_a_id = j.at("pair").at(0).get<std::string>();
    r.book_b_id = j.at("pair").at(1).get<std::string>();
    r.index = j.at("index").get<std::size_t>();
    r.gap_a_tokens = j.at("gap_a").get<std::vector<std::string>>();
    r.gap_b_tokens = j.at("gap_b").get<std::vector<std::string>>();
    r.sentence_a = j.at("sent_a").get<std::string>();
    r.sentence_b = j.at("sent_b").get<std::string>();
    r.low_confidence = j.at("low_confidence").get<bool>();
    r.gap_a = range_from(j.at("span_a"));
    r.gap_b = range_from(j.at("span_b"));
    r.sentence_a_range = range_from(j.at("sent_span_a"));
    r.sentence_b_range = range_from(j.at("sent_span_b"));
    r.context_before = j.at("context").at(0).get<std::string>();
    r.context_after = j.at("context").at(1).get<std::string>();
    return r;
  });
}

json to_json(const ScoredSentencePair& p) {
  json j = to_json(p.record);
  j["score_a"] = score_json(p.score_a);
  j["score_b"] = score_json(p.score_b);
  j["p"] = p.p;
  j["q"] = p.q;
  j["winner"] = p.winner_id();
  j["tie"] = p.tie;
  return j;
}

ScoredSentencePair scored_pair_from_json(const json& j) {
  return guarded("rated pair", [&] {
    ScoredSentencePair p;
    p.record = difference_from_json(j);
    p.score_a = score_from(j.at("score_a"));
    p.score_b = score_from(j.at("score_b"));
    p.p = j.at("p").get<double>();
    p.q = j.at("q").get<double>();
    p.tie = j.at("tie").get<bool>();
    const auto winner = j.at("winner").get<std::string>();
    if (winner == p.record.book_a_id) p.winner = Side::a;
    else if (winner == p.record.book_b_id) p.winner = Side::b;
    else throw DataError("rated pair winner " + winner + " is not in its pair");
    return p;
  });
}

json to_json(const CanonicalResult& r) {
  json rounds = json::array();
  for (const auto& round : r.bracket) {
    json matches = json::array();
    for (const auto& m : round) {
      json jm = {{"a", m.a}, {"b", m.bye ? json(nullptr) : json(m.b)}, {"winner", m.winner},
                 {"lp_a", m.lp_a}, {"lp_b", m.lp_b}};
      if (m.bye) jm["bye"] = true;
      if (m.flagged) {
        jm["flagged"] = true;
        jm["note"] = m.note;
      }
      matches.push_back(std::move(jm));
    }
    rounds.push_back(std::move(matches));
  }
  return {{"set_id", r.set_id}, {"canonical", r.canonical_book_id}, {"bracket", rounds}};
}

}  // namespace scanalign
