#include "scanalign/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "scanalign/analysis.hpp"
#include "scanalign/artifacts.hpp"
#include "scanalign/canonical.hpp"
#include "scanalign/errors.hpp"
#include "scanalign/parallel.hpp"

namespace scanalign {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kCorpus = "corpus.jsonl";
constexpr const char* kSkipped = "skipped.jsonl";
constexpr const char* kDuplicates = "duplicates.jsonl";
constexpr const char* kPairs = "pairs.jsonl";
constexpr const char* kDifferences = "differences.jsonl";
constexpr const char* kRated = "rated.jsonl";
constexpr const char* kCanonical = "canonical.jsonl";
constexpr const char* kTrain = "train.jsonl";
constexpr const char* kTest = "test.jsonl";
constexpr const char* kConfusions = "confusions.tsv";
constexpr const char* kChannelModel = "channel_model.json";
constexpr const char* kChannelLm = "channel_lm.txt";
constexpr const char* kDetections = "detections.jsonl";
constexpr const char* kCorrections = "corrections.jsonl";
constexpr const char* kCorrectedDir = "corrected";
constexpr const char* kCorrectionReport = "correction_report.csv";
constexpr const char* kQuality = "quality.jsonl";
constexpr const char* kByLibrary = "quality_by_library.csv";
constexpr const char* kByYear = "quality_by_year.csv";
constexpr const char* kSubstitutions = "substitutions.tsv";
constexpr const char* kGolden = "golden.json";

struct Stage {
  const PipelineConfig& cfg;
  std::ostream& log;

  fs::path at(const char* name) const { return cfg.work_dir / name; }

  fs::path need(const char* name, const char* producer) const {
    const fs::path p = at(name);
    if (!fs::exists(p)) throw DataError("missing artifact " + p.string() + " (run '" + producer + "' first)");
    return p;
  }

  void note(const std::string& stage, const std::string& msg) const { log << "[scanalign] " << stage << ": " << msg << '\n'; }
};

std::vector<Book> load_books(const Stage& st) {
  const auto manifest = read_jsonl(st.need(kCorpus, "ingest"));
  auto corpus = load_corpus(st.cfg.text_dir, st.cfg.metadata);
  std::vector<std::string> listed;
  for (const auto& row : manifest) listed.push_back(row.at("book_id").get<std::string>());
  std::vector<std::string> loaded;
  for (const auto& b : corpus.books) loaded.push_back(b.id());
  if (listed != loaded) throw DataError("corpus changed since ingest; re-run 'ingest'");
  return std::move(corpus.books);
}

std::vector<DuplicateSet> load_sets(const Stage& st) {
  std::vector<DuplicateSet> out;
  for (const auto& j : read_jsonl(st.need(kDuplicates, "dedup"))) out.push_back(duplicate_set_from_json(j));
  return out;
}

std::vector<ScoredSentencePair> load_rated(const Stage& st) {
  std::vector<ScoredSentencePair> out;
  for (const auto& j : read_jsonl(st.need(kRated, "rate"))) out.push_back(scored_pair_from_json(j));
  return out;
}

const Book& book_by_id(const BookIndex& index, const std::string& id) {
  auto it = index.find(id);
  if (it == index.end()) throw DataError("artifact names unknown book " + id);
  return *it->second;
}

std::shared_ptr<const Lexicon> need_lexicon(const PipelineConfig& cfg) {
  if (cfg.lexicon.empty()) throw DataError("config key scorer.lexicon is required for this stage");
  return std::make_shared<const Lexicon>(Lexicon::load(cfg.lexicon));
}

std::shared_ptr<const NgramLM> corpus_lm(const PipelineConfig& cfg, std::span<const Book> books) {
  if (!cfg.ngram_model.empty()) return std::make_shared<const NgramLM>(NgramLM::load(cfg.ngram_model));
  return std::make_shared<const NgramLM>(NgramLM::train(books, cfg.ngram));
}

std::shared_ptr<const SentenceScorer> make_scorer(const Stage& st, std::span<const Book> books) {
  const auto& cfg = st.cfg;
  switch (cfg.scorer) {
    case ScorerKind::dict:
      return std::make_shared<DictionaryScorer>(need_lexicon(cfg), cfg.dict_log_floor);
    case ScorerKind::ngram:
      return std::make_shared<NgramScorer>(corpus_lm(cfg, books));
    case ScorerKind::external: {
      if (cfg.external_cmd.empty()) throw DataError("the external scorer needs --external-cmd or scorer.external_cmd");
      const auto timeout = std::chrono::milliseconds(static_cast<long long>(cfg.external_timeout_s * 1000));
      if (!cfg.external_fallback)
        return std::make_shared<ExternalScorer>(std::make_shared<ExternalClient>(cfg.external_cmd, timeout));
      auto fallback = std::make_shared<NgramScorer>(corpus_lm(cfg, books));
      try {
        auto primary = std::make_shared<ExternalScorer>(std::make_shared<ExternalClient>(cfg.external_cmd, timeout));
        return std::make_shared<FallbackScorer>(primary, fallback);
      } catch (const ExternalScorerDied& e) {
        st.note("rate", std::string("external scorer unavailable (") + e.what() + "); using n-gram scorer");
        return fallback;
      }
    }
  }
  throw DataError("unknown scorer");
}

// Books that receive single-copy treatment.
std::vector<const Book*> single_copy_targets(const Stage& st, const BookIndex& index, std::span<const Book> books) {
  std::vector<const Book*> out;
  if (st.cfg.correct_all_books) {
    for (const auto& b : books) out.push_back(&b);
    return out;
  }
  std::set<std::string> duplicated;
  for (const auto& s : load_sets(st))
    if (s.member_book_ids.size() > 1) duplicated.insert(s.member_book_ids.begin(), s.member_book_ids.end());
  for (const auto& b : books)
    if (!duplicated.count(b.id())) out.push_back(&book_by_id(index, b.id()));
  return out;
}

ChannelModel load_channel(const Stage& st) {
  std::ifstream in(st.need(kChannelModel, "detect"), std::ios::binary);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed ") + kChannelModel + ": " + e.what());
  }
  auto lm = std::make_shared<const NgramLM>(NgramLM::load(st.need(kChannelLm, "detect")));
  return ChannelModel::from_json(j, need_lexicon(st.cfg), lm);
}

void ingest(const Stage& st) {
  const auto corpus = load_corpus(st.cfg.text_dir, st.cfg.metadata);
  std::vector<json> rows;
  for (const auto& b : corpus.books) {
    json j = to_json(b.meta());
    j["tokens"] = b.token_count();
    j["sentences"] = b.sentences().size();
    j["text_hash"] = stable_hash(b.raw_text());
    rows.push_back(std::move(j));
  }
  std::vector<json> skipped;
  for (const auto& s : corpus.skipped) skipped.push_back({{"book_id", s.book_id}, {"reason", s.reason}});
  write_jsonl(st.at(kCorpus), rows);
  write_jsonl(st.at(kSkipped), skipped);
  st.note("ingest", std::to_string(rows.size()) + " books, " + std::to_string(skipped.size()) + " skipped");
}

void dedup(const Stage& st) {
  const auto books = load_books(st);
  const auto sets = dedup_corpus(books, st.cfg.dedup);
  std::vector<json> rows;
  std::size_t anthologies = 0;
  for (const auto& s : sets) {
    rows.push_back(to_json(s));
    anthologies += s.anthology_book_ids.size();
  }
  write_jsonl(st.at(kDuplicates), rows);
  st.note("dedup", std::to_string(sets.size()) + " sets, " + std::to_string(anthologies) + " anthologies");
}

void align(const Stage& st) {
  const auto sets = load_sets(st);
  const auto books = load_books(st);
  const auto index = index_books(books);
  struct Job {
    std::string set_id;
    const Book* a;
    const Book* b;
  };
  std::vector<Job> jobs;
  for (const auto& s : sets)
    for (std::size_t i = 0; i < s.member_book_ids.size(); ++i)
      for (std::size_t k = i + 1; k < s.member_book_ids.size(); ++k)
        jobs.push_back({s.set_id, &book_by_id(index, s.member_book_ids[i]), &book_by_id(index, s.member_book_ids[k])});

  std::vector<json> pair_rows(jobs.size());
  std::vector<std::vector<json>> diff_rows(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    json row = {{"set_id", job.set_id}, {"pair", {job.a->id(), job.b->id()}}};
    try {
      const auto alignment = align_pair(*job.a, *job.b, st.cfg.align);
      const auto records = extract_differences(alignment, *job.a, *job.b);
      row["status"] = "ok";
      row["matches"] = alignment.matches.size();
      row["records"] = records.size();
      row["low_confidence"] = alignment.low_confidence;
      for (const auto& r : records) {
        json j = to_json(r);
        j["set_id"] = job.set_id;
        diff_rows[i].push_back(std::move(j));
      }
    } catch (const AlignmentImpossible& e) {
      row["status"] = "alignment_impossible";
      row["message"] = e.what();
    }
    pair_rows[i] = std::move(row);
  });
  std::vector<json> diffs;
  for (auto& v : diff_rows)
    for (auto& j : v) diffs.push_back(std::move(j));
  write_jsonl(st.at(kPairs), pair_rows);
  write_jsonl(st.at(kDifferences), diffs);
  st.note("align", std::to_string(jobs.size()) + " pairs, " + std::to_string(diffs.size()) + " difference records");
}

void rate(const Stage& st) {
  std::vector<DifferenceRecord> records;
  std::vector<std::string> set_ids;
  for (const auto& j : read_jsonl(st.need(kDifferences, "align"))) {
    records.push_back(difference_from_json(j));
    set_ids.push_back(j.value("set_id", std::string()));
  }
  const auto books = load_books(st);
  const auto scorer = make_scorer(st, books);
  constexpr std::size_t kBatch = 256;
  const std::size_t batches = (records.size() + kBatch - 1) / kBatch;
  std::vector<std::vector<ScoredSentencePair>> rated(batches);
  parallel_for(batches, [&](std::size_t b) {
    const std::size_t from = b * kBatch, to = std::min(records.size(), from + kBatch);
    rated[b] = rate_pairs(std::span<const DifferenceRecord>(records).subspan(from, to - from), *scorer, st.cfg.seed);
  });
  std::vector<json> rows;
  std::size_t i = 0;
  for (const auto& batch : rated)
    for (const auto& p : batch) {
      json j = to_json(p);
      j["set_id"] = set_ids[i++];
      rows.push_back(std::move(j));
    }
  write_jsonl(st.at(kRated), rows);
  st.note("rate", std::to_string(rows.size()) + " pairs rated with " + scorer->id());
}

void canonical(const Stage& st) {
  const auto sets = load_sets(st);
  std::map<std::pair<std::string, std::string>, std::string> status;
  for (const auto& j : read_jsonl(st.need(kPairs, "align")))
    status[{j.at("pair").at(0).get<std::string>(), j.at("pair").at(1).get<std::string>()}] =
        j.at("status").get<std::string>();
  std::map<std::pair<std::string, std::string>, std::vector<ScoredSentencePair>> by_pair;
  for (auto& p : load_rated(st)) by_pair[{p.record.book_a_id, p.record.book_b_id}].push_back(std::move(p));

  const BookComparator compare = [&](const std::string& a, const std::string& b) {
    auto it = status.find({a, b});
    if (it == status.end()) throw DataError("no alignment recorded for " + a + " / " + b);
    if (it->second != "ok") throw AlignmentImpossible("alignment impossible for " + a + " / " + b);
    auto rt = by_pair.find({a, b});
    static const std::vector<ScoredSentencePair> none;
    return compare_scored(a, b, rt == by_pair.end() ? none : rt->second);
  };
  std::vector<json> rows;
  for (const auto& s : sets) rows.push_back(to_json(tournament(s, compare)));
  write_jsonl(st.at(kCanonical), rows);
  st.note("canonical", std::to_string(rows.size()) + " sets resolved");
}

void export_training_stage(const Stage& st) {
  const auto rated = load_rated(st);
  std::set<std::string> canonical_ids;
  for (const auto& j : read_jsonl(st.need(kCanonical, "canonical")))
    if (!j.at("bracket").empty()) canonical_ids.insert(j.at("canonical").get<std::string>());
  const auto books = load_books(st);
  std::vector<Book> clean_books;
  for (const auto& b : books)
    if (canonical_ids.count(b.id())) clean_books.push_back(b);
  ExportConfig ec = st.cfg.export_config;
  ec.seed = st.cfg.seed;
  const auto split = export_training(rated, clean_books, ec);
  std::vector<json> train, test;
  for (const auto& e : split.train) train.push_back(to_json(e));
  for (const auto& e : split.test) test.push_back(to_json(e));
  write_jsonl(st.at(kTrain), train);
  write_jsonl(st.at(kTest), test);
  st.note("export-training", std::to_string(train.size()) + " train, " + std::to_string(test.size()) + " test examples");
}

void detect_stage(const Stage& st) {
  std::vector<TrainingExample> train;
  for (const auto& j : read_jsonl(st.need(kTrain, "export-training"))) train.push_back(training_example_from_json(j));
  const auto rated = load_rated(st);
  const auto books = load_books(st);
  const auto index = index_books(books);
  const auto lexicon = need_lexicon(st.cfg);
  const auto confusions = mine_confusions(rated);
  auto lm = std::make_shared<const NgramLM>(train_channel_lm(books, *lexicon, st.cfg.ngram));
  const ChannelModel model = build_channel(lexicon, lm, confusions, books, train, st.cfg.channel);

  confusions.save(st.at(kConfusions));
  lm->save(st.at(kChannelLm));
  write_text_file(st.at(kChannelModel), model.to_json().dump(1) + "\n");

  std::vector<json> rows;
  for (const Book* b : single_copy_targets(st, index, books)) {
    const auto& sentences = b->sentences();
    std::vector<std::vector<json>> per(sentences.size());
    parallel_for(sentences.size(), [&](std::size_t s) {
      for (const auto& d : model.detect(b->token_texts(sentences[s]), st.cfg.detection_threshold))
        per[s].push_back({{"book_id", b->id()},
                          {"sentence", s},
                          {"start_token", sentences[s].begin + d.tokens.begin},
                          {"end_token", sentences[s].begin + d.tokens.end},
                          {"text", b->join({sentences[s].begin + d.tokens.begin, sentences[s].begin + d.tokens.end})},
                          {"conf", d.confidence}});
    });
    for (auto& v : per)
      for (auto& j : v) rows.push_back(std::move(j));
  }
  write_jsonl(st.at(kDetections), rows);
  st.note("detect", std::to_string(rows.size()) + " spans at threshold " + std::to_string(st.cfg.detection_threshold));
}

void correct_stage(const Stage& st) {
  const ChannelModel model = load_channel(st);
  const auto books = load_books(st);
  const auto index = index_books(books);
  std::vector<json> rows;
  std::size_t accepted_total = 0;
  const fs::path dir = st.at(kCorrectedDir);
  fs::create_directories(dir);
  for (const Book* b : single_copy_targets(st, index, books)) {
    const auto proposals = propose_corrections(*b, model, st.cfg.detection_threshold);
    const auto accepted = apply_threshold(proposals, st.cfg.tau, st.cfg.detection_threshold);
    for (const auto& p : proposals) {
      const bool ok = p.score >= st.cfg.tau && p.detection_confidence >= st.cfg.detection_threshold;
      rows.push_back({{"book_id", p.book_id},
                      {"sentence", p.sentence},
                      {"start_token", p.span.begin},
                      {"end_token", p.span.end},
                      {"original", p.original},
                      {"replacement", p.replacement},
                      {"score", p.score},
                      {"detection_conf", p.detection_confidence},
                      {"accepted", ok}});
    }
    accepted_total += accepted.size();
    write_text_file(dir / (b->id() + ".txt"), apply_corrections(*b, accepted));
  }
  write_jsonl(st.at(kCorrections), rows);
  st.note("correct", std::to_string(rows.size()) + " proposals, " + std::to_string(accepted_total) + " accepted");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void eval_corrections_stage(const Stage& st) {
  if (st.cfg.truth_dir.empty()) throw DataError("config key eval.truth_dir is required for eval-corrections");
  const fs::path dir = st.at(kCorrectedDir);
  if (!fs::is_directory(dir)) throw DataError("missing artifact " + dir.string() + " (run 'correct' first)");
  const auto books = load_books(st);
  const auto index = index_books(books);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".txt") ids.push_back(entry.path().stem().string());
  std::sort(ids.begin(), ids.end());
  std::vector<CorrectionReport> reports(ids.size());
  std::vector<char> present(ids.size(), 0);
  parallel_for(ids.size(), [&](std::size_t i) {
    const fs::path truth_path = st.cfg.truth_dir / (ids[i] + ".txt");
    if (!fs::exists(truth_path)) return;
    const Book& dirty = book_by_id(index, ids[i]);
    const Book truth(dirty.meta(), read_file(truth_path));
    const Book corrected(dirty.meta(), read_file(dir / (ids[i] + ".txt")));
    reports[i] = evaluate_corrections(truth, dirty, corrected);
    present[i] = 1;
  });
  std::ostringstream csv;
  csv << "book_id,errors_corrected,errors_introduced,errors_missed\n";
  CorrectionReport total;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!present[i]) continue;
    const auto& r = reports[i];
    csv << r.book_id << ',' << r.errors_corrected << ',' << r.errors_introduced << ',' << r.errors_missed << '\n';
    total.errors_corrected += r.errors_corrected;
    total.errors_introduced += r.errors_introduced;
    total.errors_missed += r.errors_missed;
    ++n;
  }
  csv << "TOTAL," << total.errors_corrected << ',' << total.errors_introduced << ',' << total.errors_missed << '\n';
  write_text_file(st.at(kCorrectionReport), csv.str());
  st.note("eval-corrections", std::to_string(n) + " books: " + std::to_string(total.errors_corrected) + " corrected, " +
                                  std::to_string(total.errors_introduced) + " introduced");
}

void analyze(const Stage& st) {
  const auto sets = load_sets(st);
  const auto rated = load_rated(st);
  const ChannelModel model = load_channel(st);
  const auto books = load_books(st);

  std::set<std::string> duplicated;
  for (const auto& s : sets)
    if (s.member_book_ids.size() > 1) duplicated.insert(s.member_book_ids.begin(), s.member_book_ids.end());
  std::map<std::string, std::vector<ScoredSentencePair>> by_book;
  for (const auto& p : rated) {
    by_book[p.record.book_a_id].push_back(p);
    by_book[p.record.book_b_id].push_back(p);
  }
  std::vector<QualityReport> reports(books.size());
  std::vector<char> ok(books.size(), 0);
  parallel_for(books.size(), [&](std::size_t i) {
    const Book& b = books[i];
    if (b.sentences().empty()) return;
    if (duplicated.count(b.id())) {
      auto it = by_book.find(b.id());
      static const std::vector<ScoredSentencePair> none;
      reports[i] = book_quality_from_pairs(b, it == by_book.end() ? none : it->second);
    } else {
      reports[i] = book_quality(b, model, st.cfg.quality_threshold);
    }
    ok[i] = 1;
  });
  std::vector<QualityReport> kept;
  std::vector<json> rows;
  std::vector<BookMeta> meta;
  for (std::size_t i = 0; i < books.size(); ++i) {
    meta.push_back(books[i].meta());
    if (!ok[i]) {
      st.note("analyze", "book " + books[i].id() + " has no sentences; skipped");
      continue;
    }
    const auto& r = reports[i];
    rows.push_back({{"book_id", r.book_id},
                    {"quality", r.quality},
                    {"sentences", r.sentence_count},
                    {"error_sentences", r.error_sentence_count},
                    {"method", duplicated.count(r.book_id) ? "pairs" : "detector"}});
    kept.push_back(r);
  }
  const auto tables = aggregate_quality(kept, meta);
  write_jsonl(st.at(kQuality), rows);
  write_library_csv(st.at(kByLibrary), tables.by_library);
  write_year_csv(st.at(kByYear), tables.by_year);
  const auto subs = mine_substitutions(rated);
  subs.save_tsv(st.at(kSubstitutions));
  st.note("analyze", std::to_string(kept.size()) + " books scored, " + std::to_string(subs.total()) + " substitutions");
}

std::vector<GoldenPair> read_golden_pairs(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open golden pair list " + path.string());
  std::vector<GoldenPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "truth_id,scanned_id") throw DataError(path.string() + ": header must be truth_id,scanned_id");
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": expected two fields");
    out.push_back({line.substr(0, comma), line.substr(comma + 1)});
  }
  return out;
}

void golden(const Stage& st) {
  if (st.cfg.golden_pairs.empty()) throw DataError("config key golden.pairs is required for golden-eval");
  const auto pairs = read_golden_pairs(st.cfg.golden_pairs);
  if (pairs.empty()) throw DataError("golden pair list " + st.cfg.golden_pairs.string() + " is empty");
  const auto books = load_books(st);
  const auto index = index_books(books);
  const auto scorer = make_scorer(st, books);
  CompareOptions opts;
  opts.align = st.cfg.align;
  opts.seed = st.cfg.seed;
  const auto r = golden_eval(pairs, index, *scorer, opts);
  const json j = {{"total", r.total}, {"preferred_truth", r.preferred_truth}, {"failed", r.failed}, {"rate", r.rate()},
                  {"scorer", scorer->id()}};
  write_text_file(st.at(kGolden), j.dump() + "\n");
  st.note("golden-eval", std::to_string(r.preferred_truth) + "/" + std::to_string(r.total) + " prefer the truth side");
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"ingest",           "dedup",  "align",   "rate",
                                                 "canonical",        "export-training", "detect", "correct",
                                                 "eval-corrections", "analyze", "golden-eval"};
  return names;
}

void run_stage(const std::string& stage, const PipelineConfig& config, std::ostream& log) {
  fs::create_directories(config.work_dir);
  const Stage st{config, log};
  if (stage == "ingest") return ingest(st);
  if (stage == "dedup") return dedup(st);
  if (stage == "align") return align(st);
  if (stage == "rate") return rate(st);
  if (stage == "canonical") return canonical(st);
  if (stage == "export-training") return export_training_stage(st);
  if (stage == "detect") return detect_stage(st);
  if (stage == "correct") return correct_stage(st);
  if (stage == "eval-corrections") return eval_corrections_stage(st);
  if (stage == "analyze") return analyze(st);
  if (stage == "golden-eval") return golden(st);
  throw std::invalid_argument("unknown stage " + stage);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deduplicate, align, rate and clean scanned-book corpora.", "scanalign"};
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::string config_path, scorer, external_cmd;
  std::optional<unsigned> jobs;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Pipeline configuration file")->required();
  app.add_option("--jobs", jobs, "Worker threads (default: all cores)");
  app.add_option("--seed", seed, "Random seed; overrides pipeline.seed");
  app.add_option("--scorer", scorer, "Sentence scorer")->check(CLI::IsMember({"dict", "ngram", "external"}));
  app.add_option("--external-cmd", external_cmd, "Command line of an external scoring process");
  const std::map<std::string, std::string> help = {
      {"ingest", "Load texts and metadata; write corpus.jsonl and skipped.jsonl"},
      {"dedup", "Group books into duplicate sets; write duplicates.jsonl"},
      {"align", "Align every pair within a set; write pairs.jsonl and differences.jsonl"},
      {"rate", "Score both sentences of each difference; write rated.jsonl"},
      {"canonical", "Pick the best copy of each set by tournament; write canonical.jsonl"},
      {"export-training", "Write train.jsonl and test.jsonl from rated pairs"},
      {"detect", "Fit the noisy-channel detector and flag errors in single-copy books"},
      {"correct", "Correct flagged spans; write corrected/<id>.txt and corrections.jsonl"},
      {"eval-corrections", "Compare corrected books with ground truth; write correction_report.csv"},
      {"analyze", "Quality tables and substitution statistics"},
      {"golden-eval", "Measure how often the known-good copy of each golden pair wins"},
  };
  for (const auto& name : stage_names()) app.add_subcommand(name, help.at(name))->fallthrough();
  app.require_subcommand(1, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    PipelineConfig cfg = load_pipeline_config(config_path);
    if (seed) cfg.seed = *seed;
    cfg.export_config.seed = cfg.seed;
    if (jobs) cfg.jobs = *jobs;
    if (!scorer.empty()) cfg.scorer = *parse_scorer_kind(scorer);
    if (!external_cmd.empty()) cfg.external_cmd = external_cmd;
    set_worker_count(cfg.jobs);
    run_stage(stage, cfg, err);
  } catch (const DataError& e) {
    err << "scanalign " << stage << ": " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "scanalign " << stage << ": " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace scanalign
