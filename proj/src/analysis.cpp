#include "scanalign/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "scanalign/errors.hpp"
#include "scanalign/text.hpp"

namespace scanalign {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace

QualityReport book_quality(const Book& book, const SpanDetector& detector, double threshold) {
  const auto& sentences = book.sentences();
  if (sentences.empty()) throw DataError("book " + book.id() + " has no sentences; quality is undefined");
  QualityReport r;
  r.book_id = book.id();
  r.sentence_count = sentences.size();
  for (const auto& s : sentences) {
    const auto spans = detector(book.token_texts(s));
    if (std::any_of(spans.begin(), spans.end(), [&](const DetectionSpan& d) { return d.confidence >= threshold; }))
      ++r.error_sentence_count;
  }
  r.quality = 1.0 - static_cast<double>(r.error_sentence_count) / static_cast<double>(r.sentence_count);
  return r;
}

QualityReport book_quality(const Book& book, const ChannelModel& model, double threshold) {
  return book_quality(
      book, [&](std::span<const std::string> tokens) { return model.detect(tokens, threshold); }, threshold);
}

QualityReport book_quality_from_pairs(const Book& book, std::span<const ScoredSentencePair> pairs) {
  const auto& sentences = book.sentences();
  if (sentences.empty()) throw DataError("book " + book.id() + " has no sentences; quality is undefined");
  std::vector<char> lost(sentences.size(), 0);
  for (const auto& p : pairs) {
    if (p.tie || p.loser_id() != book.id()) continue;
    const TokenRange r = p.winner == Side::a ? p.record.sentence_b_range : p.record.sentence_a_range;
    if (r.begin >= book.token_count()) continue;
    for (std::size_t s = book.sentence_of(r.begin); s < sentences.size() && sentences[s].begin < std::max(r.end, r.begin + 1); ++s)
      lost[s] = 1;
  }
  QualityReport q;
  q.book_id = book.id();
  q.sentence_count = sentences.size();
  q.error_sentence_count = static_cast<std::size_t>(std::count(lost.begin(), lost.end(), 1));
  q.quality = 1.0 - static_cast<double>(q.error_sentence_count) / static_cast<double>(q.sentence_count);
  return q;
}

QualityTables aggregate_quality(std::span<const QualityReport> reports, std::span<const BookMeta> meta) {
  std::unordered_map<std::string, const BookMeta*> by_id;
  for (const auto& m : meta) by_id.emplace(m.book_id, &m);

  struct LibAcc {
    std::size_t count = 0, dated = 0;
    double quality = 0.0, years = 0.0;
    std::map<std::string, std::size_t> digitizers;
  };
  struct YearAcc {
    std::size_t count = 0;
    double quality = 0.0;
  };
  std::map<std::string, LibAcc> libs;
  std::map<int, YearAcc> years;
  for (const auto& r : reports) {
    auto it = by_id.find(r.book_id);
    if (it == by_id.end()) continue;
    const BookMeta& m = *it->second;
    auto& lib = libs[m.source_library.value_or("")];
    ++lib.count;
    lib.quality += r.quality;
    ++lib.digitizers[std::string(digitizer_code(m.digitizer))];
    if (m.pub_year) {
      ++lib.dated;
      lib.years += *m.pub_year;
      auto& y = years[*m.pub_year];
      ++y.count;
      y.quality += r.quality;
    }
  }
  QualityTables out;
  for (const auto& [name, acc] : libs) {
    LibraryQuality row;
    row.library = name;
    row.count = acc.count;
    row.mean_quality = acc.quality / static_cast<double>(acc.count);
    if (acc.dated) row.mean_year = acc.years / static_cast<double>(acc.dated);
    std::size_t best = 0;
    for (const auto& [code, n] : acc.digitizers)
      if (n > best) {
        best = n;
        row.digitizer = code;
      }
    out.by_library.push_back(std::move(row));
  }
  for (const auto& [year, acc] : years)
    out.by_year.push_back({year, acc.quality / static_cast<double>(acc.count), acc.count});
  return out;
}

void write_library_csv(const std::filesystem::path& path, std::span<const LibraryQuality> rows) {
  auto out = open_out(path);
  out << "library,digitizer,count,mean_year,mean_quality\n";
  for (const auto& r : rows)
    out << csv_field(r.library) << ',' << r.digitizer << ',' << r.count << ','
        << (r.mean_year ? fmt(*r.mean_year) : std::string()) << ',' << fmt(r.mean_quality) << '\n';
}

void write_year_csv(const std::filesystem::path& path, std::span<const YearQuality> rows) {
  auto out = open_out(path);
  out << "year,mean_quality,count\n";
  for (const auto& r : rows) out << r.year << ',' << fmt(r.mean_quality) << ',' << r.count << '\n';
}

void SubstitutionTable::add(const std::string& source, const std::string& replacement, std::uint64_t n) {
  if (n == 0) return;
  counts_[source][replacement] += n;
  total_ += n;
}

std::uint64_t SubstitutionTable::count(const std::string& source, const std::string& replacement) const {
  auto it = counts_.find(source);
  if (it == counts_.end()) return 0;
  auto jt = it->second.find(replacement);
  return jt == it->second.end() ? 0 : jt->second;
}

std::vector<Substitution> SubstitutionTable::row(const std::string& source) const {
  std::vector<Substitution> out;
  auto it = counts_.find(source);
  if (it == counts_.end()) return out;
  for (const auto& [rep, c] : it->second)
    out.push_back({rep, c, total_ ? static_cast<double>(c) / static_cast<double>(total_) : 0.0});
  std::stable_sort(out.begin(), out.end(), [](const Substitution& a, const Substitution& b) { return a.count > b.count; });
  return out;
}

std::vector<std::string> SubstitutionTable::sources() const {
  std::vector<std::string> out;
  for (const auto& [s, row] : counts_) out.push_back(s);
  return out;
}

void SubstitutionTable::save_tsv(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << "source_char\treplacement\tcount\tnorm_freq\n";
  for (const auto& s : sources())
    for (const auto& r : row(s)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.8f", r.norm_freq);
      out << s << '\t' << r.replacement << '\t' << r.count << '\t' << buf << '\n';
    }
}

std::optional<std::string> substitution_source(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  const char32_t c = text::next_codepoint(s, pos);
  if (pos != s.size() || !text::is_alpha(c)) return std::nullopt;
  std::string folded = text::fold_case(s);
  pos = 0;
  text::next_codepoint(folded, pos);
  if (pos != folded.size()) return std::nullopt;
  return folded;
}

SubstitutionTable mine_substitutions(std::span<const ScoredSentencePair> pairs) {
  constexpr std::size_t kMaxGapBytes = 256;
  SubstitutionTable t;
  for (const auto& p : pairs) {
    if (p.tie) continue;
    const auto& loser = p.winner == Side::a ? p.record.gap_b_tokens : p.record.gap_a_tokens;
    const std::string winner = winner_gap_text(p);
    if (loser.size() == 1) {
      std::size_t pos = 0;
      text::next_codepoint(loser.front(), pos);
      if (pos == loser.front().size()) {
        if (auto src = substitution_source(loser.front())) t.add(*src, winner);
        continue;
      }
    }
    const std::string observed = join_tokens(loser);
    if (observed.size() > kMaxGapBytes || winner.size() > kMaxGapBytes) continue;
    for (const auto& b : edit_blocks(observed, winner))
      if (auto src = substitution_source(b.observed)) t.add(*src, b.correct);
  }
  return t;
}

}  // namespace scanalign
