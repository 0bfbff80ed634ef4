#include "scanalign/confusion.hpp"

#include <algorithm>
#include <fstream>

#include "scanalign/errors.hpp"
#include "scanalign/text.hpp"

namespace scanalign {

namespace {

struct Codepoints {
  std::vector<char32_t> cps;
  std::vector<std::size_t> offsets;  // byte offset of each codepoint, plus the end
};

Codepoints split_codepoints(std::string_view s) {
  Codepoints out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    out.offsets.push_back(pos);
    out.cps.push_back(text::next_codepoint(s, pos));
  }
  out.offsets.push_back(s.size());
  return out;
}

std::vector<std::uint32_t> distance_table(const Codepoints& a, const Codepoints& b) {
  const std::size_t n = a.cps.size(), m = b.cps.size();
  std::vector<std::uint32_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j) + 1, at(i, j - 1) + 1, at(i - 1, j - 1) + (a.cps[i - 1] == b.cps[j - 1] ? 0u : 1u)});
  return d;
}

std::string gap_text(const std::vector<std::string>& tokens) { return join_tokens(tokens); }

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const auto ca = split_codepoints(a), cb = split_codepoints(b);
  return distance_table(ca, cb).back();
}

std::vector<EditBlock> edit_blocks(std::string_view observed, std::string_view correct) {
  const auto a = split_codepoints(observed), b = split_codepoints(correct);
  const std::size_t m = b.cps.size();
  const auto d = distance_table(a, b);
  auto at = [&](std::size_t i, std::size_t j) { return d[i * (m + 1) + j]; };

  std::vector<EditBlock> blocks;
  std::size_t i = a.cps.size(), j = m;
  // End of the pending block (exclusive) on each side while walking back.
  std::size_t block_i = i, block_j = j;
  bool open = false;
  auto close = [&](std::size_t bi, std::size_t bj) {
    if (!open) return;
    blocks.push_back({std::string(observed.substr(a.offsets[bi], a.offsets[block_i] - a.offsets[bi])),
                      std::string(correct.substr(b.offsets[bj], b.offsets[block_j] - b.offsets[bj]))});
    open = false;
  };
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && a.cps[i - 1] == b.cps[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      close(i, j);
      --i;
      --j;
      continue;
    }
    if (!open) {
      open = true;
      block_i = i;
      block_j = j;
    }
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      --i;
    } else {
      --j;
    }
  }
  close(0, 0);
  std::reverse(blocks.begin(), blocks.end());
  return blocks;
}

std::string loser_gap_text(const ScoredSentencePair& pair) {
  return gap_text(pair.winner == Side::a ? pair.record.gap_b_tokens : pair.record.gap_a_tokens);
}

std::string winner_gap_text(const ScoredSentencePair& pair) {
  return gap_text(pair.winner == Side::a ? pair.record.gap_a_tokens : pair.record.gap_b_tokens);
}

void ConfusionTable::add(const std::string& correct, const std::string& observed, std::uint64_t n) {
  if (n == 0) return;
  counts_[{correct, observed}] += n;
  total_ += n;
}

void ConfusionTable::merge(const ConfusionTable& other) {
  for (const auto& [k, c] : other.counts_) add(k.first, k.second, c);
}

std::uint64_t ConfusionTable::count(const std::string& correct, const std::string& observed) const {
  auto it = counts_.find({correct, observed});
  return it == counts_.end() ? 0 : it->second;
}

std::vector<Confusion> ConfusionTable::entries() const {
  std::vector<Confusion> out;
  out.reserve(counts_.size());
  for (const auto& [k, c] : counts_) out.push_back({k.first, k.second, c});
  std::stable_sort(out.begin(), out.end(), [](const Confusion& x, const Confusion& y) { return x.count > y.count; });
  return out;
}

void ConfusionTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "correct\tobserved\tcount\n";
  for (const auto& e : entries()) out << e.correct << '\t' << e.observed << '\t' << e.count << '\n';
}

ConfusionTable ConfusionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  ConfusionTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (++lineno == 1) continue;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw DataError(path.string() + " line " + std::to_string(lineno) + ": expected 3 fields");
    try {
      t.add(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), std::stoull(line.substr(t2 + 1)));
    } catch (const std::logic_error&) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": bad count");
    }
  }
  return t;
}

ConfusionTable mine_confusions(std::span<const ScoredSentencePair> pairs, std::size_t max_block_chars) {
  constexpr std::size_t kMaxGapBytes = 256;
  auto cps = [](const std::string& s) { return split_codepoints(s).cps.size(); };
  ConfusionTable t;
  for (const auto& p : pairs) {
    if (p.tie) continue;
    const std::string loser = loser_gap_text(p), winner = winner_gap_text(p);
    if (loser.size() > kMaxGapBytes || winner.size() > kMaxGapBytes) continue;
    for (const auto& b : edit_blocks(loser, winner))
      if (cps(b.observed) <= max_block_chars && cps(b.correct) <= max_block_chars) t.add(b.correct, b.observed);
  }
  return t;
}

}  // namespace scanalign
