#include "scanalign/dedup.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "scanalign/errors.hpp"
#include "scanalign/parallel.hpp"
#include "scanalign/text.hpp"
#include "scanalign/union_find.hpp"

namespace scanalign {

std::vector<std::string> default_anthology_patterns() {
  return {"works",
          "the works",
          "complete works",
          "the complete works",
          "collected works",
          "the collected works",
          "select works",
          "the select works",
          "the poetical works",
          "the complete writings of",
          "the writings of",
          "complete writings of",
          "the novels of",
          "novels of",
          "the complete novels of",
          "the novels and tales of",
          "the novels and stories of"};
}

std::vector<std::string> load_anthology_patterns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open anthology pattern file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    out.push_back(line.substr(b));
  }
  return out;
}

FiveGramSet build_fivegrams(const Book& book) {
  FiveGramSet out{book.id(), {}};
  const auto& toks = book.tokens();
  if (toks.size() < 5) return out;
  std::vector<std::string> folded;
  folded.reserve(toks.size());
  for (const auto& t : toks) folded.push_back(text::fold_case(t.text));
  out.grams.reserve(toks.size() - 4);
  std::string key;
  for (std::size_t i = 0; i + 5 <= folded.size(); ++i) {
    key.clear();
    for (std::size_t k = 0; k < 5; ++k) {
      if (k) key.push_back('\x1f');
      key += folded[i + k];
    }
    out.grams.push_back(stable_hash(key));
  }
  std::sort(out.grams.begin(), out.grams.end());
  out.grams.erase(std::unique(out.grams.begin(), out.grams.end()), out.grams.end());
  return out;
}

double overlap(const FiveGramSet& a, const FiveGramSet& b, OverlapMetric metric) {
  if (a.grams.empty() || b.grams.empty()) return 0.0;
  std::size_t common = 0;
  auto i = a.grams.begin();
  auto j = b.grams.begin();
  while (i != a.grams.end() && j != b.grams.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const double denom = metric == OverlapMetric::jaccard
                           ? static_cast<double>(a.grams.size() + b.grams.size() - common)
                           : static_cast<double>(std::min(a.grams.size(), b.grams.size()));
  return static_cast<double>(common) / denom;
}

std::string normalize_author(std::string_view author) {
  const std::string folded = text::fold_case(author);
  std::string out;
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < folded.size()) {
    const std::size_t start = pos;
    const char32_t c = text::next_codepoint(folded, pos);
    if (text::is_space(c)) {
      pending_space = !out.empty();
    } else if (text::is_alpha(c) || text::is_digit(c)) {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.append(folded, start, pos - start);
    }
  }
  return out;
}

BookIndex index_books(std::span<const Book> books) {
  BookIndex idx;
  for (const auto& b : books) idx.emplace(b.id(), &b);
  return idx;
}

namespace {

std::string set_label(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "set-%06zu", n);
  return buf;
}

// Connected components over `nodes` with an edge wherever `linked(i, j)`.
template <typename Linked>
std::vector<std::vector<std::size_t>> components_of(std::size_t n, Linked&& linked) {
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (linked(i, j)) uf.unite(i, j);
  return uf.components();
}

std::vector<std::string> title_words(std::string_view title) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(title))
    if (t.is_word) out.push_back(text::fold_case(t.text));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool share_any(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else return true;
  }
  return false;
}

// Members of one duplicate set with their five-grams and pairwise links.
struct SetGraph {
  std::vector<const Book*> books;
  std::vector<std::vector<char>> linked;
};

SetGraph build_set_graph(const DuplicateSet& set, const BookIndex& index, const DedupConfig& config) {
  SetGraph g;
  for (const auto& id : set.member_book_ids) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("duplicate set " + set.set_id + " names unknown book " + id);
    g.books.push_back(it->second);
  }
  const std::size_t n = g.books.size();
  std::vector<FiveGramSet> grams(n);
  parallel_for(n, [&](std::size_t i) { grams[i] = build_fivegrams(*g.books[i]); });
  g.linked.assign(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      g.linked[i][j] = g.linked[j][i] = overlap(grams[i], grams[j], config.metric) >= config.threshold;
  return g;
}

}  // namespace

std::vector<DuplicateSet> cluster(std::span<const Book> books, const DedupConfig& config) {
  std::vector<FiveGramSet> grams(books.size());
  parallel_for(books.size(), [&](std::size_t i) { grams[i] = build_fivegrams(books[i]); });

  std::map<std::string, std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < books.size(); ++i) blocks[normalize_author(books[i].meta().author)].push_back(i);

  UnionFind uf(books.size());
  for (const auto& [author, members] : blocks) {
    const std::size_t m = members.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t x = 0; x < m; ++x)
      for (std::size_t y = x + 1; y < m; ++y) pairs.emplace_back(members[x], members[y]);
    std::vector<char> edge(pairs.size(), 0);
    parallel_for(pairs.size(), [&](std::size_t k) {
      edge[k] = overlap(grams[pairs[k].first], grams[pairs[k].second], config.metric) >= config.threshold;
    });
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (edge[k]) uf.unite(pairs[k].first, pairs[k].second);
  }

  std::vector<DuplicateSet> out;
  for (const auto& comp : uf.components()) {
    DuplicateSet s;
    for (std::size_t i : comp) s.member_book_ids.push_back(books[i].id());
    std::sort(s.member_book_ids.begin(), s.member_book_ids.end());
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const DuplicateSet& a, const DuplicateSet& b) {
    return a.member_book_ids.front() < b.member_book_ids.front();
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].set_id = set_label(i + 1);
  return out;
}

bool title_matches_anthology_pattern(std::string_view title, std::span<const std::string> patterns) {
  const std::string t = text::fold_case(title);
  std::size_t skip = t.find_first_not_of(" \t");
  if (skip == std::string::npos) return false;
  const std::string_view tv = std::string_view(t).substr(skip);
  for (const auto& raw : patterns) {
    const std::string p = text::fold_case(raw);
    if (p.empty() || !tv.starts_with(p)) continue;
    if (tv.size() == p.size()) return true;
    // Word boundary after the pattern: "Works of" but not "Worksop".
    std::size_t pos = p.size();
    const char32_t next = text::next_codepoint(tv, pos);
    if (!text::is_alpha(next) && !text::is_digit(next)) return true;
    if (!text::is_alpha(p.back())) return true;
  }
  return false;
}

std::vector<DuplicateSet> filter_anthologies(const DuplicateSet& set, const BookIndex& books,
                                             const DedupConfig& config) {
  DuplicateSet base = set;
  std::sort(base.member_book_ids.begin(), base.member_book_ids.end());
  if (base.member_book_ids.size() < 2) {
    base.set_id = set.set_id + ".1";
    return {base};
  }

  const SetGraph g = build_set_graph(base, books, config);
  const std::size_t n = g.books.size();
  std::vector<std::vector<std::string>> titles(n);
  for (std::size_t i = 0; i < n; ++i) titles[i] = title_words(g.books[i]->meta().title);

  std::vector<char> anthology(n, 0);
  for (std::size_t x = 0; x < n; ++x) {
    if (title_matches_anthology_pattern(g.books[x]->meta().title, config.anthology_patterns)) {
      anthology[x] = 1;
      continue;
    }
    for (std::size_t y = 0; y < n && !anthology[x]; ++y) {
      if (y == x || !g.linked[x][y]) continue;
      if (!share_any(titles[x], titles[y]) && g.books[x]->token_count() > g.books[y]->token_count())
        anthology[x] = 1;
    }
  }
  if (std::all_of(anthology.begin(), anthology.end(), [](char a) { return a != 0; })) {
    // Keep the shortest book so the set stays non-empty.
    std::size_t keep = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (g.books[i]->token_count() < g.books[keep]->token_count()) keep = i;
    anthology[keep] = 0;
  }

  std::vector<std::size_t> survivors;
  std::vector<std::string> removed;
  for (std::size_t i = 0; i < n; ++i) {
    if (anthology[i]) removed.push_back(g.books[i]->id());
    else survivors.push_back(i);
  }
  const auto comps = components_of(survivors.size(), [&](std::size_t a, std::size_t b) {
    return g.linked[survivors[a]][survivors[b]] != 0;
  });

  std::vector<DuplicateSet> out;
  for (const auto& comp : comps) {
    DuplicateSet s;
    for (std::size_t k : comp) s.member_book_ids.push_back(g.books[survivors[k]]->id());
    out.push_back(std::move(s));
  }
  out.front().anthology_book_ids = std::move(removed);
  for (const auto& id : base.anthology_book_ids) out.front().anthology_book_ids.push_back(id);
  std::sort(out.front().anthology_book_ids.begin(), out.front().anthology_book_ids.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].set_id = set.set_id + "." + std::to_string(i + 1);
  return out;
}

std::vector<DuplicateSet> dedup_corpus(std::span<const Book> books, const DedupConfig& config) {
  const BookIndex index = index_books(books);
  std::vector<DuplicateSet> out;
  for (const auto& set : cluster(books, config))
    for (auto& piece : filter_anthologies(set, index, config)) out.push_back(std::move(piece));
  std::sort(out.begin(), out.end(), [](const DuplicateSet& a, const DuplicateSet& b) {
    return a.member_book_ids.front() < b.member_book_ids.front();
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].set_id = set_label(i + 1);
  return out;
}

}  // namespace scanalign
