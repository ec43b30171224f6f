// Brute-force reference for quote classification: every start position,
// every window length, full Levenshtein tables, exhaustive ellipsis search.
// Shares only normalization with the library.
#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "qta/audit.hpp"
#include "qta/text.hpp"

namespace qta::oracle {

using audit::Thresholds;
using audit::Verdict;

inline const std::vector<std::string> kVocab = {
    "we", "want", "parents", "to", "attend", "group", "work", "but", "there's", "never", "any",
    "childcare", "school", "holidays", "I", "mean", "that", "again", "is", "a", "basic", "need",
    "provide", "and", "the", "it", "was", "really", "hard", "time", "wait", "list", "We", "The"};
inline const std::vector<std::string> kPunct = {",", ".", "...", "\xE2\x80\xA6", " \xE2\x80\x94", "?", " [...]", ". . ."};

inline bool is_letter(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }
inline char32_t toggle(char32_t c) {
  if (c >= U'a' && c <= U'z') return c - U'a' + U'A';
  if (c >= U'A' && c <= U'Z') return c - U'A' + U'a';
  return c;
}

inline bool match_at(const std::u32string& doc, std::size_t pos, const std::u32string& f) {
  if (f.empty() || pos + f.size() > doc.size()) return false;
  if (doc[pos] != f[0] && !(is_letter(f[0]) && toggle(doc[pos]) == f[0])) return false;
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (doc[pos + i] != f[i]) return false;
  }
  return true;
}

inline std::vector<std::u32string> split_dots(const std::u32string& q) {
  std::vector<std::u32string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = q.find(U"...", start);
    std::u32string piece = q.substr(start, p == std::u32string::npos ? std::u32string::npos : p - start);
    while (!piece.empty() && piece.front() == U' ') piece.erase(piece.begin());
    while (!piece.empty() && piece.back() == U' ') piece.pop_back();
    if (!piece.empty()) out.push_back(piece);
    if (p == std::u32string::npos) break;
    start = p + 3;
    // "...." is one separator, not a separator plus a fragment starting with ".".
    while (start < q.size() && q[start] == U'.') ++start;
  }
  return out;
}

inline bool chain(const std::u32string& doc, const std::vector<std::u32string>& f, std::size_t k,
           std::size_t prev_end, std::size_t gap) {
  if (k == f.size()) return true;
  const std::size_t lo = k == 0 ? 0 : prev_end;
  const std::size_t hi = k == 0 ? doc.size() : std::min(doc.size(), prev_end + gap + 1);
  for (std::size_t p = lo; p < hi; ++p) {
    if (match_at(doc, p, f[k]) && chain(doc, f, k + 1, p + f[k].size(), gap)) return true;
  }
  return false;
}

inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline bool similar(std::size_t d, std::size_t L, std::size_t w, double t) {
  return 1.0 - static_cast<double>(d) / static_cast<double>(std::max(L, w)) >= t - 1e-9;
}

// Any window of length in [3L/4 rounded up, 5L/4] at any start.
inline bool any_window(const std::u32string& doc, const std::u32string& q, double t) {
  const std::size_t L = q.size();
  const std::size_t lo = std::max<std::size_t>(1, (3 * L + 3) / 4);
  const std::size_t hi = 5 * L / 4;
  std::vector<std::size_t> col(L + 1);
  for (std::size_t s = 0; s + lo <= doc.size(); ++s) {
    // D[i][w] for the window doc[s, s+w), filled column by column.
    for (std::size_t i = 0; i <= L; ++i) col[i] = i;
    for (std::size_t w = 1; w <= hi && s + w <= doc.size(); ++w) {
      std::size_t diag = col[0];
      col[0] = w;
      for (std::size_t i = 1; i <= L; ++i) {
        const std::size_t up = col[i];
        col[i] = std::min({col[i] + 1, col[i - 1] + 1, diag + (q[i - 1] == doc[s + w - 1] ? 0 : 1)});
        diag = up;
      }
      if (w >= lo && similar(col[L], L, w, t)) return true;
    }
  }
  return false;
}

inline Verdict oracle(const std::u32string& q, const std::vector<std::u32string>& docs, const Thresholds& t) {
  for (const auto& d : docs) {
    for (std::size_t p = 0; p < d.size(); ++p) {
      if (match_at(d, p, q)) return Verdict::verbatim;
    }
  }
  if (q.find(U"...") != std::u32string::npos) {
    const auto f = split_dots(q);
    if (f.size() >= 2) {
      for (const auto& d : docs) {
        if (chain(d, f, 0, 0, t.max_gap_chars)) return Verdict::modified_ellipsis;
      }
    }
  }
  for (const auto& d : docs) {
    if (any_window(d, q, t.edit_threshold)) return Verdict::modified_edit;
  }
  return Verdict::fabricated;
}

struct Gen {
  std::mt19937_64 rng;
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng() % n); }

  std::string document(std::size_t target_bytes) {
    std::string s;
    while (s.size() < target_bytes) {
      if (!s.empty()) s += below(12) == 0 ? "\n" : " ";
      s += kVocab[below(kVocab.size())];
      if (below(6) == 0) s += kPunct[below(kPunct.size())];
    }
    return s;
  }

  // Canonical substring of doc, 8..32 code points, as UTF-8.
  std::u32string piece(const std::u32string& doc, std::size_t min_len, std::size_t max_len, std::size_t from = 0) {
    if (doc.size() <= from + min_len) return doc.substr(from);
    const std::size_t len = min_len + below(max_len - min_len + 1);
    const std::size_t start = from + below(doc.size() - from - min_len);
    return doc.substr(start, std::min(len, doc.size() - start));
  }

  std::u32string edit(std::u32string s) {
    const std::size_t n = 1 + below(6);
    for (std::size_t k = 0; k < n && !s.empty(); ++k) {
      const std::size_t p = below(s.size());
      switch (below(3)) {
        case 0: s[p] = U"xyz,.!"[below(6)]; break;
        case 1: s.erase(p, 1); break;
        default: s.insert(s.begin() + static_cast<long>(p), U"qk ,"[below(4)]);
      }
    }
    return s;
  }

  std::string quote(const std::vector<std::u32string>& docs) {
    const auto& d = docs[below(docs.size())];
    std::u32string q;
    switch (below(6)) {
      case 0: {
        q = piece(d, 8, 32);
        if (!q.empty() && below(2)) q[0] = toggle(q[0]);
        break;
      }
      case 1:
      case 2: {
        const std::size_t parts = 2 + below(2);
        std::size_t from = 0;
        for (std::size_t k = 0; k < parts && from + 4 < d.size(); ++k) {
          const std::size_t len = 5 + below(12);
          const std::size_t start = std::min(d.size() - 1, from + below(std::min<std::size_t>(d.size() - from, below(2) ? 60 : 1500)));
          const std::u32string part = d.substr(start, len);
          if (!q.empty()) q += below(2) ? U" ... " : U"...";
          q += part;
          from = start + part.size();
        }
        if (below(4) == 0) q = edit(q);
        break;
      }
      case 3: q = edit(piece(d, 10, 32)); break;
      case 4: {
        const auto a = piece(d, 6, 14);
        const auto b = piece(d, 6, 14);
        q = b + U" ... " + a;
        break;
      }
      default: {
        const std::size_t words = 2 + below(6);
        for (std::size_t k = 0; k < words; ++k) {
          if (k) q += U' ';
          q += text::utf8_decode(kVocab[below(kVocab.size())]);
        }
      }
    }
    return text::utf8_encode(q);
  }
};

}  // namespace qta::oracle

namespace qta::oracle {

struct OracleRun {
  std::size_t corpora = 0;
  std::size_t quotes = 0;
  std::size_t max_corpus_bytes = 0;
  std::vector<std::string> disagreements;
  std::map<Verdict, std::size_t> seen;
  std::vector<std::string> span_problems;
};

// Random corpora of at most 5000 bytes, eight quotes each.
inline OracleRun run_oracle_comparison(int corpora, std::uint64_t seed) {
  Gen g{std::mt19937_64(seed)};
  OracleRun run;
  for (int c = 0; c < corpora; ++c) {
    const std::size_t n_docs = 1 + g.below(3);
    std::size_t budget = 5000;
    std::vector<Document> docs;
    for (std::size_t k = 0; k < n_docs; ++k) {
      const std::size_t bytes = std::min<std::size_t>(budget - 40, 150 + g.below(1600));
      std::string t = g.document(bytes);
      if (t.size() > budget) t.resize(budget);
      budget -= t.size();
      docs.push_back({"d" + std::to_string(k), "g", t, text::word_count(t)});
      if (budget < 200) break;
    }
    const Corpus corpus(docs);
    std::size_t bytes = 0;
    for (const auto& d : corpus.documents()) bytes += d.text.size();
    run.max_corpus_bytes = std::max(run.max_corpus_bytes, bytes);
    const audit::AuditIndex index(corpus);
    std::vector<std::u32string> canon;
    for (const auto& e : index.entries()) canon.push_back(e.text.text);
    Thresholds t;
    t.max_gap_chars = std::vector<std::size_t>{1000, 40, 300}[g.below(3)];
    t.edit_threshold = std::vector<double>{0.85, 0.85, 0.7, 0.95}[g.below(4)];
    ++run.corpora;
    for (int k = 0; k < 8; ++k) {
      const std::string q = g.quote(canon);
      const std::u32string qq = audit::prepare_quote(q);
      if (qq.empty()) continue;
      ++run.quotes;
      const auto got = audit::classify_quote(q, index, t);
      const Verdict want = oracle(qq, canon, t);
      ++run.seen[want];
      const std::string where = "corpus " + std::to_string(c) + " quote [" + q + "]";
      if (got.verdict != want) {
        run.disagreements.push_back(where + ": got " + std::string(audit::to_string(got.verdict)) +
                                    ", oracle " + std::string(audit::to_string(want)));
        continue;
      }
      if (want == Verdict::fabricated) continue;
      const auto& doc = canon.at(std::stoul(got.matched_doc.value_or("d0").substr(1)));
      if (want == Verdict::modified_edit) {
        const auto sp = got.spans.at(0);
        const auto win = doc.substr(sp.begin, sp.end - sp.begin);
        if (!similar(levenshtein(qq, win), qq.size(), win.size(), t.edit_threshold) ||
            win.size() < audit::min_window(qq.size()) || win.size() > audit::max_window(qq.size())) {
          run.span_problems.push_back(where);
        }
        continue;
      }
      const auto frags = want == Verdict::verbatim ? std::vector<std::u32string>{qq} : split_dots(qq);
      if (got.spans.size() != frags.size()) {
        run.span_problems.push_back(where);
        continue;
      }
      for (std::size_t f = 0; f < frags.size(); ++f) {
        const bool ok = match_at(doc, got.spans[f].begin, frags[f]) &&
                        got.spans[f].end - got.spans[f].begin == frags[f].size() &&
                        (f == 0 || (got.spans[f].begin >= got.spans[f - 1].end &&
                                    got.spans[f].begin - got.spans[f - 1].end <= t.max_gap_chars));
        if (!ok) run.span_problems.push_back(where);
      }
    }
  }
  return run;
}

}  // namespace qta::oracle
