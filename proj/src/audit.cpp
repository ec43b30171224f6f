#include "qta/audit.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include "qta/text.hpp"

namespace qta::audit {

using nlohmann::json;

namespace {

constexpr std::u32string_view kEllipsis = U"...";

bool is_unicode_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

// Character-level mapping: one code point in, zero or more out.
void map_char(char32_t c, std::size_t offset, std::u32string& out, std::vector<std::size_t>& map) {
  auto emit = [&](char32_t x) {
    out.push_back(x);
    map.push_back(offset);
  };
  if (is_unicode_space(c)) return emit(U' ');
  switch (c) {
    case 0x2018: case 0x2019: case 0x201A: case 0x201B: return emit(U'\'');
    case 0x201C: case 0x201D: case 0x201E: case 0x201F: return emit(U'"');
    case 0x2012: case 0x2013: case 0x2014: case 0x2015: return emit(U'-');
    case 0x2026:
      emit(U'.'), emit(U'.'), emit(U'.');
      return;
    default: return emit(c);
  }
}

// One left-to-right rewrite pass; returns true when anything changed.
bool rewrite_pass(NormalizedText& t) {
  const std::u32string& s = t.text;
  std::u32string out;
  std::vector<std::size_t> map;
  out.reserve(s.size());
  map.reserve(s.size() + 1);
  bool changed = false;
  std::size_t i = 0;
  auto at = [&](std::size_t k, char32_t c) { return k < s.size() && s[k] == c; };
  while (i < s.size()) {
    if (s[i] == U' ') {
      out.push_back(U' ');
      map.push_back(t.span_map[i]);
      std::size_t j = i + 1;
      while (j < s.size() && s[j] == U' ') ++j;
      changed |= j > i + 1;
      i = j;
      continue;
    }
    if (at(i, U'[') && at(i + 1, U'.') && at(i + 2, U'.') && at(i + 3, U'.') && at(i + 4, U']')) {
      for (std::size_t k : {i, i + 2, i + 3}) {
        out.push_back(U'.');
        map.push_back(t.span_map[k]);
      }
      changed = true;
      i += 5;
      continue;
    }
    if (at(i, U'.') && at(i + 1, U' ') && at(i + 2, U'.') && at(i + 3, U' ') && at(i + 4, U'.')) {
      for (std::size_t k : {i, i + 2, i + 4}) {
        out.push_back(U'.');
        map.push_back(t.span_map[k]);
      }
      changed = true;
      i += 5;
      continue;
    }
    out.push_back(s[i]);
    map.push_back(t.span_map[i]);
    ++i;
  }
  map.push_back(t.span_map.back());
  t.text = std::move(out);
  t.span_map = std::move(map);
  return changed;
}

bool is_ascii_letter(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }

char32_t toggle_case(char32_t c) {
  if (c >= U'a' && c <= U'z') return c - U'a' + U'A';
  if (c >= U'A' && c <= U'Z') return c - U'A' + U'a';
  return c;
}

std::u32string_view trim_spaces(std::u32string_view s) {
  while (!s.empty() && s.front() == U' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == U' ') s.remove_suffix(1);
  return s;
}

// Every start position of `fragment` in `haystack`, ascending.
std::vector<std::size_t> all_occurrences(std::u32string_view haystack,
                                         std::u32string_view fragment) {
  std::vector<std::size_t> out;
  std::size_t pos = find_fragment(haystack, fragment, 0);
  while (pos != std::u32string_view::npos) {
    out.push_back(pos);
    pos = find_fragment(haystack, fragment, pos + 1);
  }
  return out;
}

std::optional<std::vector<Span>> match_fragments(std::u32string_view doc,
                                                 const std::vector<std::u32string>& frags,
                                                 std::size_t max_gap) {
  // reachable[k][m]: occurrence m of fragment k ends a valid chain of
  // fragments 0..k. `prev` keeps the chosen predecessor for evidence.
  std::vector<std::vector<std::size_t>> occ(frags.size());
  for (std::size_t k = 0; k < frags.size(); ++k) {
    occ[k] = all_occurrences(doc, frags[k]);
    if (occ[k].empty()) return std::nullopt;
  }
  std::vector<std::vector<long>> prev(frags.size());
  prev[0].assign(occ[0].size(), -1);
  std::vector<std::vector<bool>> ok(frags.size());
  ok[0].assign(occ[0].size(), true);
  for (std::size_t k = 1; k < frags.size(); ++k) {
    ok[k].assign(occ[k].size(), false);
    prev[k].assign(occ[k].size(), -1);
    const std::size_t plen = frags[k - 1].size();
    // Latest reachable predecessor whose end is <= p, scanned monotonically.
    long best = -1;
    std::size_t m_prev = 0;
    for (std::size_t m = 0; m < occ[k].size(); ++m) {
      const std::size_t p = occ[k][m];
      while (m_prev < occ[k - 1].size() && occ[k - 1][m_prev] + plen <= p) {
        if (ok[k - 1][m_prev]) best = static_cast<long>(m_prev);
        ++m_prev;
      }
      if (best >= 0) {
        const std::size_t prev_end = occ[k - 1][static_cast<std::size_t>(best)] + plen;
        if (p - prev_end <= max_gap) {
          ok[k][m] = true;
          prev[k][m] = best;
        }
      }
    }
  }
  const std::size_t last = frags.size() - 1;
  for (std::size_t m = 0; m < occ[last].size(); ++m) {
    if (!ok[last][m]) continue;
    std::vector<Span> spans(frags.size());
    long cur = static_cast<long>(m);
    for (std::size_t k = frags.size(); k-- > 0;) {
      const std::size_t p = occ[k][static_cast<std::size_t>(cur)];
      spans[k] = {p, p + frags[k].size()};
      cur = prev[k][static_cast<std::size_t>(cur)];
    }
    return spans;
  }
  return std::nullopt;
}

struct WindowHit {
  double similarity = -1.0;
  std::size_t doc = 0;
  Span span;
};

// Distances d(quote, text[end-k, end)) for k = 0..max_len via reversed DP.
std::vector<std::size_t> suffix_distances(std::u32string_view quote, std::u32string_view text,
                                          std::size_t end, std::size_t max_len) {
  const std::size_t n = std::min(max_len, end);
  std::vector<std::size_t> row(n + 1);
  for (std::size_t k = 0; k <= n; ++k) row[k] = k;
  for (std::size_t i = 1; i <= quote.size(); ++i) {
    const char32_t qc = quote[quote.size() - i];
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t k = 1; k <= n; ++k) {
      const std::size_t up = row[k];
      const std::size_t sub = diag + (qc == text[end - k] ? 0 : 1);
      row[k] = std::min({sub, up + 1, row[k - 1] + 1});
      diag = up;
    }
  }
  return row;
}

void best_window_in(std::u32string_view quote, std::u32string_view doc, std::size_t doc_index,
                    double threshold, WindowHit& best) {
  const std::size_t len = quote.size();
  const std::size_t lo = min_window(len);
  const std::size_t hi = max_window(len);
  if (doc.size() < lo) return;
  // Sellers: column[i] = min distance of quote[0, i) to a substring ending here.
  std::vector<std::size_t> col(len + 1);
  for (std::size_t i = 0; i <= len; ++i) col[i] = i;
  std::size_t argmin_end = 0;
  std::size_t min_d = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> candidates;
  const double denom = static_cast<double>(std::max(len, hi));
  for (std::size_t j = 1; j <= doc.size(); ++j) {
    std::size_t diag = col[0];
    col[0] = 0;
    for (std::size_t i = 1; i <= len; ++i) {
      const std::size_t left = col[i];
      const std::size_t sub = diag + (quote[i - 1] == doc[j - 1] ? 0 : 1);
      col[i] = std::min({sub, left + 1, col[i - 1] + 1});
      diag = left;
    }
    if (j < lo) continue;
    const std::size_t d = col[len];
    if (d < min_d) {
      min_d = d;
      argmin_end = j;
    }
    // No window ending at j can beat this bound.
    if (1.0 - static_cast<double>(d) / denom >= threshold - 1e-9) candidates.push_back(j);
  }
  if (argmin_end != 0 &&
      (candidates.empty() || !std::binary_search(candidates.begin(), candidates.end(), argmin_end))) {
    candidates.insert(std::lower_bound(candidates.begin(), candidates.end(), argmin_end),
                      argmin_end);
  }
  for (std::size_t end : candidates) {
    const auto dist = suffix_distances(quote, doc, end, hi);
    for (std::size_t k = lo; k < dist.size(); ++k) {
      const double sim = edit_similarity(dist[k], len, k);
      if (sim > best.similarity) best = {sim, doc_index, {end - k, end}};
    }
  }
}

void fill_sources(QuoteAuditRecord& rec, const NormalizedText& doc) {
  rec.source_spans.clear();
  for (const Span& s : rec.spans) rec.source_spans.push_back({doc.span_map[s.begin], doc.source_end(s.end)});
}

}  // namespace

std::string NormalizedText::utf8() const { return text::utf8_encode(text); }

std::size_t NormalizedText::source_end(std::size_t end) const {
  if (end == 0) return span_map.front();
  std::size_t k = end;
  while (k < text.size() && span_map[k] == span_map[end - 1]) ++k;
  return span_map[k];
}

NormalizedText normalize(std::string_view utf8) {
  std::vector<std::size_t> offsets;
  const std::u32string decoded = text::utf8_decode(utf8, &offsets);
  NormalizedText t;
  t.text.reserve(decoded.size());
  t.span_map.reserve(decoded.size() + 1);
  for (std::size_t i = 0; i < decoded.size(); ++i) map_char(decoded[i], offsets[i], t.text, t.span_map);
  t.span_map.push_back(utf8.size());
  while (rewrite_pass(t)) {
  }
  return t;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::verbatim: return "verbatim";
    case Verdict::modified_ellipsis: return "modified_ellipsis";
    case Verdict::modified_edit: return "modified_edit";
    case Verdict::fabricated: return "fabricated";
  }
  return "fabricated";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "verbatim") return Verdict::verbatim;
  if (s == "modified_ellipsis") return Verdict::modified_ellipsis;
  if (s == "modified_edit") return Verdict::modified_edit;
  if (s == "fabricated") return Verdict::fabricated;
  throw std::invalid_argument("unknown verdict: " + std::string(s));
}

AuditIndex::AuditIndex(const Corpus& corpus) {
  entries_.reserve(corpus.size());
  for (const auto& d : corpus.documents()) entries_.push_back({d.id, normalize(d.text)});
}

std::u32string prepare_quote(std::string_view quote) {
  const NormalizedText n = normalize(quote);
  std::u32string_view q = trim_spaces(n.text);
  if (q.size() >= 2 && q.front() == U'"' && q.back() == U'"') {
    q = trim_spaces(q.substr(1, q.size() - 2));
  }
  return std::u32string(q);
}

std::size_t find_fragment(std::u32string_view haystack, std::u32string_view fragment,
                          std::size_t from) {
  if (fragment.empty()) return std::u32string_view::npos;
  std::size_t pos = haystack.find(fragment, from);
  if (is_ascii_letter(fragment.front())) {
    std::u32string alt(fragment);
    alt.front() = toggle_case(alt.front());
    pos = std::min(pos, haystack.find(alt, from));
  }
  return pos;
}

std::vector<std::u32string> ellipsis_fragments(std::u32string_view quote) {
  std::vector<std::u32string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = quote.find(kEllipsis, start);
    const auto piece = trim_spaces(quote.substr(start, pos == std::u32string_view::npos
                                                           ? std::u32string_view::npos
                                                           : pos - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (pos == std::u32string_view::npos) break;
    start = pos + kEllipsis.size();
    // Runs of four or more dots belong to the same ellipsis.
    while (start < quote.size() && quote[start] == U'.') ++start;
  }
  return out;
}

std::size_t edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t k = 0; k <= b.size(); ++k) row[k] = k;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t k = 1; k <= b.size(); ++k) {
      const std::size_t up = row[k];
      row[k] = std::min({diag + (a[i - 1] == b[k - 1] ? 0 : 1), up + 1, row[k - 1] + 1});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t min_window(std::size_t quote_len) { return std::max<std::size_t>(1, (3 * quote_len + 3) / 4); }

std::size_t max_window(std::size_t quote_len) { return (5 * quote_len) / 4; }

double edit_similarity(std::size_t distance, std::size_t quote_len, std::size_t window_len) {
  const std::size_t m = std::max(quote_len, window_len);
  if (m == 0) return 1.0;
  return 1.0 - static_cast<double>(distance) / static_cast<double>(m);
}

QuoteAuditRecord classify_quote(std::string_view quote, const AuditIndex& index,
                                const Thresholds& cfg) {
  const std::u32string q = prepare_quote(quote);
  if (q.empty()) throw std::invalid_argument("empty quote");
  QuoteAuditRecord rec;
  rec.quote = std::string(quote);
  const auto& docs = index.entries();

  for (const auto& d : docs) {
    const std::size_t pos = find_fragment(d.text.text, q);
    if (pos != std::u32string::npos) {
      rec.verdict = Verdict::verbatim;
      rec.matched_doc = d.id;
      rec.spans = {{pos, pos + q.size()}};
      rec.score = 1.0;
      fill_sources(rec, d.text);
      return rec;
    }
  }

  if (q.find(kEllipsis) != std::u32string::npos) {
    const auto frags = ellipsis_fragments(q);
    if (frags.size() >= 2) {
      for (const auto& d : docs) {
        if (auto spans = match_fragments(d.text.text, frags, cfg.max_gap_chars)) {
          rec.verdict = Verdict::modified_ellipsis;
          rec.matched_doc = d.id;
          rec.spans = std::move(*spans);
          rec.score = 1.0;
          fill_sources(rec, d.text);
          return rec;
        }
      }
    }
  }

  WindowHit best;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    best_window_in(q, docs[i].text.text, i, cfg.edit_threshold, best);
  }
  rec.score = std::max(0.0, best.similarity);
  if (best.similarity >= cfg.edit_threshold) {
    rec.verdict = Verdict::modified_edit;
    rec.matched_doc = docs[best.doc].id;
    rec.spans = {best.span};
    fill_sources(rec, docs[best.doc].text);
  } else {
    rec.verdict = Verdict::fabricated;
    if (best.similarity >= 0.0) {
      // Nearest window, kept as evidence for the analyst.
      rec.spans = {best.span};
      fill_sources(rec, docs[best.doc].text);
    }
  }
  return rec;
}

QuoteAuditRecord classify_quote(std::string_view quote, const Corpus& corpus,
                                const Thresholds& cfg) {
  if (corpus.empty()) throw std::invalid_argument("corpus is empty");
  return classify_quote(quote, AuditIndex(corpus), cfg);
}

Percentages percentages(const VerdictCounts& c) {
  const std::size_t total = c.total();
  if (total == 0) return {};
  const auto pct = [&](std::size_t n) {
    return 100.0 * static_cast<double>(n) / static_cast<double>(total);
  };
  return {pct(c.verbatim), pct(c.modified), pct(c.fabricated)};
}

AuditSummary summarize(std::span<const QuoteAuditRecord> records) {
  AuditSummary s;
  for (const auto& r : records) {
    switch (r.verdict) {
      case Verdict::verbatim: ++s.verbatim; break;
      case Verdict::modified_ellipsis: ++s.modified_ellipsis; break;
      case Verdict::modified_edit: ++s.modified_edit; break;
      case Verdict::fabricated: ++s.fabricated; break;
    }
  }
  s.sample_size = records.size();
  return s;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k > n) throw std::invalid_argument("sample size exceeds number of quotes");
  std::mt19937_64 rng(seed);
  // Unbiased bounded draw; std::uniform_int_distribution is not portable.
  const auto draw = [&](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = 0;
    do {
      r = rng();
    } while (r >= limit);
    return r % bound;
  };
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(draw(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

AuditResult audit_codeset(std::span<const QuoteItem> items, const Corpus& corpus,
                          std::optional<std::size_t> sample, std::uint64_t seed,
                          const Thresholds& cfg) {
  if (corpus.empty()) throw std::invalid_argument("corpus is empty");
  AuditResult result;
  result.sample = sample;
  result.seed = seed;
  if (sample) {
    result.sampled_indices = sample_indices(items.size(), *sample, seed);
  } else {
    result.sampled_indices.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) result.sampled_indices[i] = i;
  }
  const AuditIndex index(corpus);
  for (std::size_t i : result.sampled_indices) {
    QuoteAuditRecord rec = classify_quote(items[i].quote, index, cfg);
    rec.code_ref = items[i].code_ref;
    result.records.push_back(std::move(rec));
  }
  result.summary = summarize(result.records);
  return result;
}

std::vector<std::string> tokens(std::string_view s) {
  const std::string canonical = normalize(s).utf8();
  std::vector<std::string> out;
  std::string cur;
  const auto flush = [&] {
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    std::size_t b = 0;
    while (b < cur.size() && cur[b] == '\'') ++b;
    if (b < cur.size()) out.push_back(cur.substr(b));
    cur.clear();
  };
  for (char c : canonical) {
    const auto u = static_cast<unsigned char>(c);
    const bool word = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || u >= 0x80 || c == '\'';
    if (c >= 'A' && c <= 'Z') {
      cur.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (word) {
      cur.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

double token_overlap(std::string_view a, std::string_view b) {
  const auto ta = tokens(a);
  const auto tb = tokens(b);
  if (ta.empty() || tb.empty()) return 0.0;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : ta) ++counts[t];
  std::size_t shared = 0;
  for (const auto& t : tb) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++shared;
    }
  }
  return static_cast<double>(shared) / static_cast<double>(std::min(ta.size(), tb.size()));
}

std::vector<QuoteMatch> match_published_quotes(std::span<const std::string> system_quotes,
                                               std::span<const std::string> external_quotes,
                                               const Thresholds& cfg) {
  std::vector<QuoteMatch> out;
  for (std::size_t e = 0; e < external_quotes.size(); ++e) {
    if (tokens(external_quotes[e]).size() < kMinExternalQuoteWords) continue;
    for (std::size_t s = 0; s < system_quotes.size(); ++s) {
      const double score = token_overlap(system_quotes[s], external_quotes[e]);
      if (score >= cfg.match_threshold) out.push_back({s, e, score});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const QuoteMatch& a, const QuoteMatch& b) { return a.score > b.score; });
  return out;
}

json to_json(const QuoteAuditRecord& r) {
  json spans = json::array();
  for (const auto& s : r.spans) spans.push_back({s.begin, s.end});
  json sources = json::array();
  for (const auto& s : r.source_spans) sources.push_back({s.begin, s.end});
  return {{"code_ref", r.code_ref},
          {"quote", r.quote},
          {"verdict", to_string(r.verdict)},
          {"matched_doc", r.matched_doc ? json(*r.matched_doc) : json(nullptr)},
          {"spans", spans},
          {"source_spans", sources},
          {"score", r.score}};
}

QuoteAuditRecord record_from_json(const json& j) {
  QuoteAuditRecord r;
  r.code_ref = j.at("code_ref").get<std::string>();
  r.quote = j.at("quote").get<std::string>();
  r.verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (!j.at("matched_doc").is_null()) r.matched_doc = j.at("matched_doc").get<std::string>();
  for (const auto& s : j.at("spans")) r.spans.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
  for (const auto& s : j.at("source_spans")) {
    r.source_spans.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>()});
  }
  r.score = j.at("score").get<double>();
  return r;
}

json to_json(const AuditSummary& s) {
  const Percentages p = s.percentages();
  return {{"counts",
           {{"verbatim", s.verbatim},
            {"modified", s.modified_ellipsis + s.modified_edit},
            {"modified_ellipsis", s.modified_ellipsis},
            {"modified_edit", s.modified_edit},
            {"fabricated", s.fabricated}}},
          {"percentages",
           {{"verbatim", p.verbatim}, {"modified", p.modified}, {"fabricated", p.fabricated}}},
          {"ellipsis_share", s.ellipsis_share()},
          {"sample_size", s.sample_size}};
}

}  // namespace qta::audit
