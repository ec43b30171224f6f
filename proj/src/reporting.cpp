#include "qta/reporting.hpp"

#include <cstdio>
#include <map>
#include <stdexcept>

namespace qta {

using nlohmann::json;

namespace {

std::string plural(std::size_t n, const char* one, const char* many) {
  return std::to_string(n) + " " + (n == 1 ? one : many);
}

std::string audit_sentence(const audit::AuditSummary& s) {
  const auto p = s.percentages();
  const auto c = s.counts();
  return plural(c.total(), "quote", "quotes") + " audited against the transcripts: " +
         std::to_string(c.verbatim) + " verbatim (" + format_percent(p.verbatim) + "), " +
         std::to_string(c.modified) + " modified (" + format_percent(p.modified) + ", " +
         std::to_string(s.modified_ellipsis) + " by ellipsis), " + std::to_string(c.fabricated) +
         " fabricated (" + format_percent(p.fabricated) + "). Details in report/audit.md.";
}

}  // namespace

std::vector<CoreqItem> coreq_report(const CoreqInputs& in) {
  std::vector<CoreqItem> items;
  std::string coders = "1 hybrid artificial system";
  if (in.human_reviewers > 0) {
    coders += " with human review (" + plural(in.human_reviewers, "reviewer", "reviewers") + ", " +
              plural(in.human_actions, "recorded action", "recorded actions") + ")";
  }
  items.push_back({24, "Number of data coders", coders});
  items.push_back({25, "Description of the coding tree",
                   "Coding tree exported to " + in.coding_tree_ref +
                       " (themes, codes, quotes and sources)."});
  items.push_back({26, "Derivation of themes", "Inductive"});
  items.push_back({27, "Software", in.model + ", via API"});
  items.push_back({28, "Participant checking",
                   in.participant_checking.empty() ? "Not reported" : in.participant_checking});
  items.push_back({29, "Quotations presented", in.audit ? audit_sentence(*in.audit) : "not audited"});
  items.push_back({30, "Data and findings consistent",
                   std::to_string(in.total_codes) + " initial codes reduced to " +
                       std::to_string(in.unique_codes) +
                       " unique codes; every unique code keeps its quotes and source documents."});
  items.push_back({31, "Clarity of major themes",
                   plural(in.theme_count, "theme", "themes") + " with names and descriptions in " +
                       in.themes_ref + "."});
  std::string minor = plural(in.unassigned, "code", "codes") + " not grouped in any theme";
  if (in.subtheme_count) {
    minor += "; " + plural(*in.subtheme_count, "sub-theme", "sub-themes") + " in the hierarchy";
  }
  items.push_back({32, "Clarity of minor themes", minor + "."});
  for (auto& item : items) {
    auto it = in.overrides.find(item.number);
    if (it != in.overrides.end() && !it->second.empty()) item.text = it->second;
  }
  return items;
}

std::string render_coreq_markdown(std::span<const CoreqItem> items) {
  Table t{{"No", "Item", "Reflection"}, {}};
  for (const auto& i : items) t.rows.push_back({std::to_string(i.number), i.topic, i.text});
  return "# COREQ items 24-32\n\n" + render_table(t, TableFormat::markdown) +
         "\nOnly the analysis and reporting items are covered; the other COREQ domains are out of "
         "scope for this tool. Page numbers are replaced by references to the artifacts above.\n";
}

std::size_t CodingTree::leaf_count() const {
  std::size_t n = 0;
  for (const auto& t : themes) {
    for (const auto& c : t.codes) n += c.quotes.size();
  }
  return n;
}

CodingTree build_coding_tree(const ThemeSet& themes, std::span<const UniqueCode> codes,
                             std::span<const audit::QuoteAuditRecord> records) {
  std::map<std::string, audit::Verdict> verdicts;
  for (const auto& r : records) verdicts.emplace(r.code_ref, r.verdict);
  CodingTree tree;
  for (const auto& t : themes.themes) {
    ThemeNode node{t.id, t.name, {}};
    for (std::size_t i : t.code_indices) {
      if (i >= codes.size()) continue;
      const UniqueCode& c = codes[i];
      CodeNode cn{i, c.code_name, {}};
      for (std::size_t k = 0; k < c.quotes.size(); ++k) {
        QuoteLeaf leaf{c.members[k], c.quotes[k].quote, c.quotes[k].source_doc, std::nullopt};
        if (auto it = verdicts.find(c.members[k]); it != verdicts.end()) leaf.verdict = it->second;
        cn.quotes.push_back(std::move(leaf));
      }
      node.codes.push_back(std::move(cn));
    }
    tree.themes.push_back(std::move(node));
  }
  tree.unassigned = themes.unassigned;
  return tree;
}

std::string render_coding_tree_markdown(const CodingTree& tree, std::span<const UniqueCode> codes) {
  std::string out = "# Coding tree\n";
  for (const auto& t : tree.themes) {
    out += "\n## " + t.id + " " + t.name + "\n";
    for (const auto& c : t.codes) {
      out += "\n- [" + std::to_string(c.index) + "] " + c.name + "\n";
      for (const auto& q : c.quotes) {
        out += "  - \"" + q.quote + "\" (" + q.source + "; " +
               (q.verdict ? std::string(audit::to_string(*q.verdict)) : std::string("not audited")) +
               ")\n";
      }
    }
  }
  if (!tree.unassigned.empty()) {
    out += "\n## Unassigned codes\n\n";
    for (std::size_t i : tree.unassigned) {
      out += "- [" + std::to_string(i) + "] " + (i < codes.size() ? codes[i].code_name : "?") + "\n";
    }
  }
  return out;
}

json to_json(const CodingTree& tree) {
  json themes = json::array();
  for (const auto& t : tree.themes) {
    json codes = json::array();
    for (const auto& c : t.codes) {
      json quotes = json::array();
      for (const auto& q : c.quotes) {
        quotes.push_back({{"member", q.member},
                          {"quote", q.quote},
                          {"source", q.source},
                          {"verdict", q.verdict ? json(audit::to_string(*q.verdict)) : json(nullptr)}});
      }
      codes.push_back({{"index", c.index}, {"name", c.name}, {"quotes", quotes}});
    }
    themes.push_back({{"id", t.id}, {"name", t.name}, {"codes", codes}});
  }
  return {{"themes", themes}, {"unassigned", tree.unassigned}, {"leaf_count", tree.leaf_count()}};
}

TableFormat parse_table_format(std::string_view s) {
  if (s == "markdown" || s == "md") return TableFormat::markdown;
  if (s == "csv") return TableFormat::csv;
  if (s == "json") return TableFormat::json;
  throw std::invalid_argument("unknown table format: " + std::string(s));
}

std::string_view extension(TableFormat f) {
  switch (f) {
    case TableFormat::markdown: return "md";
    case TableFormat::csv: return "csv";
    case TableFormat::json: return "json";
  }
  return "md";
}

namespace {

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') {
      out += "\\|";
    } else if (c == '\n') {
      out += ' ';
    } else {
      out += c;
    }
  }
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_table(const Table& t, TableFormat f) {
  std::string out;
  switch (f) {
    case TableFormat::markdown: {
      const auto row = [&](const std::vector<std::string>& cells) {
        out += "|";
        for (const auto& c : cells) out += " " + md_cell(c) + " |";
        out += "\n";
      };
      row(t.headers);
      out += "|";
      for (std::size_t i = 0; i < t.headers.size(); ++i) out += " --- |";
      out += "\n";
      for (const auto& r : t.rows) row(r);
      return out;
    }
    case TableFormat::csv: {
      const auto row = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_cell(cells[i]);
        out += "\n";
      };
      row(t.headers);
      for (const auto& r : t.rows) row(r);
      return out;
    }
    case TableFormat::json: {
      json rows = json::array();
      for (const auto& r : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < t.headers.size() && i < r.size(); ++i) obj[t.headers[i]] = r[i];
        rows.push_back(std::move(obj));
      }
      return json{{"columns", t.headers}, {"rows", rows}}.dump(2) + "\n";
    }
  }
  throw std::invalid_argument("unknown table format");
}

std::string format_percent(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", pct);
  return buf;
}

Table theme_table(const ThemeSet& s) {
  Table t{{"ID", "Theme name", "Description", "Nr of Codes in the theme"}, {}};
  for (const auto& th : s.themes) {
    t.rows.push_back({th.id, th.name, th.description, std::to_string(th.code_indices.size())});
  }
  return t;
}

Table hierarchy_table(const ThemeHierarchy& h) {
  Table t{{"ID", "Theme", "Description", "Sub-themes"}, {}};
  for (const auto& p : h.parents) {
    std::string subs;
    for (std::size_t i : p.subtheme_indices) {
      if (!subs.empty()) subs += "; ";
      subs += "[" + std::to_string(i) + "]";
      if (i < h.subthemes.themes.size()) subs += " " + h.subthemes.themes[i].name;
    }
    t.rows.push_back({p.id, p.name, p.description, subs});
  }
  return t;
}

Table audit_table(const audit::AuditSummary& s) {
  const auto c = s.counts();
  const auto p = s.percentages();
  Table t{{"Quotes", "n", "%"}, {}};
  t.rows.push_back({"Verbatim", std::to_string(c.verbatim), format_percent(p.verbatim)});
  t.rows.push_back({"Modified", std::to_string(c.modified), format_percent(p.modified)});
  t.rows.push_back({"Fabricated", std::to_string(c.fabricated), format_percent(p.fabricated)});
  t.rows.push_back({"Total", std::to_string(c.total()), c.total() ? "100.0%" : format_percent(0.0)});
  return t;
}

Table comparison_table(const audit::AuditSummary& staged, const audit::AuditSummary& baseline) {
  const auto sc = staged.counts();
  const auto bc = baseline.counts();
  const auto sp = staged.percentages();
  const auto bp = baseline.percentages();
  // Counts for both runs first, then percentages.
  Table t{{"Quotes", "Staged n", "Baseline n", "Staged %", "Baseline %"}, {}};
  t.rows.push_back({"Verbatim", std::to_string(sc.verbatim), std::to_string(bc.verbatim),
                    format_percent(sp.verbatim), format_percent(bp.verbatim)});
  t.rows.push_back({"Modified", std::to_string(sc.modified), std::to_string(bc.modified),
                    format_percent(sp.modified), format_percent(bp.modified)});
  t.rows.push_back({"Fabricated", std::to_string(sc.fabricated), std::to_string(bc.fabricated),
                    format_percent(sp.fabricated), format_percent(bp.fabricated)});
  return t;
}

Table saturation_table(const SaturationReport& r) {
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.3f", r.ratio);
  Table t{{"Total codes", "Unique codes", "Ratio", "Rounds"}, {}};
  t.rows.push_back({std::to_string(r.total_codes), std::to_string(r.unique_codes), ratio,
                    std::to_string(r.rounds)});
  return t;
}

}  // namespace qta
