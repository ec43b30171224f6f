#include "qta/theming.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "qta/error.hpp"
#include "qta/prompts.hpp"

namespace qta {

using nlohmann::json;

std::string render_code_list(std::span<const UniqueCode> codes) {
  std::string out;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out += "\n[" + std::to_string(i) + "] " + codes[i].code_name + ": " + codes[i].description;
  }
  return out;
}

namespace {

std::string str_field(const json& item, const char* key) {
  if (item.is_object() && item.contains(key) && item[key].is_string()) return item[key].get<std::string>();
  return {};
}

std::string theme_label(const std::string& prefix, std::size_t i) {
  return prefix + std::to_string(i);
}

}  // namespace

ThemeSet parse_themes(const json& reply, std::size_t n_items, const std::string& prefix,
                      const std::string& member_key) {
  if (!reply.is_object() || !reply.contains("themes") || !reply["themes"].is_array()) {
    throw MalformedOutputError("reply has no themes array", reply.dump());
  }
  ThemeSet set;
  std::vector<bool> seen(n_items, false);
  for (const auto& item : reply["themes"]) {
    Theme t;
    t.id = theme_label(prefix, set.themes.size() + 1);
    t.name = str_field(item, "name");
    t.description = str_field(item, "description");
    if (item.is_object() && item.contains(member_key) && item[member_key].is_array()) {
      for (const auto& v : item[member_key]) {
        long long idx = -1;
        if (v.is_number_integer()) {
          idx = v.get<long long>();
        } else if (v.is_string()) {
          try {
            idx = std::stoll(v.get<std::string>());
          } catch (const std::exception&) {
          }
        }
        if (idx < 0 || static_cast<std::size_t>(idx) >= n_items) {
          set.warnings.push_back(t.id + ": dropped out-of-range index " + v.dump());
          continue;
        }
        const auto u = static_cast<std::size_t>(idx);
        if (std::find(t.code_indices.begin(), t.code_indices.end(), u) != t.code_indices.end()) {
          set.warnings.push_back(t.id + ": repeated index " + std::to_string(u));
          continue;
        }
        t.code_indices.push_back(u);
        seen[u] = true;
      }
    }
    set.themes.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < n_items; ++i) {
    if (!seen[i]) set.unassigned.push_back(i);
  }
  return set;
}

namespace {

ThemeSet call_themes(std::span<const UniqueCode> codes, Gateway& gateway, const ThemingOptions& o,
                     CallLog* log) {
  static constexpr std::string_view kRequired[] = {"research_question", "list_of_unique_codes"};
  const std::string target = o.n_themes ? std::to_string(*o.n_themes) + " themes" : "themes";
  ChatRequest req;
  req.params = o.params;
  req.user_text = render(o.prompt_template,
                         {{"themes_target", target},
                          {"research_question", o.research_question},
                          {"list_of_unique_codes", render_code_list(codes)}},
                         kRequired);
  JsonReply reply;
  try {
    reply = gateway.complete_json(req, "themes", log);
  } catch (const MalformedOutputError& e) {
    throw StageError(std::string("theming: ") + e.what());
  }
  ThemeSet set;
  try {
    set = parse_themes(reply.value, codes.size(), o.id_prefix, "codes");
  } catch (const MalformedOutputError& e) {
    throw StageError(std::string("theming: ") + e.what());
  }
  if (o.strict_assign && !set.unassigned.empty()) {
    std::string missing;
    for (std::size_t i : set.unassigned) missing += (missing.empty() ? "" : ", ") + std::to_string(i);
    ChatRequest again = req;
    again.user_text += "\n\nThese codes were not assigned to any theme: [" + missing +
                       "]. Assign every code to at least one theme and return the complete JSON.";
    try {
      const JsonReply second = gateway.complete_json(again, "themes:strict-assign", log);
      ThemeSet retry = parse_themes(second.value, codes.size(), o.id_prefix, "codes");
      retry.warnings.insert(retry.warnings.begin(), "strict-assign re-prompt for " +
                                                        std::to_string(set.unassigned.size()) +
                                                        " unassigned codes");
      set = std::move(retry);
    } catch (const MalformedOutputError& e) {
      set.warnings.push_back(std::string("strict-assign re-prompt failed: ") + e.what());
    }
  }
  set.params_used = o.params;
  set.requested = o.n_themes;
  return set;
}

}  // namespace

ThemeSet generate_themes(std::span<const UniqueCode> codes, Gateway& gateway,
                         const ThemingOptions& options, CallLog* log) {
  if (codes.empty()) throw std::invalid_argument("no codes to group into themes");
  if (options.n_themes && *options.n_themes == 0) throw std::invalid_argument("theme count must be positive");
  return call_themes(codes, gateway, options, log);
}

AssignmentReport validate_assignment(const ThemeSet& s, std::size_t n_codes) {
  AssignmentReport r;
  std::vector<std::size_t> count(n_codes, 0);
  for (const auto& t : s.themes) {
    r.sizes.push_back(t.code_indices.size());
    for (std::size_t i : t.code_indices) {
      if (i >= n_codes) {
        r.out_of_range.emplace_back(t.id, i);
      } else {
        ++count[i];
      }
    }
  }
  for (std::size_t i = 0; i < n_codes; ++i) {
    if (count[i] == 0) r.unassigned.push_back(i);
    if (count[i] > 0) ++r.assigned_distinct;
    if (count[i] > 1) ++r.overlap_count;
  }
  return r;
}

ThemeHierarchy generate_hierarchy(std::span<const UniqueCode> codes, Gateway& gateway,
                                  const HierarchyOptions& o, CallLog* log) {
  if (o.n_sub == 0 || o.n_top == 0) throw std::invalid_argument("n_sub and n_top must be positive");
  ThemingOptions first = o.theming;
  first.n_themes = o.n_sub;
  first.id_prefix = "S";
  ThemeHierarchy h;
  h.subthemes = generate_themes(codes, gateway, first, log);
  // Sub-themes are addressed by position, matching the indices in the prompt.
  for (std::size_t i = 0; i < h.subthemes.themes.size(); ++i) h.subthemes.themes[i].id = "S" + std::to_string(i);

  static constexpr std::string_view kRequired[] = {"research_question", "list_of_subthemes"};
  std::string listing;
  for (std::size_t i = 0; i < h.subthemes.themes.size(); ++i) {
    const auto& t = h.subthemes.themes[i];
    listing += "\n[" + std::to_string(i) + "] " + t.name + ": " + t.description;
  }
  ChatRequest req;
  req.params = o.theming.params;
  req.user_text = render(o.subtheme_template,
                         {{"n_top", std::to_string(o.n_top)},
                          {"research_question", o.theming.research_question},
                          {"list_of_subthemes", listing}},
                         kRequired);
  ThemeSet parents;
  try {
    const JsonReply reply = gateway.complete_json(req, "hierarchy", log);
    parents = parse_themes(reply.value, h.subthemes.themes.size(), "H", "subthemes");
  } catch (const MalformedOutputError& e) {
    throw StageError(std::string("hierarchy: ") + e.what());
  }
  for (auto& t : parents.themes) {
    h.parents.push_back({t.id, t.name, t.description, std::move(t.code_indices), false});
  }
  h.warnings = std::move(parents.warnings);
  h.params_used = o.theming.params;
  h.validation = validate_hierarchy(h);
  return h;
}

HierarchyReport validate_hierarchy(const ThemeHierarchy& h) {
  HierarchyReport r;
  const std::size_t n = h.subthemes.themes.size();
  std::vector<std::size_t> count(n, 0);
  for (const auto& p : h.parents) {
    for (std::size_t i : p.subtheme_indices) {
      if (i < n) ++count[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (count[i] > 1) {
      r.duplicated.push_back(i);
      r.flags.push_back("duplicate sub-theme " + std::to_string(i));
    } else if (count[i] == 0) {
      r.orphaned.push_back(i);
      r.flags.push_back("unplaced sub-theme " + std::to_string(i));
    }
  }
  return r;
}

void promote_subtheme(ThemeHierarchy& h, std::size_t index) {
  if (index >= h.subthemes.themes.size()) {
    throw std::out_of_range("no sub-theme " + std::to_string(index));
  }
  for (auto& p : h.parents) {
    auto& v = p.subtheme_indices;
    v.erase(std::remove(v.begin(), v.end(), index), v.end());
  }
  std::erase_if(h.parents, [](const ParentTheme& p) { return p.subtheme_indices.empty(); });
  const Theme& s = h.subthemes.themes[index];
  std::size_t next = 1;
  std::set<std::string> ids;
  for (const auto& p : h.parents) ids.insert(p.id);
  while (ids.count("H" + std::to_string(next))) ++next;
  h.parents.push_back({"H" + std::to_string(next), s.name, s.description, {index}, true});
  h.validation = validate_hierarchy(h);
}

json to_json(const Theme& t) {
  return {{"id", t.id}, {"name", t.name}, {"description", t.description}, {"codes", t.code_indices}};
}

json to_json(const ThemeSet& s) {
  json themes = json::array();
  for (const auto& t : s.themes) themes.push_back(to_json(t));
  return {{"themes", themes},
          {"unassigned", s.unassigned},
          {"params_used", to_json(s.params_used)},
          {"requested", s.requested ? json(*s.requested) : json(nullptr)},
          {"warnings", s.warnings}};
}

ThemeSet themeset_from_json(const json& j) {
  ThemeSet s;
  for (const auto& t : j.at("themes")) {
    s.themes.push_back({t.at("id").get<std::string>(), t.at("name").get<std::string>(),
                        t.at("description").get<std::string>(),
                        t.at("codes").get<std::vector<std::size_t>>()});
  }
  s.unassigned = j.at("unassigned").get<std::vector<std::size_t>>();
  s.params_used = params_from_json(j.at("params_used"));
  if (j.contains("requested") && !j["requested"].is_null()) s.requested = j["requested"].get<std::size_t>();
  s.warnings = j.value("warnings", std::vector<std::string>{});
  return s;
}

json to_json(const ThemeHierarchy& h) {
  json parents = json::array();
  for (const auto& p : h.parents) {
    parents.push_back({{"id", p.id},
                       {"name", p.name},
                       {"description", p.description},
                       {"subthemes", p.subtheme_indices},
                       {"promoted", p.promoted}});
  }
  return {{"subthemes", to_json(h.subthemes)},
          {"parents", parents},
          {"params_used", to_json(h.params_used)},
          {"validation",
           {{"flags", h.validation.flags},
            {"duplicated", h.validation.duplicated},
            {"orphaned", h.validation.orphaned}}},
          {"warnings", h.warnings}};
}

ThemeHierarchy hierarchy_from_json(const json& j) {
  ThemeHierarchy h;
  h.subthemes = themeset_from_json(j.at("subthemes"));
  for (const auto& p : j.at("parents")) {
    h.parents.push_back({p.at("id").get<std::string>(), p.at("name").get<std::string>(),
                         p.at("description").get<std::string>(),
                         p.at("subthemes").get<std::vector<std::size_t>>(), p.value("promoted", false)});
  }
  h.params_used = params_from_json(j.at("params_used"));
  h.warnings = j.value("warnings", std::vector<std::string>{});
  h.validation = validate_hierarchy(h);
  return h;
}

json to_json(const AssignmentReport& r) {
  json oor = json::array();
  for (const auto& [id, i] : r.out_of_range) oor.push_back({{"theme", id}, {"index", i}});
  return {{"unassigned", r.unassigned},
          {"out_of_range", oor},
          {"sizes", r.sizes},
          {"overlap_count", r.overlap_count},
          {"assigned_distinct", r.assigned_distinct}};
}

}  // namespace qta
