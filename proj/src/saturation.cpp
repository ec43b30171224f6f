#include "qta/saturation.hpp"

#include <algorithm>
#include <stdexcept>

#include "qta/error.hpp"
#include "qta/parallel.hpp"
#include "qta/prompts.hpp"
#include "qta/text.hpp"

namespace qta {

using nlohmann::json;

UniqueCode UniqueCode::from(const InitialCode& c) {
  return {c.code_name, c.description, {{c.quote, c.source_doc}}, {c.ref()}, {}};
}

std::string_view to_string(DecisionStatus s) {
  switch (s) {
    case DecisionStatus::proposed: return "proposed";
    case DecisionStatus::accepted: return "accepted";
    case DecisionStatus::rejected: return "rejected";
  }
  return "proposed";
}

DecisionStatus parse_decision_status(std::string_view s) {
  if (s == "proposed") return DecisionStatus::proposed;
  if (s == "accepted") return DecisionStatus::accepted;
  if (s == "rejected") return DecisionStatus::rejected;
  throw std::invalid_argument("unknown decision status: " + std::string(s));
}

double saturation_ratio(std::size_t total, std::size_t unique) {
  if (unique == 0 || unique > total) {
    throw std::invalid_argument("saturation ratio needs 0 < unique <= total");
  }
  return static_cast<double>(unique) / static_cast<double>(total);
}

std::string StringEqualityJudge::key(std::string_view name) {
  std::string out;
  for (auto w : text::split_words(name)) {
    if (!out.empty()) out.push_back(' ');
    out += text::to_lower_ascii(w);
  }
  return out;
}

std::vector<bool> StringEqualityJudge::judge(const UniqueCode& target,
                                             std::span<const UniqueCode* const> candidates,
                                             CallLog*, std::vector<std::string>&) {
  const std::string k = key(target.code_name);
  std::vector<bool> out;
  out.reserve(candidates.size());
  for (const auto* c : candidates) out.push_back(key(c->code_name) == k);
  return out;
}

RecordedJudge::RecordedJudge(std::vector<std::pair<std::string, std::string>> pairs) {
  for (auto& [a, b] : pairs) {
    const auto ka = StringEqualityJudge::key(a);
    const auto kb = StringEqualityJudge::key(b);
    table_[ka].push_back(kb);
    table_[kb].push_back(ka);
  }
  for (auto& [k, v] : table_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

RecordedJudge RecordedJudge::load(const std::filesystem::path& file) {
  const json j = json::parse(text::read_file(file));
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& p : j.at("duplicates")) {
    pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
  }
  return RecordedJudge(std::move(pairs));
}

std::vector<bool> RecordedJudge::judge(const UniqueCode& target,
                                       std::span<const UniqueCode* const> candidates, CallLog*,
                                       std::vector<std::string>&) {
  const std::string k = StringEqualityJudge::key(target.code_name);
  const auto it = table_.find(k);
  std::vector<bool> out;
  out.reserve(candidates.size());
  for (const auto* c : candidates) {
    const std::string ck = StringEqualityJudge::key(c->code_name);
    out.push_back(ck == k ||
                  (it != table_.end() && std::binary_search(it->second.begin(), it->second.end(), ck)));
  }
  return out;
}

LlmJudge::LlmJudge(Gateway& gateway, GenerationParams params, std::string prompt_template,
                   std::size_t batch_size)
    : gateway_(gateway),
      params_(std::move(params)),
      template_(std::move(prompt_template)),
      batch_size_(batch_size) {
  if (batch_size_ == 0) throw std::invalid_argument("batch size must be positive");
}

namespace {

// JSON string body without the surrounding quotes.
std::string json_escape(const std::string& s) {
  const std::string d = json(s).dump();
  return d.substr(1, d.size() - 2);
}

bool truthy(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) return text::to_lower_ascii(text::trim(v.get<std::string>())) == "true";
  if (v.is_number_integer()) return v.get<long long>() != 0;
  return false;
}

}  // namespace

std::string LlmJudge::render_prompt(const UniqueCode& target,
                                    std::span<const UniqueCode* const> batch) const {
  static constexpr std::string_view kRequired[] = {"target_code", "comparison_codes"};
  json comparisons = json::object();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    comparisons["code_id_" + std::to_string(i + 1)] = {{"code", batch[i]->code_name},
                                                       {"description", batch[i]->description}};
  }
  // Keys sort lexicographically in nlohmann objects; keep numeric order instead.
  std::string listing = "{\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::string key = "code_id_" + std::to_string(i + 1);
    listing += "  \"" + key + "\": " + comparisons[key].dump();
    listing += i + 1 < batch.size() ? ",\n" : "\n";
  }
  listing += "}";
  return render(template_,
                {{"target_code", json_escape(target.code_name)},
                 {"target_description", json_escape(target.description)},
                 {"target_extra", ""},
                 {"comparison_codes", listing},
                 {"list_of_all_codes", listing}},
                kRequired);
}

std::vector<bool> LlmJudge::judge(const UniqueCode& target,
                                  std::span<const UniqueCode* const> candidates, CallLog* log,
                                  std::vector<std::string>& warnings) {
  std::vector<bool> out(candidates.size(), false);
  const std::string who = target.members.empty() ? target.code_name : target.members.front();
  for (std::size_t start = 0; start < candidates.size(); start += batch_size_) {
    const std::size_t n = std::min(batch_size_, candidates.size() - start);
    const auto batch = candidates.subspan(start, n);
    ChatRequest req;
    req.params = params_;
    req.user_text = render_prompt(target, batch);
    bool any = false;
    try {
      const JsonReply reply = gateway_.complete_json(req, "dedup:" + who, log);
      const json* cmp = nullptr;
      if (reply.value.is_object() && reply.value.contains("comparisons") &&
          reply.value["comparisons"].is_object()) {
        cmp = &reply.value["comparisons"];
      }
      if (cmp == nullptr) {
        warnings.push_back("dedup " + who + ": reply lacks a comparisons object; batch kept separate");
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const std::string key = "code_id_" + std::to_string(i + 1);
        if (cmp->contains(key) && truthy((*cmp)[key])) {
          out[start + i] = true;
          any = true;
        }
      }
    } catch (const MalformedOutputError& e) {
      warnings.push_back("dedup " + who + ": " + e.what() + "; batch kept separate");
    }
    // Only the lowest matching index is used, so later batches are moot.
    if (any) break;
  }
  return out;
}

MergeOutput merge_lists(std::vector<UniqueCode> a, std::span<const UniqueCode> b,
                        DuplicateJudge& judge, int round, const RationaleOptions& rationale,
                        CallLog* log) {
  MergeOutput out;
  out.codes = std::move(a);
  for (const UniqueCode& x : b) {
    if (out.codes.empty()) {
      out.codes.push_back(x);
      continue;
    }
    std::vector<const UniqueCode*> cands;
    cands.reserve(out.codes.size());
    for (const auto& c : out.codes) cands.push_back(&c);
    const auto verdicts = judge.judge(x, cands, log, out.warnings);
    const auto hit = std::find(verdicts.begin(), verdicts.end(), true);
    if (hit == verdicts.end()) {
      out.codes.push_back(x);
      continue;
    }
    UniqueCode& y = out.codes[static_cast<std::size_t>(hit - verdicts.begin())];
    MergeDecision d;
    d.target = x.members.front();
    d.matched = y.members.front();
    d.round = round;
    d.params_used = judge.params();
    d.target_name = x.code_name;
    d.target_description = x.description;
    d.matched_name = y.code_name;
    d.moved_members = x.members;
    d.moved_quotes = x.quotes.size();
    if (rationale.gateway != nullptr) {
      static constexpr std::string_view kRequired[] = {"kept_code", "merged_code"};
      ChatRequest req;
      req.params = rationale.params;
      req.user_text = render(rationale.prompt_template,
                             {{"kept_code", y.code_name},
                              {"kept_description", y.description},
                              {"merged_code", x.code_name},
                              {"merged_description", x.description}},
                             kRequired);
      const ChatResponse resp = rationale.gateway->complete(req, "rationale:" + d.target, log);
      d.rationale = text::trim(resp.raw_text);
    }
    y.quotes.insert(y.quotes.end(), x.quotes.begin(), x.quotes.end());
    y.members.insert(y.members.end(), x.members.begin(), x.members.end());
    y.merge_rationales.insert(y.merge_rationales.end(), x.merge_rationales.begin(),
                              x.merge_rationales.end());
    if (d.rationale) y.merge_rationales.push_back(*d.rationale);
    out.decisions.push_back(std::move(d));
  }
  return out;
}

std::size_t ceil_log2(std::size_t n) {
  std::size_t r = 0;
  while ((std::size_t{1} << r) < n) ++r;
  return r;
}

std::size_t total_quotes(std::span<const UniqueCode> codes) {
  std::size_t n = 0;
  for (const auto& c : codes) n += c.quotes.size();
  return n;
}

namespace {

std::size_t sum_sizes(const std::vector<std::vector<UniqueCode>>& lists) {
  std::size_t n = 0;
  for (const auto& l : lists) n += l.size();
  return n;
}

}  // namespace

TournamentResult run_tournament(std::span<const CodeSet> codesets, DuplicateJudge& judge,
                                const TournamentOptions& options, CallLog* log) {
  if (codesets.empty()) throw std::invalid_argument("tournament needs at least one code set");
  TournamentResult result;
  std::size_t total = 0;
  for (const auto& s : codesets) total += s.codes.size();

  const auto run_round = [&](std::size_t jobs, int round, auto&& job_inputs) {
    std::vector<MergeOutput> outs(jobs);
    std::vector<CallLog> logs(jobs);
    parallel_for(jobs, options.workers, [&](std::size_t i) {
      auto [a, b] = job_inputs(i);
      outs[i] = merge_lists(std::move(a), b, judge, round, options.rationale, &logs[i]);
    });
    std::vector<std::vector<UniqueCode>> lists;
    for (std::size_t i = 0; i < jobs; ++i) {
      if (log) log->append(logs[i]);
      for (auto& d : outs[i].decisions) result.decisions.push_back(std::move(d));
      for (auto& w : outs[i].warnings) result.warnings.push_back(std::move(w));
      lists.push_back(std::move(outs[i].codes));
    }
    return lists;
  };

  std::vector<std::vector<UniqueCode>> initial(codesets.size());
  for (std::size_t i = 0; i < codesets.size(); ++i) {
    for (const auto& c : codesets[i].codes) initial[i].push_back(UniqueCode::from(c));
  }
  auto lists = run_round(codesets.size(), 0, [&](std::size_t i) {
    return std::pair<std::vector<UniqueCode>, std::span<const UniqueCode>>{{}, initial[i]};
  });
  result.report.per_round_sizes = {total, sum_sizes(lists)};

  int round = 0;
  while (lists.size() > 1) {
    ++round;
    const std::size_t pairs = lists.size() / 2;
    auto merged = run_round(pairs, round, [&](std::size_t i) {
      return std::pair<std::vector<UniqueCode>, std::span<const UniqueCode>>{
          std::move(lists[2 * i]), lists[2 * i + 1]};
    });
    if (lists.size() % 2 == 1) merged.push_back(std::move(lists.back()));
    lists = std::move(merged);
    result.report.per_round_sizes.push_back(sum_sizes(lists));
  }

  result.codes = std::move(lists.front());
  for (std::size_t i = 0; i < result.decisions.size(); ++i) {
    std::string id = std::to_string(i + 1);
    if (id.size() < 4) id.insert(0, 4 - id.size(), '0');
    result.decisions[i].id = "d" + id;
  }
  result.report.total_codes = total;
  result.report.unique_codes = result.codes.size();
  result.report.ratio = total == 0 ? 1.0 : saturation_ratio(total, result.codes.size());
  result.report.rounds = round;
  return result;
}

void split_merge(std::vector<UniqueCode>& codes, const MergeDecision& d) {
  if (d.moved_members.empty()) throw std::invalid_argument("decision moved no members");
  for (auto& c : codes) {
    auto first = std::find(c.members.begin(), c.members.end(), d.moved_members.front());
    if (first == c.members.end()) continue;
    if (c.members.size() <= d.moved_members.size()) {
      throw PreconditionError("merge " + d.id + " has nothing left to split");
    }
    UniqueCode split;
    split.code_name = d.target_name;
    split.description = d.target_description;
    for (const auto& m : d.moved_members) {
      auto it = std::find(c.members.begin(), c.members.end(), m);
      if (it == c.members.end()) {
        throw PreconditionError("members of merge " + d.id + " are no longer in one code");
      }
      const auto pos = static_cast<std::size_t>(it - c.members.begin());
      split.members.push_back(*it);
      split.quotes.push_back(c.quotes[pos]);
      c.members.erase(it);
      c.quotes.erase(c.quotes.begin() + static_cast<std::ptrdiff_t>(pos));
    }
    if (d.rationale) {
      auto r = std::find(c.merge_rationales.begin(), c.merge_rationales.end(), *d.rationale);
      if (r != c.merge_rationales.end()) c.merge_rationales.erase(r);
    }
    codes.push_back(std::move(split));
    return;
  }
  throw PreconditionError("members of merge " + d.id + " not found in any unique code");
}

json to_json(const UniqueCode& c) {
  json quotes = json::array();
  for (const auto& q : c.quotes) quotes.push_back({{"quote", q.quote}, {"source_doc", q.source_doc}});
  return {{"code_name", c.code_name},
          {"description", c.description},
          {"quotes", quotes},
          {"members", c.members},
          {"merge_rationales", c.merge_rationales}};
}

UniqueCode unique_code_from_json(const json& j) {
  UniqueCode c;
  c.code_name = j.at("code_name").get<std::string>();
  c.description = j.at("description").get<std::string>();
  for (const auto& q : j.at("quotes")) {
    c.quotes.push_back({q.at("quote").get<std::string>(), q.at("source_doc").get<std::string>()});
  }
  c.members = j.at("members").get<std::vector<std::string>>();
  c.merge_rationales = j.value("merge_rationales", std::vector<std::string>{});
  if (c.members.size() != c.quotes.size()) {
    throw std::invalid_argument("unique code " + c.code_name + ": members and quotes differ in size");
  }
  return c;
}

json to_json(const MergeDecision& d) {
  return {{"id", d.id},
          {"target", d.target},
          {"matched", d.matched},
          {"verdict", d.verdict},
          {"rationale", d.rationale ? json(*d.rationale) : json(nullptr)},
          {"round", d.round},
          {"params_used", d.params_used ? to_json(*d.params_used) : json(nullptr)},
          {"target_name", d.target_name},
          {"target_description", d.target_description},
          {"matched_name", d.matched_name},
          {"moved_members", d.moved_members},
          {"moved_quotes", d.moved_quotes},
          {"status", to_string(d.status)}};
}

MergeDecision decision_from_json(const json& j) {
  MergeDecision d;
  d.id = j.at("id").get<std::string>();
  d.target = j.at("target").get<std::string>();
  d.matched = j.at("matched").get<std::string>();
  d.verdict = j.value("verdict", true);
  if (j.contains("rationale") && !j["rationale"].is_null()) d.rationale = j["rationale"].get<std::string>();
  d.round = j.at("round").get<int>();
  if (j.contains("params_used") && !j["params_used"].is_null()) {
    d.params_used = params_from_json(j["params_used"]);
  }
  d.target_name = j.value("target_name", "");
  d.target_description = j.value("target_description", "");
  d.matched_name = j.value("matched_name", "");
  d.moved_members = j.at("moved_members").get<std::vector<std::string>>();
  d.moved_quotes = j.value("moved_quotes", d.moved_members.size());
  d.status = parse_decision_status(j.value("status", "proposed"));
  return d;
}

json to_json(const SaturationReport& r) {
  return {{"total_codes", r.total_codes},
          {"unique_codes", r.unique_codes},
          {"ratio", r.ratio},
          {"rounds", r.rounds},
          {"per_round_sizes", r.per_round_sizes}};
}

SaturationReport saturation_from_json(const json& j) {
  SaturationReport r;
  r.total_codes = j.at("total_codes").get<std::size_t>();
  r.unique_codes = j.at("unique_codes").get<std::size_t>();
  r.ratio = j.at("ratio").get<double>();
  r.rounds = j.at("rounds").get<int>();
  r.per_round_sizes = j.at("per_round_sizes").get<std::vector<std::size_t>>();
  return r;
}

}  // namespace qta
