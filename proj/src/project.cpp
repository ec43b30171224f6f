#include "qta/project.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "qta/error.hpp"
#include "qta/text.hpp"

namespace qta {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::code: return "code";
    case Stage::dedup: return "dedup";
    case Stage::themes: return "themes";
    case Stage::hierarchy: return "hierarchy";
    case Stage::audit: return "audit";
    case Stage::report: return "report";
  }
  return "ingest";
}

std::string_view to_string(StageStatus s) {
  switch (s) {
    case StageStatus::pending: return "pending";
    case StageStatus::done: return "done";
    case StageStatus::failed: return "failed";
    case StageStatus::stale: return "stale";
  }
  return "pending";
}

Stage parse_stage(std::string_view s) {
  for (Stage st : kAllStages) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown stage: " + std::string(s));
}

StageStatus parse_stage_status(std::string_view s) {
  for (StageStatus st : {StageStatus::pending, StageStatus::done, StageStatus::failed, StageStatus::stale}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown stage status: " + std::string(s));
}

std::vector<Stage> predecessors(Stage s) {
  switch (s) {
    case Stage::ingest: return {};
    case Stage::code: return {Stage::ingest};
    case Stage::dedup: return {Stage::code};
    case Stage::themes:
    case Stage::hierarchy: return {Stage::dedup};
    case Stage::audit: return {Stage::themes, Stage::hierarchy};
    case Stage::report: return {Stage::audit};
  }
  return {};
}

std::vector<Stage> downstream(Stage s) {
  std::set<Stage> seen;
  std::vector<Stage> frontier{s};
  while (!frontier.empty()) {
    const Stage cur = frontier.back();
    frontier.pop_back();
    for (Stage t : kAllStages) {
      const auto preds = predecessors(t);
      if (std::find(preds.begin(), preds.end(), cur) != preds.end() && seen.insert(t).second) {
        frontier.push_back(t);
      }
    }
  }
  return {seen.begin(), seen.end()};
}

json to_json(const ProjectConfig& c) {
  json groups = json::array();
  for (const auto& g : c.groups) groups.push_back({{"pattern", g.pattern}, {"group", g.group}});
  json overrides = json::object();
  for (const auto& [k, v] : c.coreq_overrides) overrides[std::to_string(k)] = v;
  return {
      {"corpus_root", c.corpus_root.string()},
      {"groups", groups},
      {"research_question", c.research_question},
      {"model", c.model},
      {"gateway",
       {{"mode", to_string(c.mode)},
        {"base_url", c.base_url},
        {"auth_header", c.auth_header},
        {"query", c.query},
        {"max_in_flight", c.max_in_flight},
        {"max_attempts", c.max_attempts},
        {"workers", c.workers}}},
      {"coding",
       {{"max_name_words", c.validation.max_name_words},
        {"min_description_words", c.validation.min_description_words},
        {"max_description_words", c.validation.max_description_words},
        {"min_quote_words", c.validation.min_quote_words},
        {"chunk_words", c.chunk_words}}},
      {"dedup", {{"oracle", c.oracle}, {"batch_size", c.dedup_batch}, {"rationale", c.rationale}}},
      {"theming",
       {{"n_themes", c.n_themes ? json(*c.n_themes) : json(nullptr)},
        {"strict_assign", c.strict_assign},
        {"n_sub", c.n_sub},
        {"n_top", c.n_top}}},
      {"audit",
       {{"sample", c.audit_sample ? json(*c.audit_sample) : json(nullptr)},
        {"seed", c.seed},
        {"max_gap_chars", c.thresholds.max_gap_chars},
        {"edit_threshold", c.thresholds.edit_threshold},
        {"match_threshold", c.thresholds.match_threshold}}},
      {"baseline",
       {{"context_limit_tokens", c.baseline_context_limit},
        {"min_quote_words", c.baseline_min_quote_words}}},
      {"report", {{"participant_checking", c.participant_checking}, {"coreq_overrides", overrides}}}};
}

namespace {

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) && j[key].is_object() ? j[key] : empty;
}

template <class T>
std::optional<T> optional_value(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

ProjectConfig config_from_json(const json& j) {
  ProjectConfig c;
  c.corpus_root = j.value("corpus_root", c.corpus_root.string());
  if (j.contains("groups")) {
    for (const auto& g : j["groups"]) {
      c.groups.push_back({g.at("pattern").get<std::string>(), g.at("group").get<std::string>()});
    }
  }
  c.research_question = j.value("research_question", "");
  c.model = j.value("model", c.model);
  const json& gw = section(j, "gateway");
  c.mode = parse_gateway_mode(gw.value("mode", std::string(to_string(c.mode))));
  c.base_url = gw.value("base_url", c.base_url);
  c.auth_header = gw.value("auth_header", c.auth_header);
  c.query = gw.value("query", c.query);
  c.max_in_flight = gw.value("max_in_flight", c.max_in_flight);
  c.max_attempts = gw.value("max_attempts", c.max_attempts);
  c.workers = gw.value("workers", c.workers);
  const json& cd = section(j, "coding");
  c.validation.max_name_words = cd.value("max_name_words", c.validation.max_name_words);
  c.validation.min_description_words = cd.value("min_description_words", c.validation.min_description_words);
  c.validation.max_description_words = cd.value("max_description_words", c.validation.max_description_words);
  c.validation.min_quote_words = cd.value("min_quote_words", c.validation.min_quote_words);
  c.chunk_words = cd.value("chunk_words", c.chunk_words);
  const json& dd = section(j, "dedup");
  c.oracle = dd.value("oracle", c.oracle);
  c.dedup_batch = dd.value("batch_size", c.dedup_batch);
  c.rationale = dd.value("rationale", c.rationale);
  const json& th = section(j, "theming");
  c.n_themes = optional_value<std::size_t>(th, "n_themes");
  c.strict_assign = th.value("strict_assign", c.strict_assign);
  c.n_sub = th.value("n_sub", c.n_sub);
  c.n_top = th.value("n_top", c.n_top);
  const json& au = section(j, "audit");
  c.audit_sample = optional_value<std::size_t>(au, "sample");
  c.seed = au.value("seed", c.seed);
  c.thresholds.max_gap_chars = au.value("max_gap_chars", c.thresholds.max_gap_chars);
  c.thresholds.edit_threshold = au.value("edit_threshold", c.thresholds.edit_threshold);
  c.thresholds.match_threshold = au.value("match_threshold", c.thresholds.match_threshold);
  const json& bl = section(j, "baseline");
  c.baseline_context_limit = bl.value("context_limit_tokens", c.baseline_context_limit);
  c.baseline_min_quote_words = bl.value("min_quote_words", c.baseline_min_quote_words);
  const json& rp = section(j, "report");
  c.participant_checking = rp.value("participant_checking", c.participant_checking);
  if (rp.contains("coreq_overrides")) {
    for (const auto& [k, v] : rp["coreq_overrides"].items()) c.coreq_overrides[std::stoi(k)] = v.get<std::string>();
  }
  return c;
}

json to_json(const StageReport& r) {
  return {{"stage", to_string(r.stage)},
          {"status", to_string(r.status)},
          {"gateway_calls", r.gateway_calls},
          {"live_calls", r.live_calls},
          {"warnings", r.warnings},
          {"failures", r.failures}};
}

json read_json(const fs::path& file) {
  try {
    return json::parse(text::read_file(file));
  } catch (const json::parse_error& e) {
    throw Error("invalid JSON in " + file.string() + ": " + e.what());
  }
}

void write_json(const fs::path& file, const json& j) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  text::write_file_atomic(file, j.dump(2) + "\n");
}

ProjectLock::ProjectLock(const fs::path& dir) : file_(dir / ".qta.lock") {
  const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw PreconditionError("project is locked by another run (" + file_.string() + ")");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

ProjectLock::~ProjectLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

namespace {

class OfflineTransport : public Transport {
 public:
  HttpReply post_chat(const std::string&) override {
    throw TransportError("network access is disabled in replay mode");
  }
};

std::string sha_of_file(const fs::path& p) { return text::sha256_hex(text::read_file(p)); }

}  // namespace

Project::Project(fs::path dir) : dir_(std::move(dir)) {}

Project Project::init(const fs::path& dir, const ProjectConfig& config) {
  if (fs::exists(dir / "project.json")) {
    throw PreconditionError("project already initialised: " + dir.string());
  }
  fs::create_directories(dir);
  write_json(dir / "project.json", to_json(config));
  PromptSet().write_to(dir / "prompts");
  fs::create_directories(dir / "cache");
  Project p(dir);
  p.config_ = config;
  for (Stage s : kAllStages) p.status_[s] = StageStatus::pending;
  p.save_state();
  return p;
}

Project Project::open(const fs::path& dir) {
  if (!fs::exists(dir / "project.json")) {
    throw PreconditionError("not a project directory (no project.json): " + dir.string());
  }
  Project p(dir);
  p.load();
  return p;
}

void Project::load() {
  config_ = config_from_json(read_json(dir_ / "project.json"));
  for (Stage s : kAllStages) status_[s] = StageStatus::pending;
  baseline_ = false;
  if (fs::exists(dir_ / "state.json")) {
    const json st = read_json(dir_ / "state.json");
    const json stages = st.value("stages", json::object());
    for (const auto& [k, v] : stages.items()) {
      status_[parse_stage(k)] = parse_stage_status(v.get<std::string>());
    }
    baseline_ = st.value("baseline", std::string("pending")) == "done";
  }
}

json Project::state_json() const {
  json stages = json::object();
  for (const auto& [s, st] : status_) stages[std::string(to_string(s))] = to_string(st);
  return {{"stages", stages}, {"baseline", baseline_ ? "done" : "pending"}};
}

void Project::save_state() const { write_json(dir_ / "state.json", state_json()); }

StageStatus Project::status(Stage s) const { return status_.at(s); }
std::map<Stage, StageStatus> Project::statuses() const { return status_; }
bool Project::baseline_done() const { return baseline_; }

void Project::set_status(Stage s, StageStatus st) { status_[s] = st; }

void Project::mark_downstream_stale(Stage s) {
  for (Stage d : downstream(s)) {
    if (status_[d] != StageStatus::pending) status_[d] = StageStatus::stale;
  }
}

void Project::require_ready(Stage s) const {
  const auto preds = predecessors(s);
  if (s == Stage::audit) {
    if (status(Stage::themes) != StageStatus::done && status(Stage::hierarchy) != StageStatus::done) {
      throw PreconditionError("stage 'themes' not done (or 'hierarchy')");
    }
    return;
  }
  for (Stage p : preds) {
    const StageStatus st = status(p);
    if (st != StageStatus::done) {
      std::string msg = "stage '" + std::string(to_string(p)) + "' not done";
      if (st == StageStatus::stale) msg += " (stale, re-run it)";
      throw PreconditionError(msg);
    }
  }
}

void Project::write_artifact(const fs::path& rel, const json& j) const {
  write_json(artifacts_dir() / rel, j);
}

std::optional<json> Project::read_artifact(const fs::path& rel) const {
  const fs::path p = artifacts_dir() / rel;
  if (!fs::exists(p)) return std::nullopt;
  return read_json(p);
}

PromptSet Project::prompts() const { return PromptSet::load(dir_ / "prompts"); }

std::unique_ptr<Gateway> Project::make_gateway(const RunOptions& o) const {
  GatewayOptions g;
  g.mode = o.mode.value_or(config_.mode);
  g.cache_dir = dir_ / "cache";
  g.max_attempts = config_.max_attempts;
  g.max_in_flight = config_.max_in_flight;
  std::shared_ptr<Transport> t = o.transport;
  if (!t) {
    if (g.mode == GatewayMode::replay) {
      t = std::make_shared<OfflineTransport>();
    } else {
      const char* key = std::getenv("QTA_API_KEY");
      if (key == nullptr || *key == '\0') {
        throw PreconditionError("QTA_API_KEY is not set; needed for " + std::string(to_string(g.mode)) +
                                " mode");
      }
      t = make_http_transport({config_.base_url, key, config_.auth_header, config_.query});
    }
  }
  return std::make_unique<Gateway>(std::move(g), std::move(t));
}

void Project::log_calls(Stage s, const CallLog& log) const {
  AuditTrail t = trail();
  for (const auto& rec : log.records()) t.append(gateway_event(to_string(s), rec));
}

void Project::log_stage(Stage s, const StageReport& r) const {
  json outputs = json::object();
  const fs::path root = artifacts_dir();
  std::vector<fs::path> files;
  if (s == Stage::report) {
    if (fs::exists(report_dir())) {
      for (const auto& e : fs::recursive_directory_iterator(report_dir())) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
    }
  } else {
    static const std::map<Stage, std::vector<std::string>> kOutputs = {
        {Stage::ingest, {"corpus.json"}},
        {Stage::code, {"codes/manifest.json"}},
        {Stage::dedup, {"unique_codes.json", "merge_decisions.json", "saturation.json"}},
        {Stage::themes, {"themes.json"}},
        {Stage::hierarchy, {"hierarchy.json"}},
        {Stage::audit, {"audit.json"}}};
    for (const auto& rel : kOutputs.at(s)) files.push_back(root / rel);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (fs::exists(f)) outputs[fs::relative(f, dir_).generic_string()] = sha_of_file(f);
  }
  json prompts = json::object();
  const PromptSet ps = this->prompts();
  static const std::map<Stage, std::vector<PromptId>> kPrompts = {
      {Stage::code, {PromptId::initial_coding}},
      {Stage::dedup, {PromptId::duplicates, PromptId::merge_rationale}},
      {Stage::themes, {PromptId::themes}},
      {Stage::hierarchy, {PromptId::themes, PromptId::subthemes}}};
  if (auto it = kPrompts.find(s); it != kPrompts.end()) {
    for (PromptId id : it->second) prompts[std::string(template_filename(id))] = ps.digest(id);
  }
  trail().append({{"kind", "stage_run"},
                  {"stage", to_string(s)},
                  {"status", to_string(r.status)},
                  {"gateway_calls", r.gateway_calls},
                  {"live_calls", r.live_calls},
                  {"prompt_digests", prompts},
                  {"outputs", outputs},
                  {"warnings", r.warnings.size()},
                  {"failures", r.failures}});
}

StageReport Project::run(Stage s, const RunOptions& o) {
  ProjectLock lock(dir_);
  load();
  require_ready(s);
  StageReport r;
  r.stage = s;
  try {
    switch (s) {
      case Stage::ingest: run_ingest(o, r); break;
      case Stage::code: run_code(o, r); break;
      case Stage::dedup: run_dedup(o, r); break;
      case Stage::themes: run_themes(o, r); break;
      case Stage::hierarchy: run_hierarchy(o, r); break;
      case Stage::audit: run_audit(o, r); break;
      case Stage::report: run_report(o, r); break;
    }
  } catch (const std::exception& e) {
    r.status = StageStatus::failed;
    r.failures.push_back(e.what());
    set_status(s, StageStatus::failed);
    mark_downstream_stale(s);
    save_state();
    log_stage(s, r);
    throw;
  }
  r.status = StageStatus::done;
  set_status(s, StageStatus::done);
  mark_downstream_stale(s);
  save_state();
  log_stage(s, r);
  return r;
}

void Project::run_ingest(const RunOptions& o, StageReport& r) {
  fs::path root = o.corpus.value_or(config_.corpus_root);
  if (root.is_relative() && !o.corpus) root = dir_ / root;
  const Corpus corpus = ingest_corpus(root, config_.groups);
  write_artifact("corpus.json", to_json(corpus));
  const auto counts = count_participants(corpus);
  for (const auto& [g, n] : counts.by_group) {
    if (g == kUngrouped) r.warnings.push_back(std::to_string(n) + " documents matched no group pattern");
  }
}

Corpus Project::corpus() const {
  const auto j = read_artifact("corpus.json");
  if (!j) throw PreconditionError("stage 'ingest' not done");
  return corpus_from_json(*j);
}

void Project::run_code(const RunOptions& o, StageReport& r) {
  const Corpus c = corpus();
  auto gw = make_gateway(o);
  CodingOptions opts{coding_params(config_.model), prompts().get(PromptId::initial_coding),
                     config_.validation, config_.chunk_words};
  CallLog log;
  CodingRun run = code_corpus(c, *gw, opts, config_.workers, &log);
  log_calls(Stage::code, log);
  r.gateway_calls = gw->total_calls();
  r.live_calls = gw->live_calls();
  fs::remove_all(artifacts_dir() / "codes");
  json docs = json::array();
  std::size_t total = 0;
  for (const auto& set : run.codesets) {
    write_artifact(fs::path("codes") / (set.source_doc + ".json"), to_json(set));
    docs.push_back(set.source_doc);
    total += set.codes.size();
    r.warnings.insert(r.warnings.end(), set.warnings.begin(), set.warnings.end());
  }
  json failed = json::object();
  for (const auto& [id, err] : run.failed) {
    failed[id] = err;
    r.failures.push_back(id + ": " + err);
  }
  write_artifact("codes/manifest.json",
                 {{"documents", docs}, {"failed", failed}, {"total_codes", total}, {"warnings", r.warnings}});
  if (run.codesets.empty()) throw StageError("coding failed for every document");
}

std::vector<CodeSet> Project::codesets() const {
  const auto manifest = read_artifact("codes/manifest.json");
  if (!manifest) throw PreconditionError("stage 'code' not done");
  std::vector<CodeSet> out;
  for (const auto& id : manifest->at("documents")) {
    out.push_back(codeset_from_json(read_json(artifacts_dir() / "codes" / (id.get<std::string>() + ".json"))));
  }
  return out;
}

namespace {

fs::path resolve_path(const fs::path& p, const fs::path& base) {
  if (p.is_absolute() || fs::exists(p)) return p;
  return base / p;
}

}  // namespace

void Project::run_dedup(const RunOptions& o, StageReport& r) {
  const auto sets = codesets();
  auto gw = make_gateway(o);
  const PromptSet ps = prompts();
  const std::string oracle = o.oracle.value_or(config_.oracle);
  std::unique_ptr<DuplicateJudge> judge;
  if (oracle == "llm") {
    judge = std::make_unique<LlmJudge>(*gw, dedup_params(config_.model), ps.get(PromptId::duplicates),
                                       config_.dedup_batch);
  } else if (oracle == "string-equality") {
    judge = std::make_unique<StringEqualityJudge>();
  } else if (oracle == "all-false") {
    judge = std::make_unique<AllFalseJudge>();
  } else if (oracle.rfind("recorded:", 0) == 0) {
    judge = std::make_unique<RecordedJudge>(RecordedJudge::load(resolve_path(oracle.substr(9), dir_)));
  } else {
    throw std::invalid_argument("unknown oracle: " + oracle);
  }
  TournamentOptions topts;
  if (o.rationale.value_or(config_.rationale)) {
    topts.rationale = {gw.get(), dedup_params(config_.model), ps.get(PromptId::merge_rationale)};
  }
  topts.workers = config_.workers;
  CallLog log;
  TournamentResult t = run_tournament(sets, *judge, topts, &log);
  log_calls(Stage::dedup, log);
  r.gateway_calls = gw->total_calls();
  r.live_calls = gw->live_calls();
  r.warnings = t.warnings;
  json codes = json::array();
  for (const auto& c : t.codes) codes.push_back(to_json(c));
  json decisions = json::array();
  for (const auto& d : t.decisions) decisions.push_back(to_json(d));
  json sat = to_json(t.report);
  sat["oracle"] = judge->kind();
  write_artifact("unique_codes.json", codes);
  write_artifact("merge_decisions.json", decisions);
  write_artifact("saturation.json", sat);
}

std::vector<UniqueCode> Project::unique_codes() const {
  const auto j = read_artifact("unique_codes.json");
  if (!j) throw PreconditionError("stage 'dedup' not done");
  std::vector<UniqueCode> out;
  for (const auto& c : *j) out.push_back(unique_code_from_json(c));
  return out;
}

std::vector<MergeDecision> Project::merge_decisions() const {
  const auto j = read_artifact("merge_decisions.json");
  std::vector<MergeDecision> out;
  if (!j) return out;
  for (const auto& d : *j) out.push_back(decision_from_json(d));
  return out;
}

namespace {

ThemingOptions theming_options(const ProjectConfig& c, const RunOptions& o, const PromptSet& ps) {
  if (text::trim(c.research_question).empty()) {
    throw PreconditionError("research_question is empty in project.json");
  }
  ThemingOptions t;
  t.params = theming_params(c.model);
  t.research_question = c.research_question;
  t.n_themes = o.themes ? o.themes : c.n_themes;
  t.prompt_template = ps.get(PromptId::themes);
  t.strict_assign = o.strict_assign.value_or(c.strict_assign);
  return t;
}

}  // namespace

void Project::run_themes(const RunOptions& o, StageReport& r) {
  const auto codes = unique_codes();
  auto gw = make_gateway(o);
  CallLog log;
  ThemeSet ts = generate_themes(codes, *gw, theming_options(config_, o, prompts()), &log);
  log_calls(Stage::themes, log);
  r.gateway_calls = gw->total_calls();
  r.live_calls = gw->live_calls();
  r.warnings = ts.warnings;
  json j = to_json(ts);
  j["assignment"] = to_json(validate_assignment(ts, codes.size()));
  write_artifact("themes.json", j);
}

ThemeSet Project::themes() const {
  const auto j = read_artifact("themes.json");
  if (!j) throw PreconditionError("stage 'themes' not done");
  return themeset_from_json(*j);
}

void Project::run_hierarchy(const RunOptions& o, StageReport& r) {
  const auto codes = unique_codes();
  auto gw = make_gateway(o);
  const PromptSet ps = prompts();
  HierarchyOptions h;
  h.theming = theming_options(config_, o, ps);
  h.n_sub = o.themes.value_or(config_.n_sub);
  h.n_top = config_.n_top;
  h.subtheme_template = ps.get(PromptId::subthemes);
  CallLog log;
  ThemeHierarchy th = generate_hierarchy(codes, *gw, h, &log);
  log_calls(Stage::hierarchy, log);
  r.gateway_calls = gw->total_calls();
  r.live_calls = gw->live_calls();
  r.warnings = th.subthemes.warnings;
  r.warnings.insert(r.warnings.end(), th.warnings.begin(), th.warnings.end());
  r.warnings.insert(r.warnings.end(), th.validation.flags.begin(), th.validation.flags.end());
  write_artifact("hierarchy.json", to_json(th));
}

ThemeHierarchy Project::hierarchy() const {
  const auto j = read_artifact("hierarchy.json");
  if (!j) throw PreconditionError("stage 'hierarchy' not done");
  return hierarchy_from_json(*j);
}

ThemeSet reporting_themes(const Project& p) {
  if (p.status(Stage::themes) == StageStatus::done) return p.themes();
  if (p.status(Stage::hierarchy) == StageStatus::done) return p.hierarchy().subthemes;
  if (p.read_artifact("themes.json")) return p.themes();
  return p.hierarchy().subthemes;
}

namespace {

json thresholds_json(const audit::Thresholds& t) {
  return {{"max_gap_chars", t.max_gap_chars},
          {"edit_threshold", t.edit_threshold},
          {"match_threshold", t.match_threshold}};
}

}  // namespace

void Project::run_audit(const RunOptions& o, StageReport& r) {
  const auto codes = unique_codes();
  const Corpus c = corpus();
  std::vector<audit::QuoteItem> items;
  for (const auto& u : codes) {
    for (std::size_t k = 0; k < u.quotes.size(); ++k) items.push_back({u.members[k], u.quotes[k].quote});
  }
  const auto sample = o.sample ? o.sample : config_.audit_sample;
  const auto seed = o.seed.value_or(config_.seed);
  const audit::AuditResult res = audit::audit_codeset(items, c, sample, seed, config_.thresholds);
  json records = json::array();
  for (const auto& rec : res.records) {
    records.push_back(audit::to_json(rec));
    if (rec.verdict == audit::Verdict::fabricated) r.warnings.push_back(rec.code_ref + ": fabricated quote");
  }
  write_artifact("audit.json", {{"records", records},
                                {"summary", audit::to_json(res.summary)},
                                {"population", items.size()},
                                {"sample", sample ? json(*sample) : json(nullptr)},
                                {"seed", seed},
                                {"sampled_indices", res.sampled_indices},
                                {"thresholds", thresholds_json(config_.thresholds)}});
}

namespace {

audit::AuditSummary summary_from_json(const json& s) {
  audit::AuditSummary out;
  const json& c = s.at("counts");
  out.verbatim = c.at("verbatim").get<std::size_t>();
  out.modified_ellipsis = c.at("modified_ellipsis").get<std::size_t>();
  out.modified_edit = c.at("modified_edit").get<std::size_t>();
  out.fabricated = c.at("fabricated").get<std::size_t>();
  out.sample_size = s.at("sample_size").get<std::size_t>();
  return out;
}

std::vector<audit::QuoteAuditRecord> records_from(const json& audit_json) {
  std::vector<audit::QuoteAuditRecord> out;
  for (const auto& r : audit_json.at("records")) out.push_back(audit::record_from_json(r));
  return out;
}

void write_text(const fs::path& file, const std::string& content) {
  fs::create_directories(file.parent_path());
  text::write_file_atomic(file, content);
}

}  // namespace

void Project::run_report(const RunOptions&, StageReport& r) {
  const auto codes = unique_codes();
  const ThemeSet ts = reporting_themes(*this);
  const auto audit_json = read_artifact("audit.json");
  std::vector<audit::QuoteAuditRecord> records;
  std::optional<audit::AuditSummary> summary;
  if (audit_json) {
    records = records_from(*audit_json);
    summary = summary_from_json(audit_json->at("summary"));
  }
  const fs::path out = report_dir();
  fs::remove_all(out);
  const CodingTree tree = build_coding_tree(ts, codes, records);
  write_text(out / "coding_tree.md", render_coding_tree_markdown(tree, codes));
  write_json(out / "coding_tree.json", to_json(tree));

  CoreqInputs in;
  in.model = config_.model;
  std::set<std::string> reviewers;
  for (const auto& e : trail().events()) {
    if (e.value("kind", "") == "human_edit") {
      reviewers.insert(e.value("actor", "unknown"));
      ++in.human_actions;
    }
  }
  in.human_reviewers = reviewers.size();
  in.participant_checking = config_.participant_checking;
  in.audit = summary;
  const auto sat = read_artifact("saturation.json");
  if (sat) in.total_codes = sat->at("total_codes").get<std::size_t>();
  in.unique_codes = codes.size();
  in.theme_count = ts.themes.size();
  in.unassigned = ts.unassigned.size();
  const bool has_hierarchy = status(Stage::hierarchy) == StageStatus::done;
  if (has_hierarchy) in.subtheme_count = hierarchy().subthemes.themes.size();
  in.overrides = config_.coreq_overrides;
  const auto items = coreq_report(in);
  write_text(out / "coreq.md", render_coreq_markdown(items));

  for (TableFormat f : {TableFormat::markdown, TableFormat::csv, TableFormat::json}) {
    const std::string ext(extension(f));
    write_text(out / ("themes." + ext), render_table(theme_table(ts), f));
    if (summary) write_text(out / ("audit." + ext), render_table(audit_table(*summary), f));
    if (sat) write_text(out / ("saturation." + ext), render_table(saturation_table(saturation_from_json(*sat)), f));
    if (has_hierarchy) write_text(out / ("hierarchy." + ext), render_table(hierarchy_table(hierarchy()), f));
  }
  if (!ts.unassigned.empty()) {
    r.warnings.push_back(std::to_string(ts.unassigned.size()) + " codes are not in any theme");
  }
}

BaselineResult Project::run_baseline(const RunOptions& o) {
  ProjectLock lock(dir_);
  load();
  if (status(Stage::ingest) != StageStatus::done) throw PreconditionError("stage 'ingest' not done");
  const Corpus c = corpus();
  auto gw = make_gateway(o);
  BaselineOptions b{coding_params(config_.model), prompts().get(PromptId::baseline),
                    config_.baseline_context_limit};
  CallLog log;
  BaselineResult res = run_monolithic_baseline(c, *gw, b, &log);
  AuditTrail t = trail();
  for (const auto& rec : log.records()) t.append(gateway_event("baseline", rec));
  write_text(artifacts_dir() / "baseline" / "raw.txt", res.raw_text);
  write_artifact("baseline/baseline.json", {{"digest", res.digest},
                                            {"estimated_tokens", res.estimated_tokens},
                                            {"warnings", res.warnings},
                                            {"params", to_json(b.params)}});
  baseline_ = true;
  save_state();
  t.append({{"kind", "stage_run"},
            {"stage", "baseline"},
            {"status", "done"},
            {"gateway_calls", gw->total_calls()},
            {"outputs", {{"artifacts/baseline/raw.txt", text::sha256_hex(res.raw_text)}}}});
  return res;
}

json Project::compare(const RunOptions&) {
  ProjectLock lock(dir_);
  load();
  if (status(Stage::audit) != StageStatus::done) throw PreconditionError("stage 'audit' not done");
  if (!baseline_) throw PreconditionError("baseline run not done");
  const auto audit_json = read_artifact("audit.json");
  const audit::AuditSummary staged = summary_from_json(audit_json->at("summary"));
  const std::string raw = text::read_file(artifacts_dir() / "baseline" / "raw.txt");
  const auto quotes = extract_quoted_spans(raw, config_.baseline_min_quote_words);
  const Corpus c = corpus();
  const audit::AuditIndex index(c);
  std::vector<audit::QuoteAuditRecord> records;
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    auto rec = audit::classify_quote(quotes[i], index, config_.thresholds);
    rec.code_ref = "baseline#" + std::to_string(i);
    records.push_back(std::move(rec));
  }
  const audit::AuditSummary baseline = audit::summarize(records);
  json rec_json = json::array();
  for (const auto& rec : records) rec_json.push_back(audit::to_json(rec));
  write_artifact("baseline/audit.json", {{"records", rec_json}, {"summary", audit::to_json(baseline)}});

  const ThemeSet ts = reporting_themes(*this);
  std::vector<std::size_t> sizes;
  for (const auto& t : ts.themes) sizes.push_back(t.code_indices.size());
  const auto sp = staged.percentages();
  const auto bp = baseline.percentages();
  json out = {{"staged", audit::to_json(staged)},
              {"baseline", audit::to_json(baseline)},
              {"staged_themes", ts.themes.size()},
              {"staged_theme_sizes", sizes},
              {"baseline_quotes", quotes.size()},
              {"baseline_words", text::word_count(raw)},
              {"staged_verbatim_share_higher", sp.verbatim > bp.verbatim}};

  std::string md = "# Staged analysis vs single-prompt baseline\n\n";
  md += render_table(comparison_table(staged, baseline), TableFormat::markdown);
  md += "\nStaged run: " + std::to_string(ts.themes.size()) + " themes, sizes";
  for (std::size_t i = 0; i < sizes.size(); ++i) md += (i ? ", " : " ") + std::to_string(sizes[i]);
  md += ".\n\nBaseline: " + std::to_string(quotes.size()) +
        " quoted spans found by quotation-mark scanning. Claims outside quotation marks cannot be "
        "audited.\n\n## Baseline quotes\n\n";
  for (const auto& rec : records) {
    md += "- \"" + rec.quote + "\": " + std::string(audit::to_string(rec.verdict));
    if (rec.matched_doc) md += " (" + *rec.matched_doc + ")";
    md += "\n";
  }
  md += "\n## Baseline reply\n\n";
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t end = raw.find('\n', start);
    if (end == std::string::npos) end = raw.size();
    md += "> " + raw.substr(start, end - start) + "\n";
    start = end + 1;
  }
  write_text(report_dir() / "comparison.md", md);
  write_json(report_dir() / "comparison.json", out);
  return out;
}

namespace {

json edit_event(std::string_view action, const std::string& target, const std::string& actor) {
  return {{"kind", "human_edit"}, {"action", action}, {"target", target}, {"actor", actor}};
}

}  // namespace

MergeDecision Project::accept_merge(const std::string& id, const std::string& actor) {
  ProjectLock lock(dir_);
  load();
  auto decisions = merge_decisions();
  auto it = std::find_if(decisions.begin(), decisions.end(), [&](const auto& d) { return d.id == id; });
  if (it == decisions.end()) throw std::out_of_range("no merge decision " + id);
  if (it->status == DecisionStatus::rejected) throw PreconditionError("merge " + id + " was already rejected");
  it->status = DecisionStatus::accepted;
  json arr = json::array();
  for (const auto& d : decisions) arr.push_back(to_json(d));
  write_artifact("merge_decisions.json", arr);
  trail().append(edit_event("accept_merge", id, actor));
  return *it;
}

MergeDecision Project::reject_merge(const std::string& id, const std::string& actor) {
  ProjectLock lock(dir_);
  load();
  auto decisions = merge_decisions();
  auto it = std::find_if(decisions.begin(), decisions.end(), [&](const auto& d) { return d.id == id; });
  if (it == decisions.end()) throw std::out_of_range("no merge decision " + id);
  if (it->status == DecisionStatus::rejected) throw PreconditionError("merge " + id + " was already rejected");
  auto codes = unique_codes();
  split_merge(codes, *it);
  it->status = DecisionStatus::rejected;
  json carr = json::array();
  for (const auto& c : codes) carr.push_back(to_json(c));
  json darr = json::array();
  for (const auto& d : decisions) darr.push_back(to_json(d));
  write_artifact("unique_codes.json", carr);
  write_artifact("merge_decisions.json", darr);
  if (auto sat = read_artifact("saturation.json")) {
    auto rep = saturation_from_json(*sat);
    rep.unique_codes = codes.size();
    rep.ratio = saturation_ratio(rep.total_codes, rep.unique_codes);
    json j = to_json(rep);
    j["oracle"] = sat->value("oracle", "");
    write_artifact("saturation.json", j);
  }
  mark_downstream_stale(Stage::dedup);
  save_state();
  trail().append(edit_event("reject_merge", id, actor));
  return *it;
}

Theme Project::edit_theme(const std::string& id, const json& patch, const std::string& actor) {
  ProjectLock lock(dir_);
  load();
  ThemeSet ts = themes();
  auto it = std::find_if(ts.themes.begin(), ts.themes.end(), [&](const Theme& t) { return t.id == id; });
  if (it == ts.themes.end()) throw std::out_of_range("no theme " + id);
  const std::size_t n = unique_codes().size();
  json changes = json::object();
  if (patch.contains("name")) it->name = patch["name"].get<std::string>(), changes["name"] = it->name;
  if (patch.contains("description")) {
    it->description = patch["description"].get<std::string>();
    changes["description"] = it->description;
  }
  if (patch.contains("codes")) {
    std::vector<std::size_t> idx;
    for (const auto& v : patch["codes"]) {
      const auto i = v.get<std::size_t>();
      if (i >= n) throw std::invalid_argument("code index out of range: " + std::to_string(i));
      if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
    }
    it->code_indices = idx;
    changes["codes"] = idx;
  }
  if (changes.empty()) throw std::invalid_argument("theme edit changes nothing");
  std::vector<bool> seen(n, false);
  for (const auto& t : ts.themes) {
    for (std::size_t i : t.code_indices) {
      if (i < n) seen[i] = true;
    }
  }
  ts.unassigned.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) ts.unassigned.push_back(i);
  }
  json j = to_json(ts);
  j["assignment"] = to_json(validate_assignment(ts, n));
  write_artifact("themes.json", j);
  mark_downstream_stale(Stage::themes);
  save_state();
  json ev = edit_event("edit_theme", id, actor);
  ev["changes"] = changes;
  trail().append(ev);
  return *it;
}

ParentTheme Project::promote_subtheme(std::size_t index, const std::string& actor) {
  ProjectLock lock(dir_);
  load();
  ThemeHierarchy h = hierarchy();
  qta::promote_subtheme(h, index);
  write_artifact("hierarchy.json", to_json(h));
  mark_downstream_stale(Stage::hierarchy);
  save_state();
  trail().append(edit_event("promote_subtheme", "S" + std::to_string(index), actor));
  return h.parents.back();
}

}  // namespace qta
