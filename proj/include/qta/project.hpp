#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qta/audit.hpp"
#include "qta/coding.hpp"
#include "qta/corpus.hpp"
#include "qta/gateway.hpp"
#include "qta/prompts.hpp"
#include "qta/reporting.hpp"
#include "qta/saturation.hpp"
#include "qta/theming.hpp"
#include "qta/trail.hpp"

namespace qta {

enum class Stage { ingest, code, dedup, themes, hierarchy, audit, report };
inline constexpr std::array kAllStages = {Stage::ingest, Stage::code,  Stage::dedup, Stage::themes,
                                          Stage::hierarchy, Stage::audit, Stage::report};

enum class StageStatus { pending, done, failed, stale };

std::string_view to_string(Stage s);
std::string_view to_string(StageStatus s);
Stage parse_stage(std::string_view s);
StageStatus parse_stage_status(std::string_view s);

// Direct predecessors; audit needs either themes or hierarchy.
std::vector<Stage> predecessors(Stage s);
// Every stage reachable downstream of s.
std::vector<Stage> downstream(Stage s);

struct ProjectConfig {
  std::filesystem::path corpus_root = "corpus";
  std::vector<GroupRule> groups;
  std::string research_question;
  std::string model = "gpt-4o";

  // Gateway
  GatewayMode mode = GatewayMode::replay;
  std::string base_url = "https://api.openai.com/v1";
  std::string auth_header = "Authorization";
  std::string query;
  int max_in_flight = 4;
  int max_attempts = 3;
  int workers = 4;

  // Coding
  CodeValidation validation;
  std::size_t chunk_words = 0;

  // Dedup
  std::string oracle = "llm";
  std::size_t dedup_batch = 20;
  bool rationale = false;

  // Theming
  std::optional<std::size_t> n_themes;
  bool strict_assign = false;
  std::size_t n_sub = 14;
  std::size_t n_top = 10;

  // Audit
  std::optional<std::size_t> audit_sample;
  std::uint64_t seed = 0;
  audit::Thresholds thresholds;

  // Baseline
  std::size_t baseline_context_limit = 16000;
  std::size_t baseline_min_quote_words = 3;

  // Report
  std::string participant_checking = "Not applicable, secondary data";
  std::map<int, std::string> coreq_overrides;
};

nlohmann::json to_json(const ProjectConfig& c);
// Missing keys take their defaults; unknown keys are ignored.
ProjectConfig config_from_json(const nlohmann::json& j);

struct RunOptions {
  std::optional<GatewayMode> mode;
  std::optional<std::string> oracle;   // llm | string-equality | all-false | recorded:FILE
  std::optional<std::size_t> themes;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sample;
  std::optional<bool> strict_assign;
  std::optional<bool> rationale;
  std::optional<std::filesystem::path> corpus;
  // Overrides the HTTP transport; tests and fixture generation use this.
  std::shared_ptr<Transport> transport;
  std::string actor = "cli";
};

struct StageReport {
  Stage stage = Stage::ingest;
  StageStatus status = StageStatus::pending;
  std::size_t gateway_calls = 0;
  std::size_t live_calls = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;
};

nlohmann::json to_json(const StageReport& r);

// Exclusive lock on a project directory for the lifetime of the object.
class ProjectLock {
 public:
  explicit ProjectLock(const std::filesystem::path& dir);
  ~ProjectLock();
  ProjectLock(const ProjectLock&) = delete;
  ProjectLock& operator=(const ProjectLock&) = delete;

 private:
  std::filesystem::path file_;
};

// A project directory: config, stage state and artifacts. Every method
// reads from and writes to disk, so several Project objects over the same
// directory stay consistent.
class Project {
 public:
  static Project init(const std::filesystem::path& dir, const ProjectConfig& config);
  static Project open(const std::filesystem::path& dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const ProjectConfig& config() const noexcept { return config_; }
  std::filesystem::path artifacts_dir() const { return dir_ / "artifacts"; }
  std::filesystem::path report_dir() const { return dir_ / "report"; }

  StageStatus status(Stage s) const;
  std::map<Stage, StageStatus> statuses() const;
  bool baseline_done() const;
  nlohmann::json state_json() const;

  // Throws PreconditionError naming the missing predecessor.
  void require_ready(Stage s) const;
  StageReport run(Stage s, const RunOptions& options = {});

  BaselineResult run_baseline(const RunOptions& options = {});
  // Writes report/comparison.{md,json}; returns the json form.
  nlohmann::json compare(const RunOptions& options = {});

  // Review actions; each appends one human_edit trail event.
  MergeDecision accept_merge(const std::string& id, const std::string& actor);
  MergeDecision reject_merge(const std::string& id, const std::string& actor);
  Theme edit_theme(const std::string& id, const nlohmann::json& patch, const std::string& actor);
  ParentTheme promote_subtheme(std::size_t index, const std::string& actor);

  AuditTrail trail() const { return AuditTrail(dir_ / "trail" / "log.jsonl"); }
  PromptSet prompts() const;

  Corpus corpus() const;
  std::vector<CodeSet> codesets() const;
  std::vector<UniqueCode> unique_codes() const;
  std::vector<MergeDecision> merge_decisions() const;
  ThemeSet themes() const;
  ThemeHierarchy hierarchy() const;
  std::optional<nlohmann::json> read_artifact(const std::filesystem::path& relative) const;

 private:
  explicit Project(std::filesystem::path dir);
  void load();
  void save_state() const;
  void set_status(Stage s, StageStatus st);
  void mark_downstream_stale(Stage s);
  void write_artifact(const std::filesystem::path& relative, const nlohmann::json& j) const;
  std::unique_ptr<Gateway> make_gateway(const RunOptions& options) const;
  void log_calls(Stage s, const CallLog& log) const;
  void log_stage(Stage s, const StageReport& r) const;

  void run_ingest(const RunOptions& o, StageReport& r);
  void run_code(const RunOptions& o, StageReport& r);
  void run_dedup(const RunOptions& o, StageReport& r);
  void run_themes(const RunOptions& o, StageReport& r);
  void run_hierarchy(const RunOptions& o, StageReport& r);
  void run_audit(const RunOptions& o, StageReport& r);
  void run_report(const RunOptions& o, StageReport& r);

  std::filesystem::path dir_;
  ProjectConfig config_;
  std::map<Stage, StageStatus> status_;
  bool baseline_ = false;
};

// The theme set used for audit and reporting: themes.json when the themes
// stage is done, else the sub-themes of the hierarchy.
ThemeSet reporting_themes(const Project& p);

// Reads a file as UTF-8 text and parses it as JSON.
nlohmann::json read_json(const std::filesystem::path& file);
void write_json(const std::filesystem::path& file, const nlohmann::json& j);

}  // namespace qta
