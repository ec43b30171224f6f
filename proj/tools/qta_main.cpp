// qta: command-line driver for the thematic analysis pipeline.
#include <csignal>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "qta/error.hpp"
#include "qta/project.hpp"
#include "qta/server.hpp"
#include "qta/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

qta::ReviewServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

void print_report(const qta::StageReport& r) {
  std::cout << "stage " << qta::to_string(r.stage) << ": " << qta::to_string(r.status) << " ("
            << r.gateway_calls << " gateway calls, " << r.live_calls << " live)\n";
  for (const auto& w : r.warnings) std::cout << "  warning: " << w << "\n";
  for (const auto& f : r.failures) std::cout << "  failed: " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM-assisted thematic analysis pipeline"};
  app.require_subcommand(1);

  fs::path project_dir = ".";
  std::string mode;
  std::string oracle;
  std::size_t themes = 0;
  std::uint64_t seed = 0;
  std::size_t sample = 0;
  bool strict_assign = false;
  bool rationale = false;
  fs::path corpus_dir;

  app.add_option("--project", project_dir, "Project directory")->capture_default_str();
  app.add_option("--mode", mode, "Gateway mode")->check(CLI::IsMember({"live", "replay", "record"}));

  auto* init = app.add_subcommand("init", "Create a project directory");
  std::string model;
  std::string question;
  std::vector<std::string> groups;
  init->add_option("--corpus", corpus_dir, "Corpus directory (stored in project.json)");
  init->add_option("--model", model, "Model identifier");
  init->add_option("--research-question", question, "Research question for theming");
  init->add_option("--group", groups, "PATTERN=GROUP glob rule, repeatable");

  auto* ingest = app.add_subcommand("ingest", "Read the corpus (same as `run ingest`)");
  ingest->add_option("--corpus", corpus_dir, "Override the configured corpus directory");

  auto* run = app.add_subcommand("run", "Run one pipeline stage");
  std::string stage_name;
  run->add_option("stage", stage_name, "ingest|code|dedup|themes|hierarchy|audit|report")->required();
  run->add_option("--oracle", oracle, "llm | string-equality | all-false | recorded:FILE");
  run->add_option("--themes", themes, "Ask for N themes (sub-themes for hierarchy)");
  run->add_option("--seed", seed, "Audit sampling seed");
  run->add_option("--sample", sample, "Audit a sample of N quotes");
  run->add_flag("--strict-assign", strict_assign, "Re-prompt once when codes are left unassigned");
  run->add_flag("--rationale", rationale, "Ask the model why each merge happened");
  run->add_option("--corpus", corpus_dir, "Override the corpus directory (ingest)");

  auto* serve = app.add_subcommand("serve", "Serve the review API");
  int port = 8765;
  std::string host = "127.0.0.1";
  fs::path static_dir;
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--static", static_dir, "Directory of UI assets served at /");

  auto* baseline = app.add_subcommand("baseline", "Run the single-prompt baseline");
  auto* compare = app.add_subcommand("compare", "Compare the staged run with the baseline");
  auto* report = app.add_subcommand("report", "Render the report (same as `run report`)");
  auto* status = app.add_subcommand("status", "Show stage statuses");

  CLI11_PARSE(app, argc, argv);

  try {
    qta::RunOptions o;
    if (!mode.empty()) o.mode = qta::parse_gateway_mode(mode);
    if (!oracle.empty()) o.oracle = oracle;
    if (themes > 0) o.themes = themes;
    if (run->count("--seed") > 0) o.seed = seed;
    if (sample > 0) o.sample = sample;
    if (strict_assign) o.strict_assign = true;
    if (rationale) o.rationale = true;
    if (!corpus_dir.empty()) o.corpus = fs::absolute(corpus_dir);

    if (*init) {
      qta::ProjectConfig cfg;
      if (!corpus_dir.empty()) cfg.corpus_root = corpus_dir;
      if (!model.empty()) cfg.model = model;
      cfg.research_question = question;
      for (const auto& g : groups) {
        const auto eq = g.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--group expects PATTERN=GROUP");
        cfg.groups.push_back({g.substr(0, eq), g.substr(eq + 1)});
      }
      qta::Project::init(project_dir, cfg);
      std::cout << "initialised " << project_dir.string() << "\n";
      return 0;
    }
    if (*serve) {
      qta::ServerOptions so;
      so.host = host;
      so.port = port;
      so.static_dir = static_dir;
      qta::ReviewServer server(project_dir, so);
      const int bound = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving " << project_dir.string() << " on http://" << host << ":" << bound << "/api\n"
                << std::flush;
      server.listen();
      g_server = nullptr;
      return 0;
    }

    qta::Project p = qta::Project::open(project_dir);
    if (*status) {
      for (const auto& [s, st] : p.statuses()) {
        std::cout << qta::to_string(s) << ": " << qta::to_string(st) << "\n";
      }
      std::cout << "baseline: " << (p.baseline_done() ? "done" : "pending") << "\n";
      return 0;
    }
    if (*ingest) {
      print_report(p.run(qta::Stage::ingest, o));
      return 0;
    }
    if (*report) {
      print_report(p.run(qta::Stage::report, o));
      return 0;
    }
    if (*run) {
      const auto r = p.run(qta::parse_stage(stage_name), o);
      print_report(r);
      return 0;
    }
    if (*baseline) {
      const auto r = p.run_baseline(o);
      std::cout << "baseline: " << qta::text::word_count(r.raw_text) << " words, "
                << r.estimated_tokens << " estimated input tokens\n";
      for (const auto& w : r.warnings) std::cout << "  warning: " << w << "\n";
      return 0;
    }
    if (*compare) {
      const json j = p.compare(o);
      std::cout << "comparison written to " << (p.report_dir() / "comparison.md").string() << "\n";
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const qta::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
