#include "support.hpp"

#include <atomic>
#include <random>

#include "qta/error.hpp"
#include "qta/text.hpp"
#include "synthetic.hpp"

namespace qta::testing {

namespace fs = std::filesystem;

fs::path data_dir() { return QTA_TEST_DATA; }

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("qta-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void copy_fixture(const std::string& name, const fs::path& dest) {
  fs::create_directories(dest);
  fs::copy(data_dir() / name, dest, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = text::read_file(e.path());
  }
  return out;
}

HttpReply NoNetworkTransport::post_chat(const std::string&) {
  ++attempts_;
  throw TransportError("network access attempted in a test");
}

std::string completion_body(const std::string& content, const std::string& finish) {
  nlohmann::json j = {{"choices", nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", content}}},
                                                          {"finish_reason", finish}}})}};
  return j.dump();
}

HttpReply CannedTransport::post_chat(const std::string& body) {
  bodies_.push_back(body);
  const HttpReply r = replies_.at(std::min(next_, replies_.size() - 1));
  ++next_;
  return r;
}

HttpReply FnTransport::post_chat(const std::string& body) {
  const std::string prompt = nlohmann::json::parse(body).at("messages").back().at("content");
  {
    std::lock_guard lock(mu_);
    prompts_.push_back(prompt);
  }
  return {200, completion_body(fn_(prompt))};
}

std::size_t FnTransport::calls() const {
  std::lock_guard lock(mu_);
  return prompts_.size();
}

std::vector<std::string> FnTransport::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

Project replay_project(const std::string& fixture, const fs::path& dest,
                       std::initializer_list<Stage> stages) {
  copy_fixture(fixture, dest);
  Project p = Project::open(dest);
  RunOptions o;
  o.transport = std::make_shared<NoNetworkTransport>();
  for (Stage s : stages) p.run(s, o);
  return Project::open(dest);
}

std::shared_ptr<Transport> parents_hierarchy_transport() {
  static const synth::Dataset data = synth::parents_dataset();
  auto model = std::make_shared<synth::ScriptedModel>(data);
  return std::make_shared<FnTransport>([model](const std::string& prompt) {
    if (prompt.find("list of sub-themes") == std::string::npos) return model->respond(prompt);
    nlohmann::json themes = nlohmann::json::array();
    themes.push_back({{"name", "Getting help"}, {"description", "Finding and using services."}, {"subthemes", {0, 1, 2}}});
    themes.push_back({{"name", "Daily life"}, {"description", "Routines at home and school."}, {"subthemes", {3, 4}}});
    themes.push_back({{"name", "Feelings"}, {"description", "Worry, relief and fatigue."}, {"subthemes", {4, 5, 6}}});
    return nlohmann::json{{"themes", themes}}.dump(2);
  });
}

EllipsisPassageResult ellipsis_passage_audit() {
  const fs::path dir = data_dir() / "ellipsis_passage";
  const Corpus c = ingest_corpus(dir / "corpus", {});
  const nlohmann::json q = nlohmann::json::parse(text::read_file(dir / "quotes.json"));
  return {audit::classify_quote(q.at("system_quote").get<std::string>(), c),
          audit::classify_quote(q.at("edited_quote").get<std::string>(), c)};
}

std::vector<Audit21Item> audit21_items() {
  const nlohmann::json j = nlohmann::json::parse(text::read_file(data_dir() / "audit21" / "quotes.json"));
  std::vector<Audit21Item> out;
  for (const auto& q : j.at("quotes")) {
    out.push_back({q.at("code_ref"), q.at("quote"), q.at("constructed_as")});
  }
  return out;
}

audit::AuditResult audit21_run() {
  const fs::path dir = data_dir() / "audit21";
  const nlohmann::json j = nlohmann::json::parse(text::read_file(dir / "quotes.json"));
  const Corpus c = ingest_corpus(dir / j.at("corpus").get<std::string>(), {});
  std::vector<audit::QuoteItem> items;
  for (const auto& q : audit21_items()) items.push_back({q.code_ref, q.quote});
  return audit::audit_codeset(items, c, std::size_t{21}, j.at("seed").get<std::uint64_t>());
}

ThemeHierarchy hierarchy_replay(std::shared_ptr<Transport> transport) {
  const fs::path dir = data_dir() / "hierarchy";
  const nlohmann::json settings = nlohmann::json::parse(text::read_file(dir / "settings.json"));
  std::vector<UniqueCode> codes;
  for (const auto& c : nlohmann::json::parse(text::read_file(dir / "unique_codes.json"))) {
    codes.push_back(unique_code_from_json(c));
  }
  GatewayOptions go;
  go.mode = GatewayMode::replay;
  go.cache_dir = dir / "cache";
  Gateway gw(go, std::move(transport));
  const PromptSet ps;
  HierarchyOptions h;
  h.theming.params = theming_params(settings.at("model").get<std::string>());
  h.theming.research_question = settings.at("research_question").get<std::string>();
  h.theming.prompt_template = ps.get(PromptId::themes);
  h.n_sub = settings.at("n_sub").get<std::size_t>();
  h.n_top = settings.at("n_top").get<std::size_t>();
  h.subtheme_template = ps.get(PromptId::subthemes);
  return generate_hierarchy(codes, gw, h);
}

}  // namespace qta::testing
