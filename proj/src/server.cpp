#include "qta/server.hpp"

#include "httplib.h"
#include "qta/error.hpp"
#include "qta/project.hpp"

namespace qta {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(2), "application/json");
}

// Maps exceptions onto HTTP statuses.
template <class Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const PreconditionError& e) {
    send_json(res, {{"error", e.what()}}, 409);
  } catch (const std::out_of_range& e) {
    send_json(res, {{"error", e.what()}}, 404);
  } catch (const std::invalid_argument& e) {
    send_json(res, {{"error", e.what()}}, 400);
  } catch (const json::exception& e) {
    send_json(res, {{"error", e.what()}}, 400);
  } catch (const std::exception& e) {
    send_json(res, {{"error", e.what()}}, 500);
  }
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);
  if (!j.is_object()) throw std::invalid_argument("request body must be a JSON object");
  return j;
}

std::string actor_of(const json& body) { return body.value("actor", std::string("reviewer")); }

}  // namespace

ReviewServer::ReviewServer(fs::path project_dir, ServerOptions options)
    : dir_(std::move(project_dir)), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  Project::open(dir_);  // fail early on a bad directory
  install_routes();
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind() {
  if (options_.port == 0) {
    const int port = server_->bind_to_any_port(options_.host);
    if (port < 0) throw Error("cannot bind to " + options_.host);
    return port;
  }
  if (!server_->bind_to_port(options_.host, options_.port)) {
    throw Error("cannot bind to " + options_.host + ":" + std::to_string(options_.port) +
                " (port in use?)");
  }
  return options_.port;
}

void ReviewServer::listen() { server_->listen_after_bind(); }

void ReviewServer::stop() {
  if (server_) server_->stop();
}

void ReviewServer::install_routes() {
  auto& s = *server_;
  const fs::path dir = dir_;

  const auto artifact = [dir](const char* rel, json fallback) {
    return [dir, rel, fallback](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        const auto j = Project::open(dir).read_artifact(rel);
        if (!j && fallback.is_null()) throw std::out_of_range(std::string("artifact not available: ") + rel);
        send_json(res, j ? *j : fallback);
      });
    };
  };

  s.Get("/api/state", [dir](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, Project::open(dir).state_json()); });
  });
  s.Get("/api/documents", [dir](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json out = json::array();
      const Corpus corpus = Project::open(dir).corpus();
      for (const auto& d : corpus.documents()) {
        out.push_back({{"id", d.id}, {"group", d.group}, {"word_count", d.word_count}});
      }
      send_json(res, out);
    });
  });
  s.Get(R"(/api/documents/(.+))", [dir](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Corpus c = Project::open(dir).corpus();
      const Document* d = c.find(req.matches[1].str());
      if (d == nullptr) throw std::out_of_range("no document " + req.matches[1].str());
      send_json(res, {{"id", d->id}, {"group", d->group}, {"word_count", d->word_count}, {"text", d->text}});
    });
  });
  s.Get("/api/codes", [dir](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json out = json::array();
      for (const auto& set : Project::open(dir).codesets()) out.push_back(to_json(set));
      send_json(res, out);
    });
  });
  s.Get("/api/unique-codes", artifact("unique_codes.json", nullptr));
  s.Get("/api/merge-decisions", artifact("merge_decisions.json", json::array()));
  s.Get("/api/saturation", artifact("saturation.json", nullptr));
  s.Get("/api/themes", artifact("themes.json", nullptr));
  s.Get("/api/hierarchy", artifact("hierarchy.json", nullptr));
  s.Get("/api/audit", artifact("audit.json", nullptr));
  s.Get("/api/trail", [dir](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      const AuditTrail t = Project::open(dir).trail();
      send_json(res, {{"events", t.events()}, {"chain_problem", t.verify()}});
    });
  });

  s.Post(R"(/api/merge-decisions/([^/]+)/(accept|reject))",
         [this, dir](const httplib::Request& req, httplib::Response& res) {
           guarded(res, [&] {
             std::lock_guard lock(write_mu_);
             const json body = body_of(req);
             Project p = Project::open(dir);
             const MergeDecision d = req.matches[2].str() == "accept"
                                         ? p.accept_merge(req.matches[1].str(), actor_of(body))
                                         : p.reject_merge(req.matches[1].str(), actor_of(body));
             send_json(res, {{"decision", to_json(d)}, {"unique_codes", p.unique_codes().size()},
                             {"state", Project::open(dir).state_json()}});
           });
         });
  s.Post(R"(/api/themes/([^/]+))", [this, dir](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::lock_guard lock(write_mu_);
      const json body = body_of(req);
      Project p = Project::open(dir);
      const Theme t = p.edit_theme(req.matches[1].str(), body, actor_of(body));
      send_json(res, {{"theme", to_json(t)}, {"state", Project::open(dir).state_json()}});
    });
  });
  s.Post(R"(/api/hierarchy/subthemes/(\d+)/promote)",
         [this, dir](const httplib::Request& req, httplib::Response& res) {
           guarded(res, [&] {
             std::lock_guard lock(write_mu_);
             const json body = body_of(req);
             Project p = Project::open(dir);
             const ParentTheme parent = p.promote_subtheme(std::stoul(req.matches[1].str()), actor_of(body));
             send_json(res, {{"parent",
                              {{"id", parent.id},
                               {"name", parent.name},
                               {"subthemes", parent.subtheme_indices}}},
                             {"state", Project::open(dir).state_json()}});
           });
         });
  s.Post(R"(/api/stages/([a-z]+)/run)", [this, dir](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::lock_guard lock(write_mu_);
      const json body = body_of(req);
      RunOptions o;
      if (body.contains("mode")) o.mode = parse_gateway_mode(body["mode"].get<std::string>());
      if (body.contains("oracle")) o.oracle = body["oracle"].get<std::string>();
      if (body.contains("themes")) o.themes = body["themes"].get<std::size_t>();
      o.transport = options_.transport;
      o.actor = actor_of(body);
      Project p = Project::open(dir);
      const Stage stage = parse_stage(req.matches[1].str());
      const StageReport r = p.run(stage, o);
      p.trail().append({{"kind", "human_edit"},
                        {"action", "rerun_stage"},
                        {"target", to_string(stage)},
                        {"actor", o.actor}});
      send_json(res, {{"report", to_json(r)}, {"state", Project::open(dir).state_json()}});
    });
  });

  if (!options_.static_dir.empty()) s.set_mount_point("/", options_.static_dir.string());
}

}  // namespace qta
