#pragma once

#include <filesystem>
#include <functional>
#include <mutex>
#include <map>
#include <string>

#include "qta/gateway.hpp"
#include "qta/project.hpp"

namespace qta::testing {

std::filesystem::path data_dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Copies tests/data/<name> into `dest` (created if needed).
void copy_fixture(const std::string& name, const std::filesystem::path& dest);

// relative path -> file bytes, for every regular file below `dir`.
std::map<std::string, std::string> read_tree(const std::filesystem::path& dir);

// Fails every call; proves a code path never reaches the network.
class NoNetworkTransport : public Transport {
 public:
  HttpReply post_chat(const std::string&) override;
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_ = 0;
};

// Canned chat-completion body around `content`.
std::string completion_body(const std::string& content, const std::string& finish = "stop");

// Returns fixed replies in order, then repeats the last one.
class CannedTransport : public Transport {
 public:
  explicit CannedTransport(std::vector<HttpReply> replies) : replies_(std::move(replies)) {}
  HttpReply post_chat(const std::string& body) override;
  const std::vector<std::string>& bodies() const noexcept { return bodies_; }

 private:
  std::vector<HttpReply> replies_;
  std::vector<std::string> bodies_;
  std::size_t next_ = 0;
};

// Answers each prompt (the last message's content) with fn(prompt). Thread-safe.
class FnTransport : public Transport {
 public:
  explicit FnTransport(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  HttpReply post_chat(const std::string& body) override;
  std::size_t calls() const;
  std::vector<std::string> prompts() const;

 private:
  std::function<std::string(const std::string&)> fn_;
  mutable std::mutex mu_;
  std::vector<std::string> prompts_;
};

// Copies a fixture project and runs `stages` in replay mode with no network.
Project replay_project(const std::string& fixture, const std::filesystem::path& dest,
                       std::initializer_list<Stage> stages);

// Scripted model for a hierarchy over the parents fixture codes: sub-themes
// come from the parents theme plan, and the parent grouping places
// sub-theme 4 twice and leaves sub-theme 7 out.
std::shared_ptr<Transport> parents_hierarchy_transport();

// Scenarios over the checked-in fixtures, shared by unit and acceptance tests.
struct EllipsisPassageResult {
  audit::QuoteAuditRecord system;
  audit::QuoteAuditRecord edited;
};
EllipsisPassageResult ellipsis_passage_audit();

struct Audit21Item {
  std::string code_ref;
  std::string quote;
  std::string constructed_as;
};
std::vector<Audit21Item> audit21_items();
// Audits the audit21 quotes with the stored sample size and seed.
audit::AuditResult audit21_run();

// Rebuilds the hierarchy fixture in replay mode; throws CacheMissError
// when the cache is out of date.
ThemeHierarchy hierarchy_replay(std::shared_ptr<Transport> transport);

}  // namespace qta::testing
