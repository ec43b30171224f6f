#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qta {

inline constexpr std::string_view kUngrouped = "ungrouped";

// One interview transcript. `id` is the path relative to the corpus root
// without the .txt extension.
struct Document {
  std::string id;
  std::string group;
  std::string text;
  std::size_t word_count = 0;
};

// Glob pattern (fnmatch syntax) to participant group. Patterns without a '/'
// match the file name; patterns with one match the relative path.
struct GroupRule {
  std::string pattern;
  std::string group;
};

// Immutable after construction; documents are kept in id order.
class Corpus {
 public:
  Corpus() = default;
  // Throws std::invalid_argument on duplicate ids or blank documents.
  explicit Corpus(std::vector<Document> documents);

  const std::vector<Document>& documents() const noexcept { return documents_; }
  const std::set<std::string>& groups() const noexcept { return groups_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  const Document* find(std::string_view id) const;

 private:
  std::vector<Document> documents_;
  std::set<std::string> groups_;
};

// Reads every *.txt file below `root`. Line endings are normalised to "\n";
// all other bytes are kept as-is.
Corpus ingest_corpus(const std::filesystem::path& root, std::span<const GroupRule> rules);

std::string group_for(std::string_view relative_path, std::span<const GroupRule> rules);

struct ParticipantCounts {
  std::map<std::string, std::size_t> by_group;
  std::size_t total = 0;
};

ParticipantCounts count_participants(const Corpus& corpus);

std::string normalize_line_endings(std::string_view text);

nlohmann::json to_json(const Corpus& corpus);
Corpus corpus_from_json(const nlohmann::json& j);

}  // namespace qta
