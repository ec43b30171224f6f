#include "qta/corpus.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <stdexcept>

#include "qta/error.hpp"
#include "qta/text.hpp"

namespace qta {

namespace fs = std::filesystem;

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
  std::sort(documents_.begin(), documents_.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const Document& d = documents_[i];
    if (i > 0 && documents_[i - 1].id == d.id) {
      throw std::invalid_argument("duplicate document id: " + d.id);
    }
    if (text::trim(d.text).empty()) {
      throw std::invalid_argument("document is empty: " + d.id);
    }
    groups_.insert(d.group);
  }
}

const Document* Corpus::find(std::string_view id) const {
  auto it = std::lower_bound(documents_.begin(), documents_.end(), id,
                             [](const Document& d, std::string_view v) { return d.id < v; });
  if (it == documents_.end() || it->id != id) return nullptr;
  return &*it;
}

std::string normalize_line_endings(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

std::string group_for(std::string_view relative_path, std::span<const GroupRule> rules) {
  const std::string rel(relative_path);
  const auto slash = rel.rfind('/');
  const std::string name = slash == std::string::npos ? rel : rel.substr(slash + 1);
  for (const auto& rule : rules) {
    const bool path_pattern = rule.pattern.find('/') != std::string::npos;
    const std::string& subject = path_pattern ? rel : name;
    if (::fnmatch(rule.pattern.c_str(), subject.c_str(), path_pattern ? FNM_PATHNAME : 0) == 0) {
      return rule.group;
    }
  }
  return std::string(kUngrouped);
}

Corpus ingest_corpus(const fs::path& root, std::span<const GroupRule> rules) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IngestError("corpus root is not a directory: " + root.string());
  }
  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::end(it);
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".txt") files.push_back(it->path());
  }
  if (ec) throw IngestError("cannot scan corpus root " + root.string() + ": " + ec.message());
  if (files.empty()) throw IngestError("no documents");

  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& file : files) {
    std::string raw;
    try {
      raw = text::read_file(file);
    } catch (const Error&) {
      throw IngestError("cannot read document: " + file.string());
    }
    auto rel = fs::relative(file, root).generic_string();
    Document d;
    d.id = rel.substr(0, rel.size() - 4);
    d.group = group_for(rel, rules);
    d.text = normalize_line_endings(raw);
    d.word_count = text::word_count(d.text);
    if (text::trim(d.text).empty()) throw IngestError("document is empty: " + file.string());
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs));
}

ParticipantCounts count_participants(const Corpus& corpus) {
  ParticipantCounts counts;
  for (const auto& d : corpus.documents()) ++counts.by_group[d.group];
  counts.total = corpus.size();
  return counts;
}

nlohmann::json to_json(const Corpus& corpus) {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& d : corpus.documents()) {
    docs.push_back({{"id", d.id},
                    {"group", d.group},
                    {"word_count", d.word_count},
                    {"sha256", text::sha256_hex(d.text)},
                    {"text", d.text}});
  }
  return {{"documents", docs}, {"groups", corpus.groups()}};
}

Corpus corpus_from_json(const nlohmann::json& j) {
  std::vector<Document> docs;
  for (const auto& d : j.at("documents")) {
    Document doc;
    doc.id = d.at("id").get<std::string>();
    doc.group = d.at("group").get<std::string>();
    doc.text = d.at("text").get<std::string>();
    doc.word_count = text::word_count(doc.text);
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs));
}

}  // namespace qta
