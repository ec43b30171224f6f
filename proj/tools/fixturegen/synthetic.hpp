#pragma once

// Synthetic interview corpora and a scripted chat model that answers the
// pipeline's prompts from a known plan. Used to record the replay fixtures
// under tests/data and to check that the checked-in copies are current.

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qta/gateway.hpp"

namespace qta::synth {

struct Concept {
  std::string name;  // variant 0
  std::vector<std::string> variants;
  std::string description;
};

struct PlannedCode {
  std::size_t concept_id = 0;
  std::string name;
  std::string description;
  std::string quote;
};

struct PlannedDoc {
  std::string id;
  std::string text;
  std::vector<PlannedCode> codes;
  std::vector<std::string> sentences;  // participant sentences used as quote material
  bool malformed_first_reply = false;
};

struct ThemePlan {
  std::string name;
  std::string description;
  std::vector<std::size_t> members;  // concept ids, or sub-theme indices for parents
};

struct Dataset {
  std::string name;
  std::string group;
  std::vector<Concept> concepts;
  std::vector<PlannedDoc> docs;
  std::vector<ThemePlan> themes;         // over concepts
  std::vector<ThemePlan> parent_themes;  // over sub-themes (hierarchy only)
  std::string baseline_reply;
};

inline constexpr std::string_view kResearchQuestion =
    "How do parents and practitioners describe everyday support for families living with a "
    "long-term condition?";

Dataset parents_dataset();
Dataset practitioners_dataset();
Dataset hierarchy_dataset();

// Answers every prompt of the pipeline from a Dataset. Thread-safe.
class ScriptedModel : public Transport {
 public:
  explicit ScriptedModel(const Dataset& data);
  HttpReply post_chat(const std::string& json_body) override;
  std::size_t calls() const;

  std::string respond(const std::string& prompt);

 private:
  std::optional<std::size_t> concept_of(const std::string& name) const;
  std::string code_reply(const std::string& prompt);
  std::string duplicate_reply(const std::string& prompt) const;
  std::string themes_reply(const std::string& prompt) const;
  std::string parents_reply(const std::string& prompt) const;
  std::string rationale_reply(const std::string& prompt) const;

  const Dataset& data_;
  std::map<std::string, std::size_t> name_to_concept_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

// Writes parents/, practitioners/, hierarchy/, audit21/ and ellipsis_passage/ below `root`.
void generate_all(const std::filesystem::path& root);

}  // namespace qta::synth
