#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

namespace qta {

enum class PromptId { initial_coding, baseline, duplicates, themes, subthemes, merge_rationale };

inline constexpr std::array kAllPrompts = {PromptId::initial_coding, PromptId::baseline,
                                           PromptId::duplicates,     PromptId::themes,
                                           PromptId::subthemes,      PromptId::merge_rationale};

std::string_view default_template(PromptId id);
std::string_view template_filename(PromptId id);

// Replaces "{name}" for every key in `slots` in a single pass; substituted
// text is never rescanned. Other brace groups are left untouched. Throws
// std::invalid_argument when a name in `required` does not occur in the
// template.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& slots,
                   std::span<const std::string_view> required = {});

// Templates loaded from a directory, falling back to the shipped defaults
// for files that are absent.
class PromptSet {
 public:
  PromptSet();
  static PromptSet load(const std::filesystem::path& dir);

  const std::string& get(PromptId id) const;
  void set(PromptId id, std::string text);
  std::string digest(PromptId id) const;

  // Writes every template into `dir` (used by `init`).
  void write_to(const std::filesystem::path& dir) const;

 private:
  std::map<PromptId, std::string> templates_;
};

}  // namespace qta
