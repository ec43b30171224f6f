#include "qta/prompts.hpp"

#include <stdexcept>

#include "qta/prompts_embedded.hpp"
#include "qta/text.hpp"

namespace qta {

std::string_view default_template(PromptId id) {
  switch (id) {
    case PromptId::initial_coding: return embedded::k_initial_coding;
    case PromptId::baseline: return embedded::k_baseline;
    case PromptId::duplicates: return embedded::k_duplicates;
    case PromptId::themes: return embedded::k_themes;
    case PromptId::subthemes: return embedded::k_subthemes;
    case PromptId::merge_rationale: return embedded::k_merge_rationale;
  }
  throw std::invalid_argument("unknown prompt id");
}

std::string_view template_filename(PromptId id) {
  switch (id) {
    case PromptId::initial_coding: return "initial_coding.txt";
    case PromptId::baseline: return "baseline.txt";
    case PromptId::duplicates: return "duplicates.txt";
    case PromptId::themes: return "themes.txt";
    case PromptId::subthemes: return "subthemes.txt";
    case PromptId::merge_rationale: return "merge_rationale.txt";
  }
  throw std::invalid_argument("unknown prompt id");
}

namespace {

bool is_slot_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& slots,
                   std::span<const std::string_view> required) {
  for (std::string_view name : required) {
    const std::string token = "{" + std::string(name) + "}";
    if (tmpl.find(token) == std::string_view::npos) {
      throw std::invalid_argument("prompt template lacks the " + token + " slot");
    }
  }
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && is_slot_char(tmpl[j])) ++j;
      if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
        auto it = slots.find(std::string(tmpl.substr(i + 1, j - i - 1)));
        if (it != slots.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

PromptSet::PromptSet() {
  for (PromptId id : kAllPrompts) templates_[id] = std::string(default_template(id));
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet set;
  for (PromptId id : kAllPrompts) {
    const auto path = dir / template_filename(id);
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) set.templates_[id] = text::read_file(path);
  }
  return set;
}

const std::string& PromptSet::get(PromptId id) const { return templates_.at(id); }

void PromptSet::set(PromptId id, std::string text) { templates_[id] = std::move(text); }

std::string PromptSet::digest(PromptId id) const { return text::sha256_hex(get(id)); }

void PromptSet::write_to(const std::filesystem::path& dir) const {
  for (const auto& [id, body] : templates_) text::write_file_atomic(dir / template_filename(id), body);
}

}  // namespace qta
