#include "qta/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "qta/error.hpp"
#include "qta/text.hpp"

namespace qta {

namespace fs = std::filesystem;
using nlohmann::json;

void validate(const GenerationParams& p) {
  if (p.model.empty()) throw std::invalid_argument("model identifier is empty");
  if (!(p.temperature >= 0.0 && p.temperature <= 2.0)) {
    throw std::invalid_argument("temperature must be within [0, 2]");
  }
  if (!(p.top_p > 0.0 && p.top_p <= 1.0)) {
    throw std::invalid_argument("top_p must be within (0, 1]");
  }
  if (p.max_output_tokens <= 0) throw std::invalid_argument("max_output_tokens must be positive");
}

GenerationParams coding_params(std::string model) {
  return {std::move(model), 0.0, kMinimalTopP, 4096};
}

GenerationParams dedup_params(std::string model) {
  return {std::move(model), 0.0, kMinimalTopP, 1024};
}

GenerationParams theming_params(std::string model) {
  return {std::move(model), 0.1, 1.0, 4096};
}

json to_json(const GenerationParams& p) {
  return {{"model", p.model},
          {"temperature", p.temperature},
          {"top_p", p.top_p},
          {"max_output_tokens", p.max_output_tokens}};
}

GenerationParams params_from_json(const json& j) {
  GenerationParams p;
  p.model = j.at("model").get<std::string>();
  p.temperature = j.value("temperature", 0.0);
  p.top_p = j.value("top_p", 1.0);
  p.max_output_tokens = j.value("max_output_tokens", 4096);
  validate(p);
  return p;
}

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::complete: return "complete";
    case FinishReason::truncated: return "truncated";
    case FinishReason::error: return "error";
  }
  return "error";
}

std::string_view to_string(Provenance p) { return p == Provenance::live ? "live" : "replay"; }

std::string_view to_string(GatewayMode m) {
  switch (m) {
    case GatewayMode::live: return "live";
    case GatewayMode::replay: return "replay";
    case GatewayMode::record: return "record";
  }
  return "replay";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "complete") return FinishReason::complete;
  if (s == "truncated") return FinishReason::truncated;
  return FinishReason::error;
}

GatewayMode parse_gateway_mode(std::string_view s) {
  if (s == "live") return GatewayMode::live;
  if (s == "replay") return GatewayMode::replay;
  if (s == "record") return GatewayMode::record;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected live|replay|record)");
}

CacheKey CacheKey::of(const ChatRequest& r) {
  // JSON array keeps field boundaries unambiguous.
  json key = json::array({r.params.model, r.params.temperature, r.params.top_p,
                          r.system_text ? json(*r.system_text) : json(nullptr), r.user_text});
  return CacheKey{text::sha256_hex(key.dump())};
}

void CallLog::add(CallRecord record) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(record));
}

void CallLog::append(const CallLog& other) {
  auto recs = other.records();
  std::lock_guard lock(mu_);
  records_.insert(records_.end(), recs.begin(), recs.end());
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::string build_chat_body(const ChatRequest& r) {
  json messages = json::array();
  if (r.system_text) messages.push_back({{"role", "system"}, {"content", *r.system_text}});
  messages.push_back({{"role", "user"}, {"content", r.user_text}});
  json body = {{"model", r.params.model},
               {"messages", messages},
               {"temperature", r.params.temperature},
               {"top_p", r.params.top_p},
               {"max_tokens", r.params.max_output_tokens}};
  return body.dump();
}

ParsedCompletion parse_chat_completion(std::string_view body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw TransportError("chat completion reply is not JSON");
  }
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw TransportError("chat completion reply has no choices");
  }
  const json& choice = (*choices)[0];
  ParsedCompletion out;
  if (choice.contains("message") && choice["message"].contains("content") &&
      choice["message"]["content"].is_string()) {
    out.content = choice["message"]["content"].get<std::string>();
  }
  const std::string reason =
      choice.contains("finish_reason") && choice["finish_reason"].is_string()
          ? choice["finish_reason"].get<std::string>()
          : "stop";
  if (reason == "stop") {
    out.finish_reason = FinishReason::complete;
  } else if (reason == "length") {
    out.finish_reason = FinishReason::truncated;
  } else {
    out.finish_reason = FinishReason::error;
  }
  return out;
}

Gateway::Gateway(GatewayOptions options, std::shared_ptr<Transport> transport)
    : options_(std::move(options)),
      transport_(std::move(transport)),
      in_flight_(std::clamp(options_.max_in_flight, 1, 256)) {
  if (options_.max_attempts < 1) options_.max_attempts = 1;
}

fs::path Gateway::cache_path(const CacheKey& key) const {
  return options_.cache_dir / (key.digest + ".json");
}

ChatResponse Gateway::complete(const ChatRequest& request, std::string_view purpose,
                               CallLog* log) {
  return complete(request, options_.mode, purpose, log);
}

ChatResponse Gateway::complete(const ChatRequest& request, GatewayMode mode,
                               std::string_view purpose, CallLog* log) {
  validate(request.params);
  if (request.user_text.empty()) throw std::invalid_argument("user_text is empty");
  const CacheKey key = CacheKey::of(request);
  ChatResponse response;
  if (mode == GatewayMode::replay) {
    response = read_cache(key);
    ++replay_calls_;
  } else {
    response = call_live(request, key);
    ++live_calls_;
    if (mode == GatewayMode::record) write_cache(request, response);
  }
  if (log) log->add({key.digest, request.params, response.provenance, std::string(purpose)});
  return response;
}

ChatResponse Gateway::call_live(const ChatRequest& request, const CacheKey& key) {
  if (!transport_) throw TransportError("no transport configured for live calls");
  const std::string body = build_chat_body(request);
  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    bool retriable = true;
    try {
      HttpReply reply;
      {
        in_flight_.acquire();
        struct Release {
          std::counting_semaphore<256>& s;
          ~Release() { s.release(); }
        } release{in_flight_};
        reply = transport_->post_chat(body);
      }
      if (reply.status == 200) {
        ParsedCompletion parsed = parse_chat_completion(reply.body);
        return {std::move(parsed.content), parsed.finish_reason, Provenance::live, key.digest};
      }
      last_error = "HTTP " + std::to_string(reply.status);
      retriable = reply.status == 429 || reply.status >= 500;
    } catch (const TransportError& e) {
      last_error = e.what();
    }
    if (!retriable) break;
    if (attempt < options_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("chat completion failed after " + std::to_string(options_.max_attempts) +
                       " attempt(s): " + last_error);
}

ChatResponse Gateway::read_cache(const CacheKey& key) const {
  const fs::path path = cache_path(key);
  std::error_code ec;
  if (!fs::exists(path, ec)) throw CacheMissError(key.digest);
  json j = json::parse(text::read_file(path), nullptr, false);
  if (j.is_discarded() || j.value("digest", "") != key.digest) {
    throw Error("corrupt cache record: " + path.string());
  }
  const json& resp = j.at("response");
  return {resp.at("raw_text").get<std::string>(),
          parse_finish_reason(resp.value("finish_reason", "complete")), Provenance::replay,
          key.digest};
}

void Gateway::write_cache(const ChatRequest& request, const ChatResponse& response) const {
  json record = {
      {"digest", response.digest},
      {"request",
       {{"model", request.params.model},
        {"temperature", request.params.temperature},
        {"top_p", request.params.top_p},
        {"max_output_tokens", request.params.max_output_tokens},
        {"system_text", request.system_text ? json(*request.system_text) : json(nullptr)},
        {"user_text", request.user_text}}},
      {"response",
       {{"raw_text", response.raw_text}, {"finish_reason", to_string(response.finish_reason)}}}};
  text::write_file_atomic(cache_path(CacheKey{response.digest}), record.dump(2) + "\n");
}

JsonReply Gateway::complete_json(const ChatRequest& request, std::string_view purpose,
                                 CallLog* log) {
  ChatResponse first = complete(request, purpose, log);
  try {
    return {extract_json(first), first, false};
  } catch (const MalformedOutputError&) {
  }
  ChatRequest retry = request;
  retry.user_text += kRepairInstruction;
  std::string repair_purpose = std::string(purpose) + ":repair";
  ChatResponse second = complete(retry, repair_purpose, log);
  try {
    return {extract_json(second), second, true};
  } catch (const MalformedOutputError& e) {
    throw MalformedOutputError("malformed model output after repair retry", second.raw_text);
  }
}

namespace {

// End index (exclusive) of the balanced value starting at `start`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escape = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escape) {
        escape = false;
      } else if (c == '\\') {
        escape = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Rewrites Python-style literals, trailing commas and comments outside of
// string literals.
std::string lenient_fix(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  bool escape = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out.push_back(c);
      if (escape) {
        escape = false;
      } else if (c == '\\') {
        escape = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') ++i;
      out.push_back('\n');
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      const auto close = s.find("*/", i + 2);
      i = close == std::string_view::npos ? s.size() : close + 1;
      continue;
    }
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && text::is_ascii_space(s[j])) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
      out.push_back(c);
      continue;
    }
    if ((c >= 'A' && c <= 'Z') && (i == 0 || !is_ident_char(s[i - 1]))) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      const std::string_view word = s.substr(i, j - i);
      if (word == "True" || word == "False" || word == "None") {
        out += word == "True" ? "true" : word == "False" ? "false" : "null";
        i = j - 1;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

std::optional<json> parse_candidate(std::string_view candidate) {
  json j = json::parse(candidate, nullptr, false);
  if (!j.is_discarded()) return j;
  j = json::parse(lenient_fix(candidate), nullptr, false);
  if (!j.is_discarded()) return j;
  return std::nullopt;
}

std::optional<json> scan_for_json(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '{' && s[i] != '[') continue;
    const std::size_t end = balanced_end(s, i);
    if (end == std::string_view::npos) continue;
    if (auto j = parse_candidate(s.substr(i, end - i))) return j;
  }
  return std::nullopt;
}

}  // namespace

std::optional<json> find_json(std::string_view s) {
  // Fenced blocks first, so prose such as "[see below]" before the fence
  // cannot shadow the payload.
  std::size_t pos = 0;
  while ((pos = s.find("```", pos)) != std::string_view::npos) {
    std::size_t body = s.find('\n', pos + 3);
    if (body == std::string_view::npos) break;
    std::size_t close = s.find("```", body + 1);
    if (close == std::string_view::npos) close = s.size();
    if (auto j = scan_for_json(s.substr(body + 1, close - body - 1))) return j;
    if (close == s.size()) break;
    pos = close + 3;
  }
  return scan_for_json(s);
}

json extract_json(const ChatResponse& response) {
  if (response.finish_reason != FinishReason::complete) {
    throw MalformedOutputError(
        "model output not complete (" + std::string(to_string(response.finish_reason)) + ")",
        response.raw_text);
  }
  if (auto j = find_json(response.raw_text)) return *std::move(j);
  throw MalformedOutputError("malformed model output", response.raw_text);
}

}  // namespace qta
