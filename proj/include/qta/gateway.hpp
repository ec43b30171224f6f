#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qta {

// Smallest nucleus mass accepted by the gateway; stands in for "top_p = 0".
inline constexpr double kMinimalTopP = 1e-6;

struct GenerationParams {
  std::string model;
  double temperature = 0.0;  // [0, 2]
  double top_p = 1.0;        // (0, 1]
  int max_output_tokens = 4096;

  bool operator==(const GenerationParams&) const = default;
};

// Throws std::invalid_argument when a field is out of range.
void validate(const GenerationParams& params);

// Stage defaults: deterministic coding and duplicate detection, a little
// creativity for theme induction.
GenerationParams coding_params(std::string model);
GenerationParams dedup_params(std::string model);
GenerationParams theming_params(std::string model);

nlohmann::json to_json(const GenerationParams& params);
GenerationParams params_from_json(const nlohmann::json& j);

enum class FinishReason { complete, truncated, error };
enum class Provenance { live, replay };
enum class GatewayMode { live, replay, record };

std::string_view to_string(FinishReason r);
std::string_view to_string(Provenance p);
std::string_view to_string(GatewayMode m);
FinishReason parse_finish_reason(std::string_view s);
GatewayMode parse_gateway_mode(std::string_view s);

struct ChatRequest {
  GenerationParams params;
  std::optional<std::string> system_text;
  std::string user_text;
};

struct ChatResponse {
  std::string raw_text;
  FinishReason finish_reason = FinishReason::complete;
  Provenance provenance = Provenance::live;
  std::string digest;
};

// SHA-256 over (model, temperature, top_p, system_text, user_text).
struct CacheKey {
  std::string digest;

  static CacheKey of(const ChatRequest& request);
  bool operator==(const CacheKey&) const = default;
};

// One gateway round trip as seen by the audit trail.
struct CallRecord {
  std::string digest;
  GenerationParams params;
  Provenance provenance = Provenance::live;
  std::string purpose;
};

class CallLog {
 public:
  void add(CallRecord record);
  void append(const CallLog& other);
  std::vector<CallRecord> records() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

// Carries one OpenAI-compatible chat/completions POST. Implementations throw
// TransportError when no HTTP reply could be obtained at all.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post_chat(const std::string& json_body) = 0;
};

struct HttpEndpoint {
  std::string base_url;                    // e.g. https://api.openai.com/v1
  std::string api_key;                     // read from the environment by callers
  std::string auth_header = "Authorization";  // "api-key" for Azure deployments
  std::string query;                       // optional, e.g. "api-version=2024-06-01"
  double timeout_seconds = 120.0;
};

std::shared_ptr<Transport> make_http_transport(HttpEndpoint endpoint);

std::string build_chat_body(const ChatRequest& request);

struct ParsedCompletion {
  std::string content;
  FinishReason finish_reason = FinishReason::complete;
};
ParsedCompletion parse_chat_completion(std::string_view body);

struct GatewayOptions {
  GatewayMode mode = GatewayMode::replay;
  std::filesystem::path cache_dir;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  int max_in_flight = 4;
};

struct JsonReply {
  nlohmann::json value;
  ChatResponse response;
  bool repaired = false;
};

inline constexpr std::string_view kRepairInstruction =
    "\n\nYour previous reply could not be parsed. Respond with valid JSON only, "
    "with no other text.";

// Thread-safe. In replay mode the transport is never touched.
class Gateway {
 public:
  Gateway(GatewayOptions options, std::shared_ptr<Transport> transport);

  GatewayMode mode() const noexcept { return options_.mode; }

  ChatResponse complete(const ChatRequest& request, std::string_view purpose = {},
                        CallLog* log = nullptr);
  ChatResponse complete(const ChatRequest& request, GatewayMode mode,
                        std::string_view purpose = {}, CallLog* log = nullptr);

  // complete + extract_json, with one repair retry on malformed output.
  JsonReply complete_json(const ChatRequest& request, std::string_view purpose = {},
                          CallLog* log = nullptr);

  std::size_t live_calls() const noexcept { return live_calls_.load(); }
  std::size_t replay_calls() const noexcept { return replay_calls_.load(); }
  std::size_t total_calls() const noexcept { return live_calls() + replay_calls(); }

  std::filesystem::path cache_path(const CacheKey& key) const;

 private:
  ChatResponse call_live(const ChatRequest& request, const CacheKey& key);
  ChatResponse read_cache(const CacheKey& key) const;
  void write_cache(const ChatRequest& request, const ChatResponse& response) const;

  GatewayOptions options_;
  std::shared_ptr<Transport> transport_;
  std::counting_semaphore<256> in_flight_;
  std::atomic<std::size_t> live_calls_{0};
  std::atomic<std::size_t> replay_calls_{0};
};

// First balanced JSON object or array in free text. Code fences and prose
// around the value are tolerated, as are a few habits of chat models
// (True/False/None literals, trailing commas, // comments).
std::optional<nlohmann::json> find_json(std::string_view text);

// Throws MalformedOutputError when the response is not complete or contains
// no parseable JSON.
nlohmann::json extract_json(const ChatResponse& response);

}  // namespace qta
