#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qta/gateway.hpp"

namespace qta {

inline constexpr std::string_view kGenesisHash =
    "0000000000000000000000000000000000000000000000000000000000000000";

// Append-only JSON-lines log. Each event stores the previous event's hash
// and its own hash over (prev_hash + canonical event without "hash").
class AuditTrail {
 public:
  explicit AuditTrail(std::filesystem::path file);

  // Adds seq, timestamp (unless present), prev_hash and hash; returns the stored event.
  nlohmann::json append(nlohmann::json event);
  std::vector<nlohmann::json> events() const;
  // Empty string when the chain is intact, else a description of the first break.
  std::string verify() const;

  const std::filesystem::path& path() const noexcept { return file_; }

  static std::string hash_event(const std::string& prev_hash, const nlohmann::json& event);

 private:
  std::filesystem::path file_;
};

nlohmann::json gateway_event(std::string_view stage, const CallRecord& call);
std::string utc_timestamp();

}  // namespace qta
