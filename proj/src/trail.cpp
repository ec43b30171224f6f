#include "qta/trail.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "qta/error.hpp"
#include "qta/text.hpp"

namespace qta {

using nlohmann::json;

AuditTrail::AuditTrail(std::filesystem::path file) : file_(std::move(file)) {}

std::string AuditTrail::hash_event(const std::string& prev_hash, const json& event) {
  json body = event;
  body.erase("hash");
  return text::sha256_hex(prev_hash + body.dump());
}

std::vector<json> AuditTrail::events() const {
  std::vector<json> out;
  std::ifstream in(file_);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    out.push_back(json::parse(line));
  }
  return out;
}

json AuditTrail::append(json event) {
  const auto existing = events();
  const std::string prev =
      existing.empty() ? std::string(kGenesisHash) : existing.back().at("hash").get<std::string>();
  event["seq"] = existing.size() + 1;
  if (!event.contains("timestamp")) event["timestamp"] = utc_timestamp();
  event["prev_hash"] = prev;
  event["hash"] = hash_event(prev, event);
  std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot open audit trail: " + file_.string());
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot write audit trail: " + file_.string());
  return event;
}

std::string AuditTrail::verify() const {
  std::string prev(kGenesisHash);
  std::size_t seq = 0;
  for (const auto& e : events()) {
    ++seq;
    if (e.value("seq", std::size_t{0}) != seq) return "event " + std::to_string(seq) + ": sequence gap";
    if (e.value("prev_hash", "") != prev) return "event " + std::to_string(seq) + ": broken link";
    const std::string h = hash_event(prev, e);
    if (e.value("hash", "") != h) return "event " + std::to_string(seq) + ": hash mismatch";
    prev = h;
  }
  return {};
}

json gateway_event(std::string_view stage, const CallRecord& call) {
  return {{"kind", "gateway_call"},
          {"stage", stage},
          {"digest", call.digest},
          {"params", to_json(call.params)},
          {"provenance", to_string(call.provenance)},
          {"purpose", call.purpose}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace qta
