#pragma once

#include <filesystem>

#include <json.hpp>

#include "evcharge/certify.hpp"
#include "evcharge/model.hpp"
#include "evcharge/online.hpp"
#include "evcharge/pricing.hpp"

namespace evcharge {

inline constexpr const char* kInstanceFormat = "evcharge-instance/1";
inline constexpr const char* kTraceFormat = "evcharge-trace/1";
inline constexpr const char* kCertReportFormat = "evcharge-cert-report/1";

void to_json(nlohmann::json& j, const EVRequest& r);
void from_json(const nlohmann::json& j, EVRequest& r);
void to_json(nlohmann::json& j, const StationConfig& c);
void from_json(const nlohmann::json& j, StationConfig& c);
void to_json(nlohmann::json& j, const Bounds& b);
void from_json(const nlohmann::json& j, Bounds& b);
void to_json(nlohmann::json& j, const Instance& inst);
void from_json(const nlohmann::json& j, Instance& inst);
void to_json(nlohmann::json& j, const PricingParams& p);
void from_json(const nlohmann::json& j, PricingParams& p);
void to_json(nlohmann::json& j, const TraceEvent& e);
void from_json(const nlohmann::json& j, TraceEvent& e);
void to_json(nlohmann::json& j, const Trace& t);
void from_json(const nlohmann::json& j, Trace& t);
void to_json(nlohmann::json& j, const DualCertificate& c);
void to_json(nlohmann::json& j, const CheckResult& r);
void to_json(nlohmann::json& j, const CertReport& r);

// File helpers. Malformed documents raise kParseError, unreadable files kIoError.
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const std::filesystem::path& path, const Instance& inst);
Trace load_trace(const std::filesystem::path& path);
void save_trace(const std::filesystem::path& path, const Trace& trace);

}  // namespace evcharge
