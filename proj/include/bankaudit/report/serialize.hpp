#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bankaudit/report/audit.hpp"

namespace bankaudit::report {

// Doubles that are NaN are written as null and read back as NaN.
nlohmann::json to_json(const AuditRecord& r);
AuditRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AssetFailure& f);
AssetFailure failure_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Dashboard& d);
nlohmann::json to_json(const AuditConfig& c);
AuditConfig config_from_json(const nlohmann::json& j);

struct ReportMeta {
  std::string tool = "bankaudit";
  std::string version = BANKAUDIT_VERSION;
  std::int64_t generated_at = 0;  // unix seconds
  std::map<std::string, std::string> inputs;  // name -> path
  std::map<std::string, std::string> hashes;  // name -> sha256 of file content
  std::string fingerprint;
};

// sha256 over the sorted hashes and the canonical config JSON.
std::string config_fingerprint(const std::map<std::string, std::string>& hashes, const AuditConfig& cfg);

struct AuditDocument {
  ReportMeta meta;
  AuditConfig config;
  std::vector<AuditRecord> records;
  std::vector<AssetFailure> failures;
  nlohmann::json dashboard;
};

nlohmann::json audit_document(const AuditResult& result, const AuditConfig& cfg, const ReportMeta& meta);
// Throws Error(BadConfig) naming the offending key.
AuditDocument parse_audit_document(const nlohmann::json& j);
std::string dump_document(const nlohmann::json& doc);

}  // namespace bankaudit::report
