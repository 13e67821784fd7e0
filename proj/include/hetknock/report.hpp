#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <string>

#include "hetknock/knockoffs.hpp"
#include "hetknock/sim.hpp"
#include "hetknock/stats.hpp"

namespace hetknock {

inline constexpr const char* kToolVersion = "hetknock 0.1.0";

// Everything needed to rerun a command. Embedded verbatim in every JSON
// report; deliberately carries no timestamp so identical runs produce
// identical bytes.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> options;  // resolved values, sorted by key
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string input_digest = "-";  // fnv1a-64 of the input file bytes, "-" if none
};

std::string fnv1a_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

nlohmann::ordered_json to_json(const RunManifest& m);
nlohmann::ordered_json report_json(const TestReport& r, const RunManifest& m);
nlohmann::ordered_json table_json(const RejectionTable& t, const RunManifest& m);
nlohmann::ordered_json diagnostics_json(const KnockoffDiagnostics& d, const RunManifest& m);

// feature,alpha,rejection_rate,std_error,reps rows; features labelled x<j+1>
// or "selected" for the feature-selecting test.
std::string table_csv(const RejectionTable& t);

}  // namespace hetknock
