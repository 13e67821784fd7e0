#include "hetknock/report.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "hetknock/csv.hpp"
#include "hetknock/errors.hpp"

namespace hetknock {

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf, 16);
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  nlohmann::ordered_json opts = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.options) opts[k] = v;  // std::map iterates sorted
  j["options"] = opts;
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  j["input_digest"] = m.input_digest;
  return j;
}

nlohmann::ordered_json report_json(const TestReport& r, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["manifest"] = to_json(m);
  j["statistic"] = r.statistic;
  j["p_value"] = r.p;
  j["break_used"] = r.break_used;
  j["feature_tested"] = r.feature_tested + 1;  // 1-based, matching CSV headers
  nlohmann::ordered_json dec = nlohmann::ordered_json::object();
  for (const auto& [alpha, reject] : r.alpha_decisions) dec[format_double(alpha)] = reject;
  j["alpha_decisions"] = dec;
  j["n_stat"] = r.n_stat;
  j["n_screen"] = r.n_screen;
  return j;
}

namespace {

std::string feature_label(int feature) {
  return feature < 0 ? "selected" : "x" + std::to_string(feature + 1);
}

}  // namespace

nlohmann::ordered_json table_json(const RejectionTable& t, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["manifest"] = to_json(m);
  j["test"] = to_string(t.scenario.test);
  j["dgp"] = to_string(t.scenario.dgp);
  j["n"] = t.scenario.n;
  j["p"] = t.scenario.p;
  j["rho"] = t.scenario.rho;
  j["feature_dist"] = to_string(t.scenario.dist);
  j["reps"] = t.scenario.reps;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const RejectionCell& c : t.cells) {
    nlohmann::ordered_json cj;
    cj["feature"] = feature_label(c.feature);
    cj["alpha"] = c.alpha;
    cj["rejection_rate"] = c.rate();
    cj["std_error"] = c.std_error();
    cj["reps"] = c.reps;
    cells.push_back(cj);
  }
  j["results"] = cells;
  return j;
}

std::string table_csv(const RejectionTable& t) {
  std::ostringstream out;
  out << "feature,alpha,rejection_rate,std_error,reps\n";
  for (const RejectionCell& c : t.cells) {
    out << feature_label(c.feature) << "," << format_double(c.alpha) << ","
        << format_double(c.rate()) << "," << format_double(c.std_error()) << "," << c.reps
        << "\n";
  }
  return out.str();
}

nlohmann::ordered_json diagnostics_json(const KnockoffDiagnostics& d, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["manifest"] = to_json(m);
  nlohmann::ordered_json corr = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < d.per_feature_corr.size(); ++i)
    corr.push_back(d.per_feature_corr(i));
  j["per_feature_corr"] = corr;
  j["mean_sq_offdiag_dev"] = d.mean_sq_offdiag_dev;
  return j;
}

}  // namespace hetknock
