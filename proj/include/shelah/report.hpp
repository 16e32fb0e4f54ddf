#pragma once

// Schema-versioned JSON reports: one entry per check with its status, the
// budget in force when it was undecided, and data to replay it.

#include <string>
#include <vector>

#include <json.hpp>

#include "shelah/core.hpp"

namespace shelah {

inline constexpr int kReportSchema = 1;

enum class Status : std::uint8_t { pass, fail, inconclusive };

inline const char* to_string(Status s) noexcept {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    default: return "inconclusive";
  }
}

inline Status status_from_string(const std::string& s) {
  if (s == "pass") return Status::pass;
  if (s == "fail") return Status::fail;
  if (s == "inconclusive") return Status::inconclusive;
  throw Error("report: unknown status '" + s + "'");
}

inline Status status_of(Tri t) {
  return t == Tri::yes ? Status::pass : t == Tri::no ? Status::fail : Status::inconclusive;
}

struct CheckResult {
  std::string id;
  Status status = Status::inconclusive;
  std::string detail;
  nlohmann::json data = nlohmann::json::object();    // measured values
  nlohmann::json replay = nlohmann::json::object();  // inputs to re-run this check
  nlohmann::json budget = nlohmann::json::object();  // always set for inconclusive checks

  friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

inline nlohmann::json budget_json(const Budget& b) {
  return {{"dehn_steps", b.dehn_steps},   {"chain_candidates", b.chain_candidates},
          {"max_word_letters", b.max_word_letters}, {"torsion_len", b.torsion_len},
          {"torsion_pow", b.torsion_pow}, {"samples", b.samples}};
}

inline Budget budget_from_json(const nlohmann::json& j, Budget b = {}) {
  b.dehn_steps = j.value("dehn_steps", b.dehn_steps);
  b.chain_candidates = j.value("chain_candidates", b.chain_candidates);
  b.max_word_letters = j.value("max_word_letters", b.max_word_letters);
  b.torsion_len = j.value("torsion_len", b.torsion_len);
  b.torsion_pow = j.value("torsion_pow", b.torsion_pow);
  b.samples = j.value("samples", b.samples);
  return b;
}

struct Report {
  int schema = kReportSchema;
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json input = nlohmann::json::object();  // the config the run consumed
  std::vector<CheckResult> checks;

  friend bool operator==(const Report&, const Report&) = default;

  CheckResult& add(CheckResult c) {
    checks.push_back(std::move(c));
    return checks.back();
  }
  bool any(Status s) const {
    for (const auto& c : checks)
      if (c.status == s) return true;
    return false;
  }
  const CheckResult* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
};

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"id", c.id},
                      {"status", to_string(c.status)},
                      {"detail", c.detail},
                      {"data", c.data},
                      {"replay", c.replay},
                      {"budget", c.budget}});
  }
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& c : r.checks) ++counts[static_cast<int>(c.status)];
  return {{"schema", r.schema},
          {"command", r.command},
          {"seed", r.seed},
          {"input", r.input},
          {"checks", checks},
          {"summary", {{"pass", counts[0]}, {"fail", counts[1]}, {"inconclusive", counts[2]}}}};
}

inline Report report_from_json(const nlohmann::json& j) {
  Report r;
  r.schema = j.at("schema").get<int>();
  if (r.schema != kReportSchema) throw Error("report: unsupported schema " + std::to_string(r.schema));
  r.command = j.at("command").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.input = j.value("input", nlohmann::json::object());
  for (const auto& jc : j.at("checks")) {
    CheckResult c;
    c.id = jc.at("id").get<std::string>();
    c.status = status_from_string(jc.at("status").get<std::string>());
    c.detail = jc.value("detail", "");
    c.data = jc.value("data", nlohmann::json::object());
    c.replay = jc.value("replay", nlohmann::json::object());
    c.budget = jc.value("budget", nlohmann::json::object());
    r.checks.push_back(std::move(c));
  }
  return r;
}

}  // namespace shelah
