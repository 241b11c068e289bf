#pragma once
// Line-delimited result records and the bench CSV summary. One record per
// (config, seed); files are append-only and keyed by the config digest.
//
// The serialized record is fully deterministic: wall-clock time lives in the
// in-memory record and the stdout report, but is written to a separate
// timings file so rerunning a config byte-identically reproduces the record
// stream. Numbers are printed with shortest-round-trip formatting.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sis/nlp.hpp"
#include "sis/verify.hpp"

namespace sis {

struct RolloutSummary {
  int n_rollouts = 0;
  long total_violations = 0;
  long infeasible_qp_steps = 0;
  long saturation_steps = 0;
  double min_distance = std::numeric_limits<double>::infinity();
  double min_phi0_margin = std::numeric_limits<double>::infinity();

  bool operator==(const RolloutSummary&) const = default;
};

struct ResultRecord {
  std::string config_digest;
  std::string command;  // synth | verify | simulate | bench
  uint64_t seed = 0;
  std::string status;   // SolveStatus, or "n/a" for verify/simulate-only runs
  std::vector<double> theta;
  double margin = 0.0;
  double wall_time_seconds = 0.0;  // not serialized; see file header comment
  bool oracle_valid = false;
  bool empty_manifold = false;
  double worst_margin = 0.0;
  RolloutSummary rollouts;

  bool operator==(const ResultRecord& o) const {
    return config_digest == o.config_digest && command == o.command &&
           seed == o.seed && status == o.status && theta == o.theta &&
           margin == o.margin && oracle_valid == o.oracle_valid &&
           empty_manifold == o.empty_manifold &&
           worst_margin == o.worst_margin && rollouts == o.rollouts;
  }
};

inline std::string serialize(const ResultRecord& r) {
  nlohmann::json j;
  j["config"] = r.config_digest;
  j["command"] = r.command;
  j["seed"] = r.seed;
  j["status"] = r.status;
  j["theta"] = r.theta;
  j["margin"] = r.margin;
  j["oracle_valid"] = r.oracle_valid;
  j["empty_manifold"] = r.empty_manifold;
  j["worst_margin"] = r.worst_margin;
  j["rollouts"]["n"] = r.rollouts.n_rollouts;
  j["rollouts"]["violations"] = r.rollouts.total_violations;
  j["rollouts"]["infeasible_qp_steps"] = r.rollouts.infeasible_qp_steps;
  j["rollouts"]["saturation_steps"] = r.rollouts.saturation_steps;
  if (r.rollouts.n_rollouts > 0) {
    j["rollouts"]["min_distance"] = r.rollouts.min_distance;
    j["rollouts"]["min_phi0_margin"] = r.rollouts.min_phi0_margin;
  }
  return j.dump();
}

inline ResultRecord parse_record(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  ResultRecord r;
  r.config_digest = j.at("config").get<std::string>();
  r.command = j.at("command").get<std::string>();
  r.seed = j.at("seed").get<uint64_t>();
  r.status = j.at("status").get<std::string>();
  r.theta = j.at("theta").get<std::vector<double>>();
  r.margin = j.at("margin").get<double>();
  r.oracle_valid = j.at("oracle_valid").get<bool>();
  r.empty_manifold = j.at("empty_manifold").get<bool>();
  r.worst_margin = j.at("worst_margin").get<double>();
  const auto& ro = j.at("rollouts");
  r.rollouts.n_rollouts = ro.at("n").get<int>();
  r.rollouts.total_violations = ro.at("violations").get<long>();
  r.rollouts.infeasible_qp_steps = ro.at("infeasible_qp_steps").get<long>();
  r.rollouts.saturation_steps = ro.at("saturation_steps").get<long>();
  if (r.rollouts.n_rollouts > 0) {
    r.rollouts.min_distance = ro.at("min_distance").get<double>();
    r.rollouts.min_phi0_margin = ro.at("min_phi0_margin").get<double>();
  }
  return r;
}

inline void append_record(const std::string& path, const ResultRecord& r) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open record file " + path);
  out << serialize(r) << "\n";
}

inline void append_timing(const std::string& path, const ResultRecord& r) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open timing file " + path);
  out << r.config_digest << "," << r.command << "," << r.seed << ","
      << r.wall_time_seconds << "\n";
}

struct BenchRow {
  int dof = 0;
  int seeds = 0;
  double mean_time_seconds = 0.0;
  double validness_pct = 0.0;
  double theta_variance = 0.0;  // mean over components
};

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "dof,seeds,mean_time_s,validness_pct,theta_variance\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.1f,%.6g\n", r.dof, r.seeds,
                  r.mean_time_seconds, r.validness_pct, r.theta_variance);
    out += buf;
  }
  return out;
}

}  // namespace sis
