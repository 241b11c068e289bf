// sis: synthesize, verify, and stress-test safety-index parameterizations.
//
// Subcommands:
//   sis synth    -c cfg.json            synthesize, oracle-check, simulate
//   sis verify   -c cfg.json --theta k  brute-force oracle for a given theta
//   sis simulate -c cfg.json --theta k  adversarial rollouts for a given theta
//   sis bench    -c cfg.json --dof 1,2,4 --seeds N   Table-style sweep
//
// Exit codes: 0 success, 1 result not feasible/valid/safe, 2 config error,
// 3 certificate-assembly (basis) failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sis/config.hpp"
#include "sis/records.hpp"
#include "sis/verify.hpp"

namespace {

std::vector<double> parse_theta_csv(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw sis::ConfigError("config error: bad --theta entry '" + tok + "'");
    }
  }
  if (out.empty()) throw sis::ConfigError("config error: empty --theta");
  return out;
}

struct Paths {
  std::string records, timings;
};

Paths make_paths(const std::string& out_dir, const sis::RunConfig& cfg) {
  std::filesystem::create_directories(out_dir);
  const std::string digest = sis::config_digest(cfg);
  return {out_dir + "/" + digest + ".records.jsonl",
          out_dir + "/" + digest + ".timings.csv"};
}

sis::RolloutSummary run_rollouts(const sis::SubstitutedSystem& sys,
                                 const sis::IndexInstance& idx,
                                 const sis::SimulateBlock& sim) {
  sis::RolloutSummary sum;
  sis::SimulateOptions opt;
  opt.violation_tol = sim.violation_tol;
  auto controller = [](const sis::IndexInstance& i,
                       const std::vector<double>& z) {
    return sis::adversarial_ref(i, z);
  };
  for (int r = 0; r < sim.n_rollouts; ++r) {
    std::mt19937_64 rng(sis::detail::mix_seed(sim.seed, (uint64_t)r));
    const auto x0 = sis::sample_rollout_start(sys, idx, rng);
    const auto res = sis::simulate(sys, idx, x0, sim.steps, sim.dt, controller, opt);
    ++sum.n_rollouts;
    sum.total_violations += res.stats.violations;
    sum.infeasible_qp_steps += res.stats.infeasible_qp_steps;
    sum.saturation_steps += res.stats.saturation_steps;
    sum.min_distance = std::min(sum.min_distance, res.stats.min_distance);
    sum.min_phi0_margin = std::min(sum.min_phi0_margin, res.stats.min_phi0_margin);
  }
  return sum;
}

// End-to-end synthesis for one (config, seed): assemble, solve, always run
// the oracle on a feasible result, simulate when requested.
sis::ResultRecord run_synth(const sis::RunConfig& cfg, uint64_t seed,
                            bool with_rollouts) {
  const auto sys = sis::build_system(cfg.model);
  const auto tmpl = sis::make_template(sys, cfg.tmpl.order, cfg.tmpl.per_joint);

  sis::ResultRecord rec;
  rec.config_digest = sis::config_digest(cfg);
  rec.command = "synth";
  rec.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  const sis::NlpProblem prob(sys, tmpl, cfg.cone);
  auto nlp = cfg.nlp;
  nlp.seed = seed;
  const auto res = sis::solve(prob, nlp);
  rec.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  rec.status = sis::to_string(res.status);
  rec.theta = res.theta;
  rec.margin = res.margin;

  if (res.status == sis::SolveStatus::feasible) {
    sis::VerifyConfig vc;
    vc.n_samples = cfg.verify.n_samples;
    vc.tol = cfg.verify.tol;
    vc.margin_floor = cfg.verify.margin_floor;
    vc.seed = cfg.verify.seed;
    const auto rep = sis::verify_index(sys, tmpl, res.theta, vc);
    rec.oracle_valid = rep.valid;
    rec.empty_manifold = rep.empty_manifold;
    rec.worst_margin = rep.empty_manifold ? 0.0 : rep.worst_margin;
    if (with_rollouts && rep.valid && cfg.simulate.n_rollouts > 0) {
      const auto idx = sis::build_index(tmpl, res.theta);
      rec.rollouts = run_rollouts(sys, idx, cfg.simulate);
    }
  }
  return rec;
}

void print_record(const sis::ResultRecord& rec) {
  std::cout << sis::serialize(rec) << "\n";
  std::printf("wall_time_s: %.3f\n", rec.wall_time_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safety-index synthesis via sum-of-squares refutation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results", theta_csv, dof_csv = "1,2,3,4,6";
  int bench_seeds = 5;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON run configuration")
        ->required();
    sub->add_option("-o,--out", out_dir, "results directory");
  };
  auto* synth = app.add_subcommand("synth", "synthesize and oracle-check");
  add_common(synth);
  auto* verify = app.add_subcommand("verify", "oracle-check a given theta");
  add_common(verify);
  verify->add_option("--theta", theta_csv, "comma-separated parameters")
      ->required();
  auto* simulate = app.add_subcommand("simulate", "adversarial rollouts");
  add_common(simulate);
  simulate->add_option("--theta", theta_csv, "comma-separated parameters")
      ->required();
  auto* bench = app.add_subcommand("bench", "DOF x seed synthesis sweep");
  add_common(bench);
  bench->add_option("--dof", dof_csv, "comma-separated arm DOF list");
  bench->add_option("--seeds", bench_seeds, "seeds per DOF")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const sis::RunConfig cfg = sis::load_config(config_path);

    if (synth->parsed()) {
      const auto rec = run_synth(cfg, cfg.nlp.seed, true);
      const auto paths = make_paths(out_dir, cfg);
      sis::append_record(paths.records, rec);
      sis::append_timing(paths.timings, rec);
      print_record(rec);
      return (rec.status == "feasible" && rec.oracle_valid) ? 0 : 1;
    }

    if (verify->parsed() || simulate->parsed()) {
      const auto theta = parse_theta_csv(theta_csv);
      const auto sys = sis::build_system(cfg.model);
      const auto tmpl =
          sis::make_template(sys, cfg.tmpl.order, cfg.tmpl.per_joint);
      sis::ResultRecord rec;
      rec.config_digest = sis::config_digest(cfg);
      rec.seed = cfg.nlp.seed;
      rec.status = "n/a";
      rec.theta = theta;
      const auto t0 = std::chrono::steady_clock::now();
      bool ok;
      if (verify->parsed()) {
        rec.command = "verify";
        sis::VerifyConfig vc;
        vc.n_samples = cfg.verify.n_samples;
        vc.tol = cfg.verify.tol;
        vc.margin_floor = cfg.verify.margin_floor;
        vc.seed = cfg.verify.seed;
        const auto rep = sis::verify_index(sys, tmpl, theta, vc);
        rec.oracle_valid = rep.valid;
        rec.empty_manifold = rep.empty_manifold;
        rec.worst_margin = rep.empty_manifold ? 0.0 : rep.worst_margin;
        ok = rep.valid;
      } else {
        rec.command = "simulate";
        const auto idx = sis::build_index(tmpl, theta);
        rec.rollouts = run_rollouts(sys, idx, cfg.simulate);
        ok = rec.rollouts.total_violations == 0;
      }
      rec.wall_time_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      const auto paths = make_paths(out_dir, cfg);
      sis::append_record(paths.records, rec);
      sis::append_timing(paths.timings, rec);
      print_record(rec);
      return ok ? 0 : 1;
    }

    // bench: arm sweep over DOF x seeds; individual failures are recorded
    // and the sweep continues.
    std::vector<int> dofs;
    for (std::stringstream ss(dof_csv); ss.good();) {
      std::string tok;
      if (!std::getline(ss, tok, ',')) break;
      dofs.push_back(std::stoi(tok));
    }
    std::vector<sis::BenchRow> rows;
    for (int dof : dofs) {
      auto c = cfg;
      c.model.name = "arm";
      c.model.n_dof = dof;
      const auto paths = make_paths(out_dir, c);
      std::vector<sis::RunOutcome> outcomes;
      for (int s = 0; s < bench_seeds; ++s) {
        const uint64_t seed = cfg.nlp.seed + (uint64_t)s;
        sis::ResultRecord rec;
        try {
          rec = run_synth(c, seed, false);
        } catch (const std::exception& e) {
          rec.config_digest = sis::config_digest(c);
          rec.command = "synth";
          rec.seed = seed;
          rec.status = std::string("error: ") + e.what();
        }
        rec.command = "bench";
        sis::append_record(paths.records, rec);
        sis::append_timing(paths.timings, rec);
        sis::RunOutcome oc;
        oc.status = rec.status == "feasible" ? sis::SolveStatus::feasible
                                             : sis::SolveStatus::infeasible;
        oc.oracle_valid = rec.oracle_valid;
        oc.wall_time_seconds = rec.wall_time_seconds;
        oc.theta = rec.theta;
        outcomes.push_back(std::move(oc));
      }
      const auto stats = sis::batch_stats(outcomes);
      sis::BenchRow row;
      row.dof = dof;
      row.seeds = bench_seeds;
      row.mean_time_seconds = stats.mean_time_seconds;
      row.validness_pct = stats.validness_pct;
      for (double v : stats.theta_variance) row.theta_variance += v;
      if (!stats.theta_variance.empty())
        row.theta_variance /= (double)stats.theta_variance.size();
      rows.push_back(row);
      std::printf("dof %d: mean_time_s %.3f validness %.1f%%\n", dof,
                  row.mean_time_seconds, row.validness_pct);
    }
    const std::string csv = sis::bench_csv(rows);
    const std::string csv_path =
        out_dir + "/" + sis::config_digest(cfg) + ".bench.csv";
    std::ofstream(csv_path) << csv;
    std::cout << csv;
    return 0;
  } catch (const sis::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    // Certificate assembly (basis) failures surface here.
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
