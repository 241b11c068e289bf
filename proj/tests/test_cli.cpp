// Contract test for the sis binary: exit codes, record files, determinism.
// Usage: test_cli <path-to-sis>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

#define EXPECT(cond)                                                     \
  do {                                                                   \
    if (!(cond)) {                                                       \
      ++failures;                                                        \
      std::cerr << "FAIL " << __FILE__ << ":" << __LINE__ << "  " #cond  \
                << "\n";                                                 \
    }                                                                    \
  } while (0)

std::string g_sis;
fs::path g_dir;

int run(const std::string& args) {
  const std::string cmd = g_sis + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One file matching *suffix under dir, or empty path.
fs::path find_one(const fs::path& dir, const std::string& suffix) {
  fs::path found;
  if (!fs::exists(dir)) return found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() >= suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      if (!found.empty()) return {};  // ambiguous
      found = e.path();
    }
  }
  return found;
}

const char* kQuickSynth = R"({
  "model": {"name": "arm", "n_dof": 1},
  "nlp": {"restarts": 20, "max_iters": 600, "seed": 5, "threads": 1},
  "verify": {"n_samples": 2000},
  "simulate": {"n_rollouts": 2, "steps": 300}
})";

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: test_cli <sis-binary>\n";
    return 2;
  }
  g_sis = argv[1];
  g_dir = fs::temp_directory_path() /
          ("sis_cli_" + std::to_string(::getpid()));
  fs::create_directories(g_dir);
  const std::string cfg = (g_dir / "cfg.json").string();
  write_file(cfg, kQuickSynth);

  // --- config / argument errors -> exit 2
  EXPECT(run("synth -c " + (g_dir / "missing.json").string()) == 2);
  write_file(g_dir / "bad.json", "{ not json");
  EXPECT(run("synth -c " + (g_dir / "bad.json").string()) == 2);
  write_file(g_dir / "unknown.json", R"({"model": {"name": "arm", "wat": 1}})");
  EXPECT(run("synth -c " + (g_dir / "unknown.json").string()) == 2);
  write_file(g_dir / "badname.json", R"({"model": {"name": "quadrotor"}})");
  EXPECT(run("synth -c " + (g_dir / "badname.json").string()) == 2);
  EXPECT(run("verify -c " + cfg + " --theta 1.0,x") == 2);
  EXPECT(run("verify -c " + cfg + " --theta -1.0") == 2);

  // --- verify / simulate on a known-good parameter -> exit 0
  {
    const std::string out = (g_dir / "out_verify").string();
    EXPECT(run("verify -c " + cfg + " --theta 3.0 -o " + out) == 0);
    const fs::path rec = find_one(out, ".records.jsonl");
    EXPECT(!rec.empty());
    const std::string line = read_file(rec);
    EXPECT(line.find("\"command\":\"verify\"") != std::string::npos);
    EXPECT(line.find("\"oracle_valid\":true") != std::string::npos);
    EXPECT(line.find("wall_time") == std::string::npos);  // timings separate
    EXPECT(!find_one(out, ".timings.csv").empty());
  }
  EXPECT(run("simulate -c " + cfg + " --theta 3.0 -o " +
             (g_dir / "out_sim").string()) == 0);

  // --- synthesis end-to-end -> exit 0, feasible + oracle-valid record
  {
    const std::string out = (g_dir / "out_synth").string();
    EXPECT(run("synth -c " + cfg + " -o " + out) == 0);
    const fs::path rec = find_one(out, ".records.jsonl");
    EXPECT(!rec.empty());
    const std::string line = read_file(rec);
    EXPECT(line.find("\"command\":\"synth\"") != std::string::npos);
    EXPECT(line.find("\"status\":\"feasible\"") != std::string::npos);
    EXPECT(line.find("\"oracle_valid\":true") != std::string::npos);

    // rerun into a fresh directory: byte-identical record
    const std::string out2 = (g_dir / "out_synth2").string();
    EXPECT(run("synth -c " + cfg + " -o " + out2) == 0);
    const fs::path rec2 = find_one(out2, ".records.jsonl");
    EXPECT(!rec2.empty());
    EXPECT(read_file(rec) == read_file(rec2));

    // rerun into the same directory: the file is append-only, two equal lines
    EXPECT(run("synth -c " + cfg + " -o " + out) == 0);
    std::ifstream in(rec);
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    EXPECT(!l1.empty() && l1 == l2);
  }

  // --- a budget that cannot succeed -> exit 1, honest status
  {
    write_file(g_dir / "nobudget.json", R"({
      "model": {"name": "arm", "n_dof": 1},
      "nlp": {"restarts": 2, "max_iters": 0, "threads": 1}
    })");
    const std::string out = (g_dir / "out_nb").string();
    EXPECT(run("synth -c " + (g_dir / "nobudget.json").string() + " -o " +
               out) == 1);
    const fs::path rec = find_one(out, ".records.jsonl");
    EXPECT(!rec.empty());
    EXPECT(read_file(rec).find("\"status\":\"infeasible\"") !=
           std::string::npos);
  }

  // --- bench: tiny sweep emits the CSV summary
  {
    write_file(g_dir / "bench.json", R"({
      "model": {"name": "arm", "n_dof": 1},
      "nlp": {"restarts": 20, "max_iters": 600, "threads": 1},
      "verify": {"n_samples": 1000},
      "simulate": {"n_rollouts": 0}
    })");
    const std::string out = (g_dir / "out_bench").string();
    EXPECT(run("bench -c " + (g_dir / "bench.json").string() +
               " --dof 1 --seeds 2 -o " + out) == 0);
    const fs::path csv = find_one(out, ".bench.csv");
    EXPECT(!csv.empty());
    const std::string body = read_file(csv);
    EXPECT(body.find("dof,seeds,mean_time_s") != std::string::npos);
    EXPECT(body.find("\n1,2,") != std::string::npos);
  }

  fs::remove_all(g_dir);
  if (failures == 0) {
    std::cout << "test_cli: all checks passed\n";
    return 0;
  }
  std::cerr << "test_cli: " << failures << " failed checks\n";
  return 1;
}
