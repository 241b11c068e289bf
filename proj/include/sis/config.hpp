#pragma once
// Declarative run configuration: one JSON file with model / template / cone /
// nlp / verify / simulate blocks. Validation is strict (unknown keys and type
// mismatches are errors anchored to their JSON pointer) so a typo cannot
// silently fall back to a default.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sis/model.hpp"
#include "sis/nlp.hpp"

namespace sis {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  std::string name = "arm";  // "arm" | "unicycle"
  int n_dof = 1;             // arm only
  UnicycleParams unicycle;   // unicycle only
};

struct TemplateConfig {
  int order = 1;
  bool per_joint = false;
};

struct VerifyBlock {
  long n_samples = 100000;
  double tol = 1e-9;
  double margin_floor = 1e-9;
  uint64_t seed = 7;
};

struct SimulateBlock {
  long steps = 2000;
  double dt = 0.01;
  int n_rollouts = 100;
  double violation_tol = 1e-6;
  uint64_t seed = 11;
};

struct RunConfig {
  ModelConfig model;
  TemplateConfig tmpl;
  ConeConfig cone;
  NlpConfig nlp;
  VerifyBlock verify;
  SimulateBlock simulate;
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void cfg_fail(const std::string& where,
                                  const std::string& what) {
  throw ConfigError("config error at " + where + ": " + what);
}

inline void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) cfg_fail(where, "expected an object");
}

inline void reject_unknown(const json& j, const std::string& where,
                           std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) ok = true;
    if (!ok) cfg_fail(where + "/" + it.key(), "unknown key");
  }
}

template <class T>
inline void read_field(const json& j, const std::string& where,
                       const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    cfg_fail(where + "/" + key, e.what());
  }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  using detail::cfg_fail;
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann anchors parse errors to a byte offset already.
    throw ConfigError(std::string("config error: ") + e.what());
  }
  detail::expect_object(j, "/");
  detail::reject_unknown(
      j, "", {"model", "template", "cone", "nlp", "verify", "simulate"});

  RunConfig cfg;
  if (auto it = j.find("model"); it != j.end()) {
    detail::expect_object(*it, "/model");
    detail::reject_unknown(*it, "/model",
                           {"name", "n_dof", "d_min", "d_lo", "d_hi", "v_lo",
                            "v_hi", "pos_box", "a_min", "a_max", "w_min",
                            "w_max"});
    detail::read_field(*it, "/model", "name", cfg.model.name);
    detail::read_field(*it, "/model", "n_dof", cfg.model.n_dof);
    auto& u = cfg.model.unicycle;
    detail::read_field(*it, "/model", "d_min", u.d_min);
    detail::read_field(*it, "/model", "d_lo", u.d_lo);
    detail::read_field(*it, "/model", "d_hi", u.d_hi);
    detail::read_field(*it, "/model", "v_lo", u.v_lo);
    detail::read_field(*it, "/model", "v_hi", u.v_hi);
    detail::read_field(*it, "/model", "pos_box", u.pos_box);
    detail::read_field(*it, "/model", "a_min", u.a_min);
    detail::read_field(*it, "/model", "a_max", u.a_max);
    detail::read_field(*it, "/model", "w_min", u.w_min);
    detail::read_field(*it, "/model", "w_max", u.w_max);
    if (cfg.model.name != "arm" && cfg.model.name != "unicycle")
      cfg_fail("/model/name", "must be \"arm\" or \"unicycle\"");
    if (cfg.model.name == "arm" && (cfg.model.n_dof < 1 || cfg.model.n_dof > 14))
      cfg_fail("/model/n_dof", "must be in [1, 14]");
  }
  // The cone defaults are model-dependent: the unicycle certificate needs
  // squared multiplier products and a monomial-extended ideal, while the arm
  // is served by plain pairs. An explicit cone block overrides per key.
  if (cfg.model.name == "unicycle") cfg.cone = ConeConfig{3, 10, 3, true};
  if (auto it = j.find("template"); it != j.end()) {
    detail::expect_object(*it, "/template");
    detail::reject_unknown(*it, "/template", {"order", "per_joint"});
    detail::read_field(*it, "/template", "order", cfg.tmpl.order);
    detail::read_field(*it, "/template", "per_joint", cfg.tmpl.per_joint);
    if (cfg.tmpl.order < 1 || cfg.tmpl.order > 2)
      cfg_fail("/template/order", "must be 1 or 2");
  }
  if (auto it = j.find("cone"); it != j.end()) {
    detail::expect_object(*it, "/cone");
    detail::reject_unknown(*it, "/cone",
                           {"max_product_order", "max_product_degree",
                            "ideal_monomial_degree", "repeated_gammas"});
    detail::read_field(*it, "/cone", "max_product_order",
                       cfg.cone.max_product_order);
    detail::read_field(*it, "/cone", "max_product_degree",
                       cfg.cone.max_product_degree);
    detail::read_field(*it, "/cone", "ideal_monomial_degree",
                       cfg.cone.ideal_monomial_degree);
    detail::read_field(*it, "/cone", "repeated_gammas",
                       cfg.cone.repeated_gammas);
    if (cfg.cone.max_product_order < 1)
      cfg_fail("/cone/max_product_order", "must be >= 1");
    if (cfg.cone.max_product_degree < 0)
      cfg_fail("/cone/max_product_degree", "must be >= 0");
    if (cfg.cone.ideal_monomial_degree < 0)
      cfg_fail("/cone/ideal_monomial_degree", "must be >= 0");
  }
  if (auto it = j.find("nlp"); it != j.end()) {
    detail::expect_object(*it, "/nlp");
    detail::reject_unknown(*it, "/nlp",
                           {"restarts", "max_iters", "epsilon", "seed",
                            "theta_max", "alpha_init_max", "beta_init_max",
                            "minimize_theta_sum", "threads"});
    detail::read_field(*it, "/nlp", "restarts", cfg.nlp.restarts);
    detail::read_field(*it, "/nlp", "max_iters", cfg.nlp.max_iters);
    detail::read_field(*it, "/nlp", "epsilon", cfg.nlp.epsilon);
    detail::read_field(*it, "/nlp", "seed", cfg.nlp.seed);
    detail::read_field(*it, "/nlp", "theta_max", cfg.nlp.theta_max);
    detail::read_field(*it, "/nlp", "alpha_init_max", cfg.nlp.alpha_init_max);
    detail::read_field(*it, "/nlp", "beta_init_max", cfg.nlp.beta_init_max);
    detail::read_field(*it, "/nlp", "minimize_theta_sum",
                       cfg.nlp.minimize_theta_sum);
    detail::read_field(*it, "/nlp", "threads", cfg.nlp.threads);
    if (!(cfg.nlp.epsilon > 0)) cfg_fail("/nlp/epsilon", "must be positive");
    if (!(cfg.nlp.theta_max > 0)) cfg_fail("/nlp/theta_max", "must be positive");
  }
  if (auto it = j.find("verify"); it != j.end()) {
    detail::expect_object(*it, "/verify");
    detail::reject_unknown(*it, "/verify",
                           {"n_samples", "tol", "margin_floor", "seed"});
    detail::read_field(*it, "/verify", "n_samples", cfg.verify.n_samples);
    detail::read_field(*it, "/verify", "tol", cfg.verify.tol);
    detail::read_field(*it, "/verify", "margin_floor", cfg.verify.margin_floor);
    detail::read_field(*it, "/verify", "seed", cfg.verify.seed);
    if (cfg.verify.n_samples < 0)
      cfg_fail("/verify/n_samples", "must be >= 0");
    if (!(cfg.verify.tol > 0)) cfg_fail("/verify/tol", "must be positive");
  }
  if (auto it = j.find("simulate"); it != j.end()) {
    detail::expect_object(*it, "/simulate");
    detail::reject_unknown(
        *it, "/simulate",
        {"steps", "dt", "n_rollouts", "violation_tol", "seed"});
    detail::read_field(*it, "/simulate", "steps", cfg.simulate.steps);
    detail::read_field(*it, "/simulate", "dt", cfg.simulate.dt);
    detail::read_field(*it, "/simulate", "n_rollouts", cfg.simulate.n_rollouts);
    detail::read_field(*it, "/simulate", "violation_tol",
                       cfg.simulate.violation_tol);
    detail::read_field(*it, "/simulate", "seed", cfg.simulate.seed);
    if (cfg.simulate.steps < 0) cfg_fail("/simulate/steps", "must be >= 0");
    if (!(cfg.simulate.dt > 0)) cfg_fail("/simulate/dt", "must be positive");
    if (cfg.simulate.n_rollouts < 0)
      cfg_fail("/simulate/n_rollouts", "must be >= 0");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline SubstitutedSystem build_system(const ModelConfig& m) {
  if (m.name == "arm") return build_arm(m.n_dof);
  return build_unicycle(m.unicycle);
}

// Canonical single-line dump of a config: every field explicit, keys sorted
// (nlohmann objects are key-ordered maps). Two configs hash equal iff they
// describe the same run.
inline std::string canonical_dump(const RunConfig& c) {
  detail::json j;
  j["model"]["name"] = c.model.name;
  if (c.model.name == "arm") {
    j["model"]["n_dof"] = c.model.n_dof;
  } else {
    const auto& u = c.model.unicycle;
    j["model"]["d_min"] = u.d_min;
    j["model"]["d_lo"] = u.d_lo;
    j["model"]["d_hi"] = u.d_hi;
    j["model"]["v_lo"] = u.v_lo;
    j["model"]["v_hi"] = u.v_hi;
    j["model"]["pos_box"] = u.pos_box;
    j["model"]["a_min"] = u.a_min;
    j["model"]["a_max"] = u.a_max;
    j["model"]["w_min"] = u.w_min;
    j["model"]["w_max"] = u.w_max;
  }
  j["template"]["order"] = c.tmpl.order;
  j["template"]["per_joint"] = c.tmpl.per_joint;
  j["cone"]["max_product_order"] = c.cone.max_product_order;
  j["cone"]["max_product_degree"] = c.cone.max_product_degree;
  j["cone"]["ideal_monomial_degree"] = c.cone.ideal_monomial_degree;
  j["cone"]["repeated_gammas"] = c.cone.repeated_gammas;
  j["nlp"]["restarts"] = c.nlp.restarts;
  j["nlp"]["max_iters"] = c.nlp.max_iters;
  j["nlp"]["epsilon"] = c.nlp.epsilon;
  j["nlp"]["seed"] = c.nlp.seed;
  j["nlp"]["theta_max"] = c.nlp.theta_max;
  j["nlp"]["alpha_init_max"] = c.nlp.alpha_init_max;
  j["nlp"]["beta_init_max"] = c.nlp.beta_init_max;
  j["nlp"]["minimize_theta_sum"] = c.nlp.minimize_theta_sum;
  j["verify"]["n_samples"] = c.verify.n_samples;
  j["verify"]["tol"] = c.verify.tol;
  j["verify"]["margin_floor"] = c.verify.margin_floor;
  j["verify"]["seed"] = c.verify.seed;
  j["simulate"]["steps"] = c.simulate.steps;
  j["simulate"]["dt"] = c.simulate.dt;
  j["simulate"]["n_rollouts"] = c.simulate.n_rollouts;
  j["simulate"]["violation_tol"] = c.simulate.violation_tol;
  j["simulate"]["seed"] = c.simulate.seed;
  // nlp.threads deliberately excluded: it changes resources, not the run.
  return j.dump();
}

// FNV-1a 64-bit over the canonical dump, as a 16-hex-digit string.
inline std::string config_digest(const RunConfig& c) {
  const std::string s = canonical_dump(c);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return std::string(buf);
}

}  // namespace sis
