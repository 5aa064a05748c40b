#pragma once

// Experiment configuration: TOML loading, validation, canonical JSON and the
// config hash stamped on every output.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "mhotv/errors.hpp"
#include "mhotv/signals.hpp"
#include "mhotv/solvers.hpp"
#include "mhotv/sweep.hpp"

namespace mhotv {

enum class StudyKind { recover1d, tomo2d, table1, success, sweep };

inline std::string to_string(StudyKind s) {
  switch (s) {
    case StudyKind::recover1d: return "recover1d";
    case StudyKind::tomo2d: return "tomo2d";
    case StudyKind::table1: return "table1";
    case StudyKind::success: return "success";
    case StudyKind::sweep: return "sweep";
  }
  return "?";
}

inline StudyKind parse_study(const std::string& s) {
  for (auto k : {StudyKind::recover1d, StudyKind::tomo2d, StudyKind::table1, StudyKind::success,
                 StudyKind::sweep})
    if (s == to_string(k)) return k;
  detail::fail<ConfigError>("unknown study '" + s + "'");
}

enum class SensingKind { sparse, gaussian };

inline std::string to_string(SensingKind s) { return s == SensingKind::sparse ? "sparse" : "gaussian"; }

inline SensingKind parse_sensing(const std::string& s) {
  if (s == "sparse") return SensingKind::sparse;
  if (s == "gaussian") return SensingKind::gaussian;
  detail::fail<ConfigError>("unknown sensing matrix '" + s + "' (expected sparse or gaussian)");
}

/// Inverse of RegularizerSpec::label(): "HOTV3", "MHOTV2(3)", "MHOTV1.5(2)", "Daub3(3)".
inline RegularizerSpec parse_method(const std::string& label) {
  static const std::regex re(R"((M?HOTV|Daub)([0-9]+(?:\.[0-9]+)?)(?:\(([0-9]+)\))?)");
  std::smatch m;
  if (!std::regex_match(label, m, re)) detail::fail<ConfigError>("cannot parse method '" + label + "'");
  RegularizerSpec s;
  s.kind = m[1] == "Daub" ? RegularizerKind::wavelet : RegularizerKind::mhotv;
  s.order = std::stod(m[2]);
  s.levels = m[3].matched ? std::stoi(m[3]) : 1;
  if (m[1] == "HOTV" && s.levels != 1) detail::fail<ConfigError>("HOTV is single scale: " + label);
  if (m[1] == "MHOTV" && !m[3].matched) detail::fail<ConfigError>("MHOTV needs a level count: " + label);
  s.validate();
  return s;
}

/// Every (kind, order, levels) combination; wavelets only at integer orders 1..3.
inline std::vector<RegularizerSpec> method_grid(const std::vector<std::string>& kinds,
                                                const std::vector<double>& orders,
                                                const std::vector<int>& levels) {
  std::vector<RegularizerSpec> out;
  for (const auto& k : kinds) {
    if (k != "mhotv" && k != "wavelet") detail::fail<ConfigError>("unknown method kind '" + k + "'");
    for (double order : orders)
      for (int l : levels) {
        RegularizerSpec s;
        s.kind = k == "wavelet" ? RegularizerKind::wavelet : RegularizerKind::mhotv;
        s.order = order;
        s.levels = l;
        if (s.kind == RegularizerKind::wavelet && !(is_integer_order(order) && order >= 1 && order <= 3))
          continue;
        s.validate();
        out.push_back(s);
      }
  }
  return out;
}

struct ExperimentConfig {
  StudyKind study = StudyKind::recover1d;
  std::uint64_t seed = 1;
  int trials = 20;
  int threads = 1;
  std::string out = "runs";

  // signal (1-D studies)
  PiecewisePolySpec signal;
  std::vector<int> degrees{2};  // success study sweeps these; others use degrees[0]

  // forward model
  SensingKind sensing = SensingKind::sparse;
  double density = 0.1;
  std::vector<double> rates{0.5};  // m = round(rate * n)
  Eigen::Index n_pix = 128;
  int angles = 29;

  // noise: table1 sweeps every entry, the other noisy studies use noise[0]
  std::vector<NoiseSpec> noise{NoiseSpec::snr(10.0)};

  std::vector<RegularizerSpec> methods;
  bool least_squares = true;
  std::vector<int> cgls_iterations{200};  // best (true error) count is kept
  LambdaGrid grid;
  SolverOptions solver;
  Backend backend = Backend::fourier;

  double success_tol = 1e-2;
  bool save_reconstructions = true;

  void validate() const {
    if (trials < 1) detail::fail<ConfigError>("trials must be >= 1");
    if (threads < 1) detail::fail<ConfigError>("threads must be >= 1");
    signal.validate();
    if (degrees.empty()) detail::fail<ConfigError>("signal degrees must not be empty");
    for (int d : degrees)
      if (d < 0) detail::fail<ConfigError>("signal degrees must be >= 0");
    if (rates.empty()) detail::fail<ConfigError>("sampling rates must not be empty");
    for (double r : rates)
      if (!(r > 0.0)) detail::fail<ConfigError>("sampling rates must be positive");
    if (!(density > 0.0 && density <= 1.0)) detail::fail<ConfigError>("density must lie in (0, 1]");
    if (n_pix < 32) detail::fail<ConfigError>("n_pix must be >= 32");
    if (angles < 1) detail::fail<ConfigError>("angles must be >= 1");
    if (noise.empty()) detail::fail<ConfigError>("noise levels must not be empty");
    for (const auto& n : noise) n.validate();
    if (methods.empty()) detail::fail<ConfigError>("method list must not be empty");
    for (const auto& m : methods) m.validate();
    if (cgls_iterations.empty()) detail::fail<ConfigError>("cgls_iterations must not be empty");
    for (int k : cgls_iterations)
      if (k < 1) detail::fail<ConfigError>("cgls_iterations must be >= 1");
    grid.validate();
    solver.validate();
    if (!(success_tol > 0.0)) detail::fail<ConfigError>("success_tol must be positive");
  }

  Eigen::Index samples(double rate) const {
    return std::max<Eigen::Index>(1, std::llround(rate * static_cast<double>(signal.n)));
  }
};

/// Per-study defaults.
inline ExperimentConfig default_config(StudyKind study) {
  ExperimentConfig c;
  c.study = study;
  switch (study) {
    case StudyKind::recover1d:
    case StudyKind::sweep:
      c.methods = {parse_method("HOTV1"), parse_method("HOTV2"), parse_method("HOTV3"),
                   parse_method("MHOTV1(3)"), parse_method("MHOTV2(3)"), parse_method("MHOTV3(3)"),
                   parse_method("Daub1(3)"), parse_method("Daub2(3)"), parse_method("Daub3(3)")};
      c.grid.points = 13;
      c.grid.hi = 1e2;
      if (study == StudyKind::sweep) {
        c.methods = {parse_method("MHOTV3(3)")};
        c.trials = 1;
      }
      break;
    case StudyKind::tomo2d:
      c.trials = 1;
      c.noise = {NoiseSpec::snr(20.0)};
      c.methods = {parse_method("HOTV1"), parse_method("MHOTV1(3)"), parse_method("Daub1(3)"),
                   parse_method("HOTV3"), parse_method("MHOTV3(3)"), parse_method("Daub3(3)")};
      c.cgls_iterations = {1, 2, 3, 4, 5, 7, 10, 15, 20, 30, 40, 60, 80};
      c.grid.points = 9;
      c.grid.hi = 1.0;
      c.solver.nonneg = true;
      c.solver.cg_iter = 10;
      c.solver.max_iter = 200;
      c.solver.primal_tol = 1e-4;
      c.solver.dual_tol = 1e-4;
      break;
    case StudyKind::table1:
      c.sensing = SensingKind::gaussian;
      c.rates = {1.0};
      c.noise = {NoiseSpec::snr(2.0), NoiseSpec::snr(5.0), NoiseSpec::snr(10.0)};
      c.methods = method_grid({"mhotv", "wavelet"}, {1.0, 1.5, 2.0, 2.5, 3.0}, {1, 2, 3, 4});
      c.least_squares = false;
      c.grid.points = 13;
      c.grid.hi = 1e2;
      break;
    case StudyKind::success:
      c.degrees = {0, 1, 2};
      c.rates = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
      c.noise = {NoiseSpec{}};
      c.methods = method_grid({"mhotv"}, {1.0, 2.0, 3.0}, {1, 3});
      for (auto& m : method_grid({"wavelet"}, {1.0, 2.0, 3.0}, {3})) c.methods.push_back(m);
      c.least_squares = false;
      break;
  }
  return c;
}

namespace detail {

template <class T>
std::vector<T> toml_array(const toml::node& node, const std::string& key) {
  std::vector<T> out;
  auto push = [&](const toml::node& n) {
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = n.value<double>()) return out.push_back(*v);
    } else if constexpr (std::is_same_v<T, int>) {
      if (auto v = n.value<std::int64_t>()) return out.push_back(static_cast<int>(*v));
    } else {
      if (auto v = n.value<std::string>()) return out.push_back(*v);
    }
    fail<ConfigError>("config: bad element type in '" + key + "'");
  };
  if (const auto* arr = node.as_array()) {
    for (const auto& n : *arr) push(n);
  } else {
    push(node);
  }
  return out;
}

class TomlReader {
 public:
  explicit TomlReader(const toml::table& t) : t_(t) {}

  template <class T>
  void get(const std::string& path, T& dst) const {
    const auto node = t_.at_path(path);
    if (!node) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node.value<bool>()) return void(dst = *v);
    } else if constexpr (std::is_integral_v<T>) {
      if (auto v = node.value<std::int64_t>()) {
        if (*v < 0 && std::is_unsigned_v<T>) fail<ConfigError>("config: '" + path + "' must be >= 0");
        return void(dst = static_cast<T>(*v));
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = node.value<double>()) return void(dst = *v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node.value<std::string>()) return void(dst = *v);
    } else {
      dst = toml_array<typename T::value_type>(*node.node(), path);
      return;
    }
    fail<ConfigError>("config: '" + path + "' has the wrong type");
  }

  bool has(const std::string& path) const { return static_cast<bool>(t_.at_path(path)); }

 private:
  const toml::table& t_;
};

inline void check_keys(const toml::table& t, const std::string& where,
                       const std::vector<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail<ConfigError>("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

}  // namespace detail

/// Parses TOML text on top of the defaults of its `study`.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>") {
  toml::table t;
  try {
    t = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    detail::fail<ConfigError>("config: " + std::string(e.description()) + " (" + source + ")");
  }
  detail::check_keys(t, "", {"study", "seed", "trials", "threads", "out", "signal", "forward", "noise",
                             "methods", "lambda", "solver", "output", "success_tol"});
  std::string study = "recover1d";
  detail::TomlReader r(t);
  r.get("study", study);
  ExperimentConfig c = default_config(parse_study(study));
  std::int64_t seed = static_cast<std::int64_t>(c.seed);
  r.get("seed", seed);
  if (seed < 0) detail::fail<ConfigError>("config: seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  r.get("trials", c.trials);
  r.get("threads", c.threads);
  r.get("out", c.out);
  r.get("success_tol", c.success_tol);

  if (auto* s = t["signal"].as_table()) {
    detail::check_keys(*s, "signal", {"n", "degree", "degrees", "jumps", "coef_range"});
    r.get("signal.n", c.signal.n);
    r.get("signal.jumps", c.signal.jumps);
    if (r.has("signal.degree")) {
      r.get("signal.degree", c.signal.degree);
      c.degrees = {c.signal.degree};
    }
    r.get("signal.degrees", c.degrees);
    if (r.has("signal.coef_range")) {
      std::vector<double> range;
      r.get("signal.coef_range", range);
      if (range.size() != 2) detail::fail<ConfigError>("config: signal.coef_range needs two numbers");
      c.signal.coef_lo = range[0];
      c.signal.coef_hi = range[1];
    }
  }
  c.signal.degree = c.degrees.empty() ? c.signal.degree : c.degrees.front();

  if (auto* f = t["forward"].as_table()) {
    detail::check_keys(*f, "forward", {"sensing", "density", "rate", "rates", "n_pix", "angles"});
    std::string sensing = to_string(c.sensing);
    r.get("forward.sensing", sensing);
    c.sensing = parse_sensing(sensing);
    r.get("forward.density", c.density);
    if (r.has("forward.rate")) {
      double rate = 0.0;
      r.get("forward.rate", rate);
      c.rates = {rate};
    }
    r.get("forward.rates", c.rates);
    r.get("forward.n_pix", c.n_pix);
    r.get("forward.angles", c.angles);
  }

  if (auto* n = t["noise"].as_table()) {
    detail::check_keys(*n, "noise", {"snr", "sigma", "none"});
    bool none = false;
    r.get("noise.none", none);
    if (none) {
      c.noise = {NoiseSpec{}};
    } else if (r.has("noise.snr")) {
      std::vector<double> v;
      r.get("noise.snr", v);
      c.noise.clear();
      for (double s : v) c.noise.push_back(NoiseSpec::snr(s));
    } else if (r.has("noise.sigma")) {
      std::vector<double> v;
      r.get("noise.sigma", v);
      c.noise.clear();
      for (double s : v) c.noise.push_back(NoiseSpec::sigma(s));
    }
  }

  if (auto* m = t["methods"].as_table()) {
    detail::check_keys(*m, "methods", {"list", "kinds", "orders", "levels", "backend", "least_squares",
                                       "cgls_iterations"});
    if (r.has("methods.list")) {
      std::vector<std::string> labels;
      r.get("methods.list", labels);
      c.methods.clear();
      for (const auto& l : labels) c.methods.push_back(parse_method(l));
    } else if (r.has("methods.orders") || r.has("methods.levels") || r.has("methods.kinds")) {
      std::vector<std::string> kinds{"mhotv"};
      std::vector<double> orders{1.0, 2.0, 3.0};
      std::vector<int> levels{1, 3};
      r.get("methods.kinds", kinds);
      r.get("methods.orders", orders);
      r.get("methods.levels", levels);
      c.methods = method_grid(kinds, orders, levels);
    }
    std::string backend = to_string(c.backend);
    r.get("methods.backend", backend);
    try {
      c.backend = parse_backend(backend);
    } catch (const Error& e) {
      detail::fail<ConfigError>(std::string("config: ") + e.what());
    }
    r.get("methods.least_squares", c.least_squares);
    r.get("methods.cgls_iterations", c.cgls_iterations);
  }

  if (auto* l = t["lambda"].as_table()) {
    detail::check_keys(*l, "lambda", {"points", "lo", "hi", "relative", "refine", "values"});
    r.get("lambda.points", c.grid.points);
    r.get("lambda.lo", c.grid.lo);
    r.get("lambda.hi", c.grid.hi);
    r.get("lambda.relative", c.grid.relative);
    r.get("lambda.refine", c.grid.refine);
    r.get("lambda.values", c.grid.values);
  }

  if (auto* s = t["solver"].as_table()) {
    detail::check_keys(*s, "solver", {"rho", "adapt_rho", "adapt_every", "max_iter", "cg_iter", "cg_tol",
                                      "primal_tol", "dual_tol", "nonneg", "dense_limit", "data_penalty",
                                      "inner_iter", "inner_tol", "max_outer", "constraint_tol"});
    auto& o = c.solver;
    r.get("solver.rho", o.rho);
    r.get("solver.adapt_rho", o.adapt_rho);
    r.get("solver.adapt_every", o.adapt_every);
    r.get("solver.max_iter", o.max_iter);
    r.get("solver.cg_iter", o.cg_iter);
    r.get("solver.cg_tol", o.cg_tol);
    r.get("solver.primal_tol", o.primal_tol);
    r.get("solver.dual_tol", o.dual_tol);
    r.get("solver.nonneg", o.nonneg);
    r.get("solver.dense_limit", o.dense_limit);
    r.get("solver.data_penalty", o.data_penalty);
    r.get("solver.inner_iter", o.inner_iter);
    r.get("solver.inner_tol", o.inner_tol);
    r.get("solver.max_outer", o.max_outer);
    r.get("solver.constraint_tol", o.constraint_tol);
  }

  if (auto* o = t["output"].as_table()) {
    detail::check_keys(*o, "output", {"save_reconstructions"});
    r.get("output.save_reconstructions", c.save_reconstructions);
  }

  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) detail::fail<ConfigError>("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

inline nlohmann::json noise_json(const NoiseSpec& n) {
  switch (n.mode) {
    case NoiseSpec::Mode::none: return {{"mode", "none"}};
    case NoiseSpec::Mode::snr: return {{"mode", "snr"}, {"value", n.value}};
    case NoiseSpec::Mode::sigma: return {{"mode", "sigma"}, {"value", n.value}};
  }
  return nullptr;
}

/// Everything that influences results (out and threads are excluded).
inline nlohmann::json canonical_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["study"] = to_string(c.study);
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["signal"] = {{"n", c.signal.n},
                 {"degrees", c.degrees},
                 {"jumps", c.signal.jumps},
                 {"coef_range", {c.signal.coef_lo, c.signal.coef_hi}}};
  j["forward"] = {{"sensing", to_string(c.sensing)},
                  {"density", c.density},
                  {"rates", c.rates},
                  {"n_pix", c.n_pix},
                  {"angles", c.angles}};
  j["noise"] = nlohmann::json::array();
  for (const auto& n : c.noise) j["noise"].push_back(noise_json(n));
  std::vector<std::string> labels;
  for (const auto& m : c.methods) labels.push_back(m.label());
  j["methods"] = {{"list", labels},
                  {"backend", to_string(c.backend)},
                  {"least_squares", c.least_squares},
                  {"cgls_iterations", c.cgls_iterations}};
  j["lambda"] = {{"points", c.grid.points},
                 {"lo", c.grid.lo},
                 {"hi", c.grid.hi},
                 {"relative", c.grid.relative},
                 {"refine", c.grid.refine},
                 {"values", c.grid.values}};
  const auto& o = c.solver;
  j["solver"] = {{"rho", o.rho},
                 {"adapt_rho", o.adapt_rho},
                 {"adapt_every", o.adapt_every},
                 {"max_iter", o.max_iter},
                 {"cg_iter", o.cg_iter},
                 {"cg_tol", o.cg_tol},
                 {"primal_tol", o.primal_tol},
                 {"dual_tol", o.dual_tol},
                 {"nonneg", o.nonneg},
                 {"dense_limit", o.dense_limit},
                 {"data_penalty", o.data_penalty},
                 {"inner_iter", o.inner_iter},
                 {"inner_tol", o.inner_tol},
                 {"max_outer", o.max_outer},
                 {"constraint_tol", o.constraint_tol}};
  j["success_tol"] = c.success_tol;
  j["save_reconstructions"] = c.save_reconstructions;
  return j;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_json(c).dump())));
  return buf;
}

}  // namespace mhotv
