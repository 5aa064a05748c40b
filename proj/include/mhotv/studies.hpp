#pragma once

// The four simulation studies plus single-problem lambda sweeps.
//
// Work is split into independent (trial, cell, method) jobs. Each job rebuilds
// its own seeded problem, so results do not depend on the thread count or on
// scheduling; rows are collected by job index and written in that order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fftw3.h>
#include <json.hpp>

#include "mhotv/cgls.hpp"
#include "mhotv/config.hpp"
#include "mhotv/io.hpp"
#include "mhotv/metrics.hpp"
#include "mhotv/radon.hpp"
#include "mhotv/signals.hpp"
#include "mhotv/solvers.hpp"
#include "mhotv/sweep.hpp"

namespace mhotv {

inline constexpr const char* kVersion = "0.1.0";

/// Runs fn(0..count-1) on up to `threads` workers. The first exception is
/// rethrown after all workers stop.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, count); ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next++;
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// "MHOTV1.5(3)" -> "MHOTV1p5_3", usable as a file name.
inline std::string slug(const std::string& label) {
  std::string out;
  for (char ch : label) {
    if (ch == '(') out += '_';
    else if (ch == '.') out += 'p';
    else if (ch != ')') out += ch;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

/// Writes study outputs under one directory; every file gets a JSON sidecar
/// carrying the config hash and seed. Disabled sinks ignore all writes.
class OutputSink {
 public:
  OutputSink(const ExperimentConfig& c, std::optional<std::filesystem::path> dir)
      : dir_(std::move(dir)), hash_(config_hash(c)), seed_(c.seed), study_(to_string(c.study)),
        config_(canonical_json(c)), threads_(c.threads) {
    if (dir_) std::filesystem::create_directories(*dir_);
  }

  bool enabled() const { return dir_.has_value(); }
  const std::string& hash() const { return hash_; }
  const std::vector<std::string>& files() const { return files_; }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows) {
    if (!enabled()) return;
    io::CsvWriter w(*dir_ / name, header);
    for (const auto& r : rows) w.row(r);
    sidecar(name, {{"format", "csv"}, {"columns", header}, {"rows", rows.size()}});
  }

  void signal_csv(const std::string& name, const Signal& s, const std::string& value_name) {
    if (!enabled()) return;
    io::write_signal_csv(*dir_ / name, s, value_name);
    sidecar(name, {{"format", "csv"}, {"columns", {"index", value_name}}, {"rows", s.size()}});
  }

  void image(const std::string& stem, const Image& img, double lo, double hi, bool with_csv) {
    if (!enabled()) return;
    io::write_pgm(*dir_ / (stem + ".pgm"), img, lo, hi);
    sidecar(stem + ".pgm", {{"format", "pgm"}, {"rows", img.rows}, {"cols", img.cols}, {"range", {lo, hi}}});
    if (with_csv) {
      io::write_image_csv(*dir_ / (stem + ".csv"), img);
      sidecar(stem + ".csv", {{"format", "csv"}, {"rows", img.rows}, {"cols", img.cols}});
    }
  }

  void json(const std::string& name, nlohmann::json j) {
    if (!enabled()) return;
    j["config_hash"] = hash_;
    j["seed"] = seed_;
    io::write_json(*dir_ / name, j);
    files_.push_back(name);
  }

  /// manifest.json: config, hash, versions, file list, warnings and wall time.
  void manifest(double wall_seconds, const std::vector<std::string>& warnings) {
    if (!enabled()) return;
    nlohmann::json m;
    m["study"] = study_;
    m["config_hash"] = hash_;
    m["seed"] = seed_;
    m["config"] = config_;
    m["threads"] = threads_;
    m["versions"]["mhotv"] = kVersion;
    m["versions"]["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION);
    m["versions"]["fftw"] = std::string(fftw_version);
    m["versions"]["compiler"] = std::string(__VERSION__);
    m["wall_seconds"] = wall_seconds;
    m["files"] = files_;
    m["warnings"] = warnings;
    io::write_json(*dir_ / "manifest.json", m);
  }

 private:
  void sidecar(const std::string& name, nlohmann::json j) {
    j["file"] = name;
    j["study"] = study_;
    j["config_hash"] = hash_;
    j["seed"] = seed_;
    io::write_json(*dir_ / (name + ".json"), j);
    files_.push_back(name);
  }

  std::optional<std::filesystem::path> dir_;
  std::string hash_;
  std::uint64_t seed_;
  std::string study_;
  nlohmann::json config_;
  int threads_;
  std::vector<std::string> files_;
};

// ---------------------------------------------------------------------------
// Problems

struct Problem1D {
  std::uint64_t seed = 0;
  Signal truth;
  std::shared_ptr<LinearOperator> a;
  Signal clean;
  Signal b;
};

/// Seeded 1-D problem: piecewise polynomial, sensing matrix with m =
/// round(rate n) rows, noisy data. `noise_stream` selects independent noise
/// draws for the same signal and matrix.
inline Problem1D make_problem_1d(const ExperimentConfig& c, std::uint64_t seed, int degree, double rate,
                                 const NoiseSpec& noise, std::uint64_t noise_stream = 0) {
  Problem1D p;
  p.seed = seed;
  PiecewisePolySpec spec = c.signal;
  spec.degree = degree;
  spec.seed = derive_seed(seed, 0, 10);
  p.truth = gen_piecewise_poly(spec);
  const Eigen::Index m = c.samples(rate);
  if (c.sensing == SensingKind::sparse)
    p.a = std::make_shared<SparseOperator>(random_sensing(m, spec.n, c.density, derive_seed(seed, 0, 11)));
  else
    p.a = std::make_shared<DenseOperator>(gaussian_sensing(m, spec.n, derive_seed(seed, 0, 11)));
  p.clean = p.a->apply(p.truth);
  p.b = add_noise(p.clean, noise, derive_seed(seed, noise_stream, 12));
  return p;
}

inline RegularizerSpec with_backend(RegularizerSpec s, const ExperimentConfig& c) {
  s.backend = c.backend;
  return s;
}

struct MethodResult {
  std::string method;
  double lambda = 0.0;  // cgls rows: best iteration count
  double rel_error = 0.0;
  double data_error = 0.0;
  std::size_t l0 = 0;
  int iterations = 0;
  bool converged = false;
  bool at_endpoint = false;
  std::vector<SweepPoint> curve;
  Signal solution;
};

/// Oracle-lambda reconstruction of one problem with one method.
inline MethodResult sweep_method(const LinearOperator& a, const Signal& b, const Signal& truth,
                                 const RegularizerSpec& spec, Shape shape, const ExperimentConfig& c) {
  const auto grid = make_lambda_grid(c.grid, lambda_scale(a, b));
  const SweepResult s = lambda_sweep(a, b, truth, spec, shape, grid, c.solver, c.grid.refine);
  MethodResult r;
  r.method = spec.label();
  r.lambda = s.best_point().lambda;
  r.rel_error = s.best_point().rel_error;
  r.data_error = s.best_point().data_error;
  r.iterations = s.best_point().iterations;
  r.converged = s.best_point().converged;
  r.at_endpoint = s.at_endpoint;
  r.curve = s.curve;
  r.solution = s.solution;
  return r;
}

/// CGLS baseline, keeping the iteration count with the smallest true error.
inline MethodResult cgls_baseline(const LinearOperator& a, const Signal& b, const Signal& truth,
                                  const std::vector<int>& iteration_counts, const std::string& name) {
  MethodResult best;
  best.method = name;
  best.rel_error = std::numeric_limits<double>::infinity();
  for (int k : iteration_counts) {
    auto [x, rep] = cgls(a, b, k, 1e-12);
    const double e = rel_error(x, truth);
    best.curve.push_back({static_cast<double>(k), e, rep.relative_data_error, rep.iterations, rep.converged});
    if (e < best.rel_error) {
      best.lambda = k;
      best.rel_error = e;
      best.data_error = rep.relative_data_error;
      best.iterations = rep.iterations;
      best.converged = rep.converged;
      best.solution = std::move(x);
    }
  }
  best.at_endpoint = iteration_counts.size() > 1 &&
                     (best.lambda == iteration_counts.front() || best.lambda == iteration_counts.back());
  return best;
}

inline std::string endpoint_warning(const std::string& where, const MethodResult& r) {
  const bool cg = r.method == "LS" || r.method == "CGLS";
  return where + " " + r.method + ": best " + (cg ? "iteration count " : "lambda ") + io::num(r.lambda) +
         " is at the end of the grid";
}

namespace detail {

inline std::vector<std::string> sweep_row(const std::vector<std::string>& key, const SweepPoint& p) {
  auto row = key;
  row.insert(row.end(), {io::num(p.lambda), io::num(p.rel_error), io::num(p.data_error),
                         std::to_string(p.iterations), p.converged ? "1" : "0"});
  return row;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 1-D recovery

struct RecoveryTrial {
  int trial = 0;
  std::uint64_t seed = 0;
  Signal truth;
  std::vector<MethodResult> methods;  // LS first when enabled, then config order

  const MethodResult& at(const std::string& label) const {
    for (const auto& m : methods)
      if (m.method == label) return m;
    detail::fail<ConfigError>("method " + label + " is not part of this study");
  }
};

struct RecoveryResult {
  int diff_order = 3;  // order of the finite differences behind the l0 proxy
  std::vector<RecoveryTrial> trials;
  std::vector<std::string> warnings;

  std::vector<std::string> method_labels() const {
    std::vector<std::string> out;
    for (const auto& m : trials.front().methods) out.push_back(m.method);
    return out;
  }

  /// Fraction of trials with pred(first, second).
  double fraction(const std::string& a, const std::string& b,
                  const std::function<bool(const MethodResult&, const MethodResult&)>& pred) const {
    int n = 0;
    for (const auto& t : trials) n += pred(t.at(a), t.at(b));
    return trials.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(trials.size());
  }
  double win_fraction(const std::string& a, const std::string& b) const {
    return fraction(a, b, [](const auto& x, const auto& y) { return x.rel_error < y.rel_error; });
  }
  double sparser_fraction(const std::string& a, const std::string& b) const {
    return fraction(a, b, [](const auto& x, const auto& y) { return x.l0 < y.l0; });
  }
};

/// Noisy 1-D recovery (LS baseline plus every configured method, oracle lambda
/// per trial). The l0 proxy counts |Delta^k f| > 1e-3 max with k = degree + 1.
inline RecoveryResult run_recovery_study(const ExperimentConfig& c,
                                         std::optional<std::filesystem::path> out = std::nullopt) {
  c.validate();
  const auto t0 = std::chrono::steady_clock::now();
  OutputSink sink(c, std::move(out));
  const int degree = c.degrees.front();
  const double rate = c.rates.front();
  const int n_methods = static_cast<int>(c.methods.size()) + (c.least_squares ? 1 : 0);

  RecoveryResult res;
  res.diff_order = degree + 1;
  res.trials.resize(c.trials);
  for (int t = 0; t < c.trials; ++t) {
    res.trials[t].trial = t;
    res.trials[t].seed = derive_seed(c.seed, t, 0);
    res.trials[t].methods.resize(n_methods);
  }

  parallel_for(c.trials * n_methods, c.threads, [&](int job) {
    const int t = job / n_methods, k = job % n_methods;
    auto& trial = res.trials[t];
    const Problem1D p = make_problem_1d(c, trial.seed, degree, rate, c.noise.front());
    if (k == 0) trial.truth = p.truth;
    MethodResult r;
    if (c.least_squares && k == 0)
      r = cgls_baseline(*p.a, p.b, p.truth, c.cgls_iterations, "LS");
    else
      r = sweep_method(*p.a, p.b, p.truth, with_backend(c.methods[k - (c.least_squares ? 1 : 0)], c),
                       Shape::line(c.signal.n), c);
    r.l0 = l0_proxy(finite_differences(r.solution, res.diff_order));
    trial.methods[k] = std::move(r);
  });

  std::vector<std::vector<std::string>> errors, curves;
  for (const auto& t : res.trials)
    for (const auto& m : t.methods) {
      if (m.at_endpoint) res.warnings.push_back(endpoint_warning("trial " + std::to_string(t.trial), m));
      errors.push_back({std::to_string(t.trial), std::to_string(t.seed), m.method, io::num(m.lambda),
                        io::num(m.rel_error), io::num(m.data_error), std::to_string(m.l0),
                        std::to_string(m.iterations), m.converged ? "1" : "0", m.at_endpoint ? "1" : "0"});
      for (const auto& p : m.curve) curves.push_back(detail::sweep_row({std::to_string(t.trial), m.method}, p));
    }
  sink.csv("errors.csv",
           {"trial", "seed", "method", "lambda", "rel_error", "data_error", "l0_proxy", "iterations",
            "converged", "at_endpoint"},
           errors);
  sink.csv("curves.csv", {"trial", "method", "lambda", "rel_error", "data_error", "iterations", "converged"},
           curves);

  std::vector<std::vector<std::string>> summary;
  for (const auto& label : res.method_labels()) {
    std::vector<double> e, l0;
    for (const auto& t : res.trials) {
      e.push_back(t.at(label).rel_error);
      l0.push_back(static_cast<double>(t.at(label).l0));
    }
    summary.push_back({label, io::num(detail::mean(e)), io::num(detail::stddev(e)), io::num(detail::mean(l0))});
  }
  sink.csv("summary.csv", {"method", "mean_rel_error", "std_rel_error", "mean_l0_proxy"}, summary);

  if (c.save_reconstructions)
    for (const auto& t : res.trials) {
      char dir[32];
      std::snprintf(dir, sizeof dir, "trial_%03d/", t.trial);
      sink.signal_csv(std::string(dir) + "truth.csv", t.truth, "value");
      for (const auto& m : t.methods) {
        sink.signal_csv(std::string(dir) + "recon_" + slug(m.method) + ".csv", m.solution, "value");
        sink.signal_csv(std::string(dir) + "logdiff_" + slug(m.method) + ".csv",
                        log_differences(m.solution, res.diff_order), "log10_abs_diff");
      }
    }

  sink.manifest(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), res.warnings);
  return res;
}

// ---------------------------------------------------------------------------
// 2-D tomography

struct TomoResult {
  std::vector<MethodResult> methods;  // FBP, CGLS, then config order (trial 0)
  std::vector<std::vector<MethodResult>> trials;
  Image phantom;
  Sinogram sinogram;
  std::vector<std::string> warnings;

  const MethodResult& at(const std::string& label, int trial = 0) const {
    for (const auto& m : trials[trial])
      if (m.method == label) return m;
    detail::fail<ConfigError>("method " + label + " is not part of this study");
  }

  /// max - min relative data error over the regularized methods of a trial.
  double data_error_band(int trial = 0) const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& m : trials[trial]) {
      if (m.method == "FBP" || m.method == "CGLS") continue;
      lo = std::min(lo, m.data_error);
      hi = std::max(hi, m.data_error);
    }
    return hi - lo;
  }
};

/// Parallel-beam tomography of the phantom: FBP, CGLS and every configured
/// method (oracle lambda, solver options from the config, usually nonneg).
inline TomoResult run_tomo_study(const ExperimentConfig& c,
                                 std::optional<std::filesystem::path> out = std::nullopt) {
  c.validate();
  const auto t0 = std::chrono::steady_clock::now();
  OutputSink sink(c, std::move(out));
  const auto geom = SinogramGeometry::parallel(c.n_pix, c.angles);
  const SparseOperator a = radon_operator(geom);
  TomoResult res;
  res.phantom = phantom2d(c.n_pix);
  const Signal clean = a.apply(res.phantom.pixels);
  const Shape shape = res.phantom.shape();
  const int n_methods = static_cast<int>(c.methods.size()) + 2;

  std::vector<Signal> data(c.trials);
  for (int t = 0; t < c.trials; ++t) data[t] = add_noise(clean, c.noise.front(), derive_seed(c.seed, t, 12));
  res.sinogram = Sinogram::from_vector(data[0], geom);
  res.trials.assign(c.trials, std::vector<MethodResult>(n_methods));

  parallel_for(c.trials * n_methods, c.threads, [&](int job) {
    const int t = job / n_methods, k = job % n_methods;
    const Signal& b = data[t];
    const Signal& truth = res.phantom.pixels;
    MethodResult r;
    if (k == 0) {
      r.method = "FBP";
      r.solution = filtered_backprojection(Sinogram::from_vector(b, geom), geom).pixels;
      r.rel_error = rel_error(r.solution, truth);
      r.data_error = (a.apply(r.solution) - b).norm() / b.norm();
      r.converged = true;
    } else if (k == 1) {
      r = cgls_baseline(a, b, truth, c.cgls_iterations, "CGLS");
    } else {
      r = sweep_method(a, b, truth, with_backend(c.methods[k - 2], c), shape, c);
    }
    res.trials[t][k] = std::move(r);
  });
  res.methods = res.trials.front();

  std::vector<std::vector<std::string>> errors, curves, band;
  for (int t = 0; t < c.trials; ++t) {
    for (const auto& m : res.trials[t]) {
      if (m.at_endpoint) res.warnings.push_back(endpoint_warning("trial " + std::to_string(t), m));
      errors.push_back({std::to_string(t), m.method, io::num(m.lambda), io::num(m.rel_error),
                        io::num(m.data_error), std::to_string(m.iterations), m.converged ? "1" : "0",
                        m.at_endpoint ? "1" : "0"});
      for (const auto& p : m.curve) curves.push_back(detail::sweep_row({std::to_string(t), m.method}, p));
    }
    band.push_back({std::to_string(t), io::num(res.data_error_band(t))});
  }
  sink.csv("errors.csv",
           {"trial", "method", "lambda_or_iterations", "rel_error", "data_error", "iterations", "converged",
            "at_endpoint"},
           errors);
  sink.csv("curves.csv", {"trial", "method", "lambda", "rel_error", "data_error", "iterations", "converged"},
           curves);
  sink.csv("data_error_band.csv", {"trial", "band"}, band);

  sink.image("phantom", res.phantom, 0.0, 1.0, c.save_reconstructions);
  const double smax = res.sinogram.values.maxCoeff();
  const Eigen::MatrixXd by_row = res.sinogram.values.transpose();
  sink.image("sinogram", Image(res.sinogram.n_det(), res.sinogram.n_angles(), Signal(by_row.reshaped())), 0.0,
             smax > 0 ? smax : 1.0, false);
  for (const auto& m : res.methods)
    sink.image(slug(m.method), Image(c.n_pix, c.n_pix, m.solution), 0.0, 1.0, c.save_reconstructions);

  sink.manifest(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), res.warnings);
  return res;
}

// ---------------------------------------------------------------------------
// Table 1: mean error over trials for every (SNR, method)

struct Table1Entry {
  double snr = 0.0;
  std::string method;
  RegularizerSpec spec;
  std::vector<double> errors;  // one per trial
  int endpoint_hits = 0;

  double mean() const { return detail::mean(errors); }
  double stddev() const { return detail::stddev(errors); }
};

struct Table1Result {
  std::vector<Table1Entry> entries;  // noise-major, then config method order
  std::vector<std::string> warnings;

  const Table1Entry& at(double snr, const std::string& method) const {
    for (const auto& e : entries)
      if (e.snr == snr && e.method == method) return e;
    detail::fail<ConfigError>("table1: no entry " + method + " at snr " + io::num(snr));
  }

  /// Entry with the smallest mean error at `snr` among those accepted by `keep`.
  const Table1Entry& argmin(double snr, const std::function<bool(const RegularizerSpec&)>& keep) const {
    const Table1Entry* best = nullptr;
    for (const auto& e : entries)
      if (e.snr == snr && keep(e.spec) && (!best || e.mean() < best->mean())) best = &e;
    if (!best) detail::fail<ConfigError>("table1: no entries match at snr " + io::num(snr));
    return *best;
  }
};

namespace detail {

inline double noise_value(const NoiseSpec& n) { return n.mode == NoiseSpec::Mode::none ? 0.0 : n.value; }

}  // namespace detail

/// For every noise level, method and trial: oracle-lambda reconstruction of a
/// fresh piecewise polynomial from (by default) square Gaussian measurements.
/// Each trial shares its signal and matrix across noise levels.
inline Table1Result run_table1(const ExperimentConfig& c,
                               std::optional<std::filesystem::path> out = std::nullopt) {
  c.validate();
  const auto t0 = std::chrono::steady_clock::now();
  OutputSink sink(c, std::move(out));
  const int n_noise = static_cast<int>(c.noise.size());
  const int n_methods = static_cast<int>(c.methods.size());
  const int degree = c.degrees.front();
  const double rate = c.rates.front();

  std::vector<MethodResult> results(static_cast<std::size_t>(c.trials) * n_noise * n_methods);
  parallel_for(static_cast<int>(results.size()), c.threads, [&](int job) {
    const int k = job % n_methods, s = (job / n_methods) % n_noise, t = job / (n_methods * n_noise);
    const Problem1D p = make_problem_1d(c, derive_seed(c.seed, t, 0), degree, rate, c.noise[s], s);
    MethodResult r = sweep_method(*p.a, p.b, p.truth, with_backend(c.methods[k], c), Shape::line(c.signal.n), c);
    r.solution.resize(0);
    results[job] = std::move(r);
  });

  Table1Result res;
  std::vector<std::vector<std::string>> rows;
  for (int s = 0; s < n_noise; ++s)
    for (int k = 0; k < n_methods; ++k) {
      Table1Entry e;
      e.snr = detail::noise_value(c.noise[s]);
      e.method = c.methods[k].label();
      e.spec = c.methods[k];
      for (int t = 0; t < c.trials; ++t) {
        const auto& r = results[(static_cast<std::size_t>(t) * n_noise + s) * n_methods + k];
        e.errors.push_back(r.rel_error);
        e.endpoint_hits += r.at_endpoint;
        rows.push_back({std::to_string(t), c.noise[s].str(), r.method, io::num(r.lambda), io::num(r.rel_error),
                        io::num(r.data_error), std::to_string(r.iterations), r.converged ? "1" : "0",
                        r.at_endpoint ? "1" : "0"});
      }
      if (e.endpoint_hits > 0)
        res.warnings.push_back(c.noise[s].str() + " " + e.method + ": best lambda at the grid end in " +
                               std::to_string(e.endpoint_hits) + " of " + std::to_string(c.trials) + " trials");
      res.entries.push_back(std::move(e));
    }
  sink.csv("trials.csv",
           {"trial", "noise", "method", "lambda", "rel_error", "data_error", "iterations", "converged",
            "at_endpoint"},
           rows);

  std::vector<std::vector<std::string>> means;
  for (const auto& e : res.entries)
    means.push_back({io::num(e.snr), e.method, e.spec.kind == RegularizerKind::wavelet ? "daub" : "mhotv",
                     io::num(e.spec.order), std::to_string(e.spec.levels), io::num(e.mean()), io::num(e.stddev()),
                     std::to_string(e.errors.size())});
  sink.csv("means.csv", {"noise", "method", "kind", "order", "levels", "mean_rel_error", "std_rel_error", "trials"},
           means);

  // Table layout: one row per (noise, order), "mhotv/daub" cells per level count
  std::vector<int> levels;
  std::vector<double> orders;
  for (const auto& m : c.methods) {
    if (std::find(levels.begin(), levels.end(), m.levels) == levels.end()) levels.push_back(m.levels);
    if (std::find(orders.begin(), orders.end(), m.order) == orders.end()) orders.push_back(m.order);
  }
  std::sort(levels.begin(), levels.end());
  std::sort(orders.begin(), orders.end());
  std::vector<std::string> header{"noise", "order"};
  for (int l : levels) header.push_back("levels_" + std::to_string(l));
  std::vector<std::vector<std::string>> table;
  for (int s = 0; s < n_noise; ++s)
    for (double order : orders) {
      std::vector<std::string> row{io::num(detail::noise_value(c.noise[s])), io::num(order)};
      for (int l : levels) {
        std::string cell[2] = {"-", "-"};
        for (const auto& e : res.entries) {
          if (e.snr != detail::noise_value(c.noise[s]) || e.spec.order != order || e.spec.levels != l) continue;
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.4f", e.mean());
          cell[e.spec.kind == RegularizerKind::wavelet] = buf;
        }
        row.push_back(cell[0] + "/" + cell[1]);
      }
      table.push_back(row);
    }
  sink.csv("table1.csv", header, table);

  sink.manifest(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), res.warnings);
  return res;
}

// ---------------------------------------------------------------------------
// Success curves (noiseless, equality constrained)

struct SuccessCurve {
  int degree = 0;
  std::string method;
  std::vector<double> rates;
  std::vector<double> fraction;  // per rate, in [0, 1]
  int trials = 0;

  /// Number of i with fraction[i + 1] < fraction[i].
  int inversions() const {
    int n = 0;
    for (std::size_t i = 1; i < fraction.size(); ++i) n += fraction[i] < fraction[i - 1];
    return n;
  }
};

struct SuccessResult {
  std::vector<SuccessCurve> curves;
  std::vector<std::string> warnings;

  const SuccessCurve& at(int degree, const std::string& method) const {
    for (const auto& c : curves)
      if (c.degree == degree && c.method == method) return c;
    detail::fail<ConfigError>("success: no curve " + method + " for degree " + std::to_string(degree));
  }
};

/// For every signal degree, sampling rate, trial and method: solve
/// min ||Tf||_1 s.t. Af = b on noiseless data; success iff rel_error < tol.
/// All methods see the same problem for a given (degree, rate, trial).
inline SuccessResult run_success_study(const ExperimentConfig& c,
                                       std::optional<std::filesystem::path> out = std::nullopt) {
  c.validate();
  const auto t0 = std::chrono::steady_clock::now();
  OutputSink sink(c, std::move(out));
  const int n_deg = static_cast<int>(c.degrees.size());
  const int n_rate = static_cast<int>(c.rates.size());
  const int n_methods = static_cast<int>(c.methods.size());
  const int cells = n_deg * n_rate;

  struct Row {
    double rel_error = 0.0;
    double data_error = 0.0;
    int iterations = 0;
    bool converged = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(cells) * c.trials * n_methods);
  parallel_for(static_cast<int>(rows.size()), c.threads, [&](int job) {
    const int k = job % n_methods, t = (job / n_methods) % c.trials, cell = job / (n_methods * c.trials);
    const int d = cell / n_rate, r = cell % n_rate;
    const std::uint64_t seed = derive_seed(derive_seed(c.seed, static_cast<std::uint64_t>(cell), 20), t, 0);
    const Problem1D p = make_problem_1d(c, seed, c.degrees[d], c.rates[r], NoiseSpec{});
    const auto [f, rep] = constrained_l1(*p.a, p.b, with_backend(c.methods[k], c), c.solver,
                                         Shape::line(c.signal.n));
    rows[job] = {rel_error(f, p.truth), rep.relative_data_error, rep.iterations, rep.converged};
  });

  SuccessResult res;
  std::vector<std::vector<std::string>> trial_rows, curve_rows;
  for (int d = 0; d < n_deg; ++d)
    for (int k = 0; k < n_methods; ++k) {
      SuccessCurve curve{c.degrees[d], c.methods[k].label(), c.rates, {}, c.trials};
      for (int r = 0; r < n_rate; ++r) {
        int hits = 0;
        for (int t = 0; t < c.trials; ++t) {
          const auto& row = rows[(static_cast<std::size_t>(d * n_rate + r) * c.trials + t) * n_methods + k];
          const bool ok = row.rel_error < c.success_tol;
          hits += ok;
          trial_rows.push_back({std::to_string(c.degrees[d]), io::num(c.rates[r]), std::to_string(t),
                                curve.method, io::num(row.rel_error), ok ? "1" : "0", io::num(row.data_error),
                                std::to_string(row.iterations), row.converged ? "1" : "0"});
        }
        curve.fraction.push_back(static_cast<double>(hits) / c.trials);
        curve_rows.push_back({std::to_string(c.degrees[d]), curve.method, io::num(c.rates[r]),
                              std::to_string(hits), std::to_string(c.trials), io::num(curve.fraction.back())});
      }
      if (curve.inversions() > 1)
        res.warnings.push_back("degree " + std::to_string(curve.degree) + " " + curve.method + ": " +
                               std::to_string(curve.inversions()) + " inversions in the success curve");
      res.curves.push_back(std::move(curve));
    }
  sink.csv("trials.csv",
           {"degree", "rate", "trial", "method", "rel_error", "success", "data_error", "iterations", "converged"},
           trial_rows);
  sink.csv("curves.csv", {"degree", "method", "rate", "successes", "trials", "fraction"}, curve_rows);

  sink.manifest(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), res.warnings);
  return res;
}

// ---------------------------------------------------------------------------
// Single-problem sweep

/// Error curve of the first configured method on trial 0 of the 1-D setup.
inline MethodResult run_sweep(const ExperimentConfig& c, std::optional<std::filesystem::path> out = std::nullopt) {
  c.validate();
  const auto t0 = std::chrono::steady_clock::now();
  OutputSink sink(c, std::move(out));
  const Problem1D p = make_problem_1d(c, derive_seed(c.seed, 0, 0), c.degrees.front(), c.rates.front(),
                                      c.noise.front());
  MethodResult r = sweep_method(*p.a, p.b, p.truth, with_backend(c.methods.front(), c), Shape::line(c.signal.n), c);
  std::vector<std::vector<std::string>> rows;
  for (const auto& pt : r.curve) rows.push_back(detail::sweep_row({r.method}, pt));
  sink.csv("curve.csv", {"method", "lambda", "rel_error", "data_error", "iterations", "converged"}, rows);
  sink.signal_csv("truth.csv", p.truth, "value");
  sink.signal_csv("recon_" + slug(r.method) + ".csv", r.solution, "value");
  std::vector<std::string> warnings;
  if (r.at_endpoint) warnings.push_back(endpoint_warning("sweep", r));
  sink.manifest(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), warnings);
  return r;
}

}  // namespace mhotv
