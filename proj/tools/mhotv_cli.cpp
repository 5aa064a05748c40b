// mhotv command line: stencil / filter dumps, the simulation studies, single
// lambda sweeps and operator adjoint checks.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mhotv/mhotv.hpp"

namespace {

using namespace mhotv;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

struct NumericalFailure : Error {
  using Error::Error;
};

struct StudyFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> trials;
  std::optional<int> threads;
  std::optional<std::string> backend;
};

void add_study_flags(CLI::App* cmd, StudyFlags& f) {
  cmd->add_option("--config", f.config, "TOML experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--trials", f.trials, "trials per cell");
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--backend", f.backend, "MHOTV coefficient path")
      ->check(CLI::IsMember({"fourier", "decomp", "direct"}));
}

ExperimentConfig resolve(StudyKind study, const StudyFlags& f) {
  ExperimentConfig c = f.config.empty() ? default_config(study) : load_config(f.config);
  if (c.study != study)
    throw ConfigError("config is for study '" + to_string(c.study) + "', not '" + to_string(study) + "'");
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.trials) c.trials = *f.trials;
  if (f.threads) c.threads = *f.threads;
  if (f.backend) c.backend = parse_backend(*f.backend);
  c.validate();
  return c;
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericalFailure(what + " is not finite");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int run_study(StudyKind study, const StudyFlags& flags) {
  const ExperimentConfig c = resolve(study, flags);
  const fs::path out = c.out;
  std::cout << to_string(study) << ": config " << config_hash(c) << ", seed " << c.seed << ", " << c.trials
            << " trial(s), output " << out.string() << '\n';
  switch (study) {
    case StudyKind::recover1d: {
      const auto r = run_recovery_study(c, out);
      print_warnings(r.warnings);
      for (const auto& label : r.method_labels()) {
        double sum = 0.0;
        for (const auto& t : r.trials) sum += t.at(label).rel_error;
        require_finite(sum, label + " error");
        std::printf("  %-12s mean rel error %.4f\n", label.c_str(), sum / r.trials.size());
      }
      break;
    }
    case StudyKind::tomo2d: {
      const auto r = run_tomo_study(c, out);
      print_warnings(r.warnings);
      for (const auto& m : r.methods) {
        require_finite(m.rel_error, m.method + " error");
        std::printf("  %-12s rel error %.4f  data error %.4f\n", m.method.c_str(), m.rel_error, m.data_error);
      }
      std::printf("  data error band %.4f\n", r.data_error_band());
      break;
    }
    case StudyKind::table1: {
      const auto r = run_table1(c, out);
      print_warnings(r.warnings);
      for (const auto& e : r.entries) {
        require_finite(e.mean(), e.method + " error");
        std::printf("  snr %-5g %-14s mean rel error %.4f\n", e.snr, e.method.c_str(), e.mean());
      }
      break;
    }
    case StudyKind::success: {
      const auto r = run_success_study(c, out);
      print_warnings(r.warnings);
      for (const auto& cv : r.curves) {
        std::printf("  degree %d %-12s", cv.degree, cv.method.c_str());
        for (double f : cv.fraction) std::printf(" %.2f", f);
        std::printf("\n");
      }
      break;
    }
    case StudyKind::sweep: {
      const auto r = run_sweep(c, out);
      require_finite(r.rel_error, "sweep error");
      for (const auto& p : r.curve) std::printf("  lambda %.6g  rel error %.5f\n", p.lambda, p.rel_error);
      std::printf("  best lambda %.6g  rel error %.5f\n", r.lambda, r.rel_error);
      if (r.at_endpoint) std::cerr << "warning: best lambda is at the end of the grid\n";
      break;
    }
  }
  return kOk;
}

int adjoint_checks(Eigen::Index n, int probes, double tol) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random = [&](Eigen::Index size) {
    Signal x(size);
    for (auto& v : x) v = normal(rng);
    return x;
  };
  auto transform_gap = [&](const SparsifyingTransform& t) {
    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
      const Signal x = random(t.shape().size());
      CoefficientStack y = t.forward(random(t.shape().size()));
      for (auto& p : y.planes) p = random(p.size());
      const CoefficientStack tx = t.forward(x);
      const double lhs = tx.dot(y), rhs = x.dot(t.adjoint(y));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs) + std::abs(rhs), 1e-300));
    }
    return worst;
  };

  bool ok = true;
  auto report = [&](const std::string& name, double gap) {
    const bool pass = gap < tol;
    ok = ok && pass;
    std::printf("%-32s %.3e %s\n", name.c_str(), gap, pass ? "ok" : "FAIL");
  };
  for (auto backend : {Backend::fourier, Backend::decomposition})
    report("mhotv k=3 l=3 (" + to_string(backend) + ")",
           transform_gap(MultiscaleTransform(3, 3, Shape::line(n), backend)));
  report("mhotv k=2.5 l=2 (fourier)", transform_gap(MultiscaleTransform(2.5, 2, Shape::line(n), Backend::fourier)));
  report("mhotv 2-D k=2 l=2", transform_gap(MultiscaleTransform(2, 2, Shape::image(32, 32), Backend::fourier)));
  report("wavelet db3 3 levels", transform_gap(WaveletFrameTransform(3, 3, Shape::line(n))));
  report("wavelet 2-D db2 2 levels", transform_gap(WaveletFrameTransform(2, 2, Shape::image(32, 32))));
  report("random sensing", adjoint_check(random_sensing(n / 2, n, 0.1, 3), probes));
  report("radon 64x64, 29 angles", adjoint_check(radon_operator(SinogramGeometry::parallel(64, 29)), probes));
  return ok ? kOk : kNumericalFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale higher-order TV: transforms, solvers and simulation studies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mhotv::kVersion);

  auto* stencil = app.add_subcommand("stencil", "finite-difference stencils");
  auto* stencil_dump = stencil->add_subcommand("dump", "write the stencil phi_{k,j} as CSV (index,value)");
  stencil->require_subcommand(1);
  int s_order = 1, s_scale = 1, s_n = 16;
  std::string s_out;
  stencil_dump->add_option("--order,-k", s_order, "order k")->required();
  stencil_dump->add_option("--scale,-j", s_scale, "scale j")->required();
  stencil_dump->add_option("--n", s_n, "length N")->required();
  stencil_dump->add_option("--out", s_out, "CSV path (stdout when omitted)");

  auto* filter = app.add_subcommand("filter", "Fourier filters of the stencils");
  auto* filter_dump = filter->add_subcommand("dump", "write the DFT of phi_{k,j} as CSV (xi,re,im)");
  filter->require_subcommand(1);
  double f_order = 1.0;
  int f_scale = 1, f_n = 16;
  std::string f_out;
  filter_dump->add_option("--order,-k", f_order, "order k (fractional allowed)")->required();
  filter_dump->add_option("--scale,-j", f_scale, "scale j")->required();
  filter_dump->add_option("--n", f_n, "length N")->required();
  filter_dump->add_option("--out", f_out, "CSV path (stdout when omitted)");

  struct StudyCommand {
    StudyKind kind;
    const char* name;
    const char* help;
    StudyFlags flags;
    CLI::App* cmd = nullptr;
  };
  std::vector<StudyCommand> studies{
      {StudyKind::recover1d, "recover1d", "noisy 1-D recovery study", {}},
      {StudyKind::tomo2d, "tomo2d", "2-D tomography study", {}},
      {StudyKind::table1, "table1", "mean error table over noise levels, orders and levels", {}},
      {StudyKind::success, "success", "noiseless success-probability curves", {}},
      {StudyKind::sweep, "sweep", "lambda sweep of one method on one problem", {}},
  };
  for (auto& s : studies) {
    s.cmd = app.add_subcommand(s.name, s.help);
    add_study_flags(s.cmd, s.flags);
  }

  auto* adjoint = app.add_subcommand("adjoint-check", "dot-product tests of every operator");
  int a_n = 256, a_probes = 10;
  double a_tol = 1e-8;
  adjoint->add_option("--n", a_n, "1-D length");
  adjoint->add_option("--probes", a_probes, "random probes per operator");
  adjoint->add_option("--tol", a_tol, "pass threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (stencil_dump->parsed()) {
      const auto s = build_stencil(s_order, s_scale, s_n);
      if (s_out.empty()) {
        std::cout << "index,value\n";
        for (Eigen::Index i = 0; i < s.size(); ++i) std::cout << i << ',' << io::num(s.values[i]) << '\n';
      } else {
        io::dump_stencil(s_out, s);
      }
      return kOk;
    }
    if (filter_dump->parsed()) {
      const auto h = filter_spectrum(f_order, f_scale, f_n);
      if (f_out.empty()) {
        std::cout << "xi,re,im\n";
        for (Eigen::Index i = 0; i < h.size(); ++i)
          std::cout << i << ',' << io::num(h.values[i].real()) << ',' << io::num(h.values[i].imag()) << '\n';
      } else {
        io::dump_filter(f_out, h);
      }
      return kOk;
    }
    if (adjoint->parsed()) return adjoint_checks(a_n, a_probes, a_tol);
    for (auto& s : studies)
      if (s.cmd->parsed()) return run_study(s.kind, s.flags);
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kOk;
}
