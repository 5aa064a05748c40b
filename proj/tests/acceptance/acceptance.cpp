// Acceptance checks. Usage: acceptance [criterion ...]   (default: 1..11)
// Prints one "PASS n: ..." or "FAIL n: ..." line per criterion; exit code is
// the number of failures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mhotv/mhotv.hpp"

using namespace mhotv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Signal gaussian(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal x(n);
  for (auto& v : x) v = normal(rng);
  return x;
}

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

IntMatrix circulant(const Signal& phi) {
  const Eigen::Index n = phi.size();
  IntMatrix c(n, n);
  for (Eigen::Index m = 0; m < n; ++m)
    for (Eigen::Index q = 0; q < n; ++q) c(m, q) = std::llround(phi[((m - q) % n + n) % n]);
  return c;
}

IntMatrix pchain_dense(Eigen::Index n, int step, int order) {
  IntMatrix p = IntMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (const auto& [off, w] : PChain{step, order}.taps()) p(i, (i + off) % n) += w;
  return p;
}

// ---------------------------------------------------------------------------

Outcome filter_oracle() {
  double worst = 0.0;
  int checked = 0, skipped = 0;
  for (int k = 1; k <= 3; ++k)
    for (int j : {1, 2, 4, 8})
      for (int n : {16, 64, 256, 1024}) {
        if (j * (k + 1) > n) {  // stencil support exceeds the period
          ++skipped;
          continue;
        }
        const Spectrum ref = dft_direct(build_stencil(k, j, n).values);
        worst = std::max(worst, (filter_spectrum(k, j, n).values - ref).cwiseAbs().maxCoeff());
        ++checked;
      }
  return {worst < 1e-9, fmt("%d (k,j,N) cases, max |H - DFT(phi)| = %.2e (%d skipped: support > N)", checked,
                            worst, skipped)};
}

Outcome decomposition_exact() {
  int cases = 0, bad = 0;
  for (int k = 1; k <= 3; ++k)
    for (int j = 1; j <= 3; ++j)
      for (int n : {16, 32, 48, 64}) {
        const int scale = 1 << j;
        if (scale * (k + 1) > n) continue;
        const IntMatrix base = circulant(build_stencil(k, 1, n).values);
        const IntMatrix target = circulant(build_stencil(k, scale, n).values);
        std::vector<int> steps;
        for (int jj = 0; jj < j; ++jj) steps.push_back(1 << jj);
        do {
          IntMatrix left = base, right = base;
          for (int step : steps) {
            left = pchain_dense(n, step, k) * left;
            right = right * pchain_dense(n, step, k);
          }
          bad += !(left == target) + !(right == target);
          cases += 2;
        } while (std::next_permutation(steps.begin(), steps.end()));
      }
  return {bad == 0, fmt("%d integer products (all factor orders, both sides), %d mismatches", cases, bad)};
}

Outcome binomial_identity() {
  int bad = 0, cases = 0;
  for (int k = 0; k <= 10; ++k)
    for (int l = 0; l <= k; ++l) {
      const int p = l / 2;
      const std::int64_t lhs = (p % 2 ? -1 : 1) * binomial(k, p);
      std::int64_t rhs = 0;
      for (int j = 0; j <= l; ++j) rhs += (j % 2 ? -1 : 1) * binomial(k, j) * binomial(k + 1, l - j);
      bad += lhs != rhs;
      ++cases;
    }
  return {bad == 0, fmt("%d (k,l) pairs, %d mismatches", cases, bad)};
}

Outcome flop_counts() {
  int bad = 0, cases = 0;
  for (int n : {256, 512, 1024, 4096})
    for (int k = 1; k <= 4; ++k)
      for (int l = 0; l <= 4; ++l) {
        if ((1 << l) * (k + 1) > n) continue;
        FlopCounter d, f;
        transform_decomposition(gaussian(n, 1), k, l, &d);
        transform_fourier(gaussian(n, 2), k, l, &f);
        const std::uint64_t un = n, uk = k, ul = l, lg = std::llround(std::log2(n));
        bad += d.total() != ul * un * (uk + 1) + un * uk;
        bad += f.total() != (ul + 2) * un * lg + (ul + 1) * un;
        cases += 2;
      }
  return {bad == 0, fmt("%d counter checks against the closed forms, %d mismatches", cases, bad)};
}

Outcome adjoints() {
  const int probes = 10;
  std::mt19937_64 rng(5);
  auto transform_gap = [&](const SparsifyingTransform& t) {
    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
      const Signal x = gaussian(t.shape().size(), rng());
      CoefficientStack y = t.forward(x);
      for (auto& p : y.planes) p = gaussian(p.size(), rng());
      const double lhs = t.forward(x).dot(y), rhs = x.dot(t.adjoint(y));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs) + std::abs(rhs), 1e-300));
    }
    return worst;
  };
  std::map<std::string, double> gaps;
  gaps["mhotv"] = std::max({transform_gap(MultiscaleTransform(3, 3, Shape::line(256), Backend::fourier)),
                            transform_gap(MultiscaleTransform(3, 3, Shape::line(256), Backend::decomposition)),
                            transform_gap(MultiscaleTransform(2.5, 2, Shape::line(256), Backend::fourier)),
                            transform_gap(MultiscaleTransform(2, 2, Shape::image(32, 32), Backend::fourier))});
  gaps["wavelet"] = std::max(transform_gap(WaveletFrameTransform(3, 3, Shape::line(256))),
                             transform_gap(WaveletFrameTransform(2, 2, Shape::image(32, 32))));
  gaps["sensing"] = adjoint_check(random_sensing(128, 256, 0.1, 3), probes);
  gaps["radon"] = adjoint_check(radon_operator(SinogramGeometry::parallel(64, 29)), probes);
  double worst = 0.0;
  std::string detail;
  for (const auto& [name, g] : gaps) {
    worst = std::max(worst, g);
    detail += fmt("%s %.1e  ", name.c_str(), g);
  }
  return {worst < 1e-8, detail + "(10 probes each)"};
}

SolverOptions tight() {
  SolverOptions o;
  o.max_iter = 20000;
  o.primal_tol = 1e-10;
  o.dual_tol = 1e-10;
  return o;
}

double weighted_l1(const Regularizer& reg, const Signal& f) {
  const auto c = reg.transform->forward(f);
  double l1 = 0.0;
  for (std::size_t p = 0; p < c.planes.size(); ++p) l1 += reg.weights[p / c.directions] * c.planes[p].lpNorm<1>();
  return l1;
}

Outcome solver_sanity() {
  double cgls_gap = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto a = gaussian_sensing(40, 24, seed);
    const Signal b = gaussian(40, seed + 10);
    RegularizerSpec s;
    s.order = 1;
    s.levels = 3;
    const auto [f, rep] = admm_l1(a, b, s, tight());
    const auto [g, crep] = cgls(a, b, 500, 1e-14);
    cgls_gap = std::max(cgls_gap, (f - g).norm() / g.norm());
  }

  std::ifstream in(std::string(MHOTV_TEST_DATA_DIR) + "/convex_oracle.json");
  const auto j = nlohmann::json::parse(in);
  double admm_gap = 0.0, con_gap = 0.0;
  int n_admm = 0, n_con = 0;
  for (const auto& p : j.at("problems")) {
    const int m = p.at("m"), n = p.at("n");
    Eigen::MatrixXd am(m, n);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) am(r, c) = p.at("A")[r][c];
    const DenseOperator a(am, p.at("name"));
    const std::vector<double> bv = p.at("b");
    const Signal b = Eigen::Map<const Signal>(bv.data(), m);
    RegularizerSpec s;
    s.kind = p.at("kind") == "wavelet" ? RegularizerKind::wavelet : RegularizerKind::mhotv;
    s.order = p.at("order");
    s.levels = p.at("levels");
    s.lambda = p.at("lambda");
    s.weights = p.at("weights").get<std::vector<double>>();
    const double oracle = p.at("objective");
    if (p.at("constrained")) {
      SolverOptions o;
      o.max_outer = 20000;
      o.constraint_tol = 1e-10;
      o.primal_tol = 1e-9;
      s.lambda = 1.0;
      const Regularizer reg = make_regularizer(s, Shape::line(n));
      const auto [f, rep] = constrained_l1(a, b, reg, o);
      con_gap = std::max(con_gap, std::abs(weighted_l1(reg, f) - oracle) / oracle);
      ++n_con;
    } else {
      const Regularizer reg = make_regularizer(s, Shape::line(n));
      const auto [f, rep] = admm_l1(a, b, reg, tight());
      const double obj = (a.apply(f) - b).squaredNorm() + reg.lambda * weighted_l1(reg, f);
      admm_gap = std::max(admm_gap, std::abs(obj - oracle) / oracle);
      ++n_admm;
    }
  }
  return {cgls_gap < 1e-6 && admm_gap < 1e-6 && con_gap < 1e-4 && n_admm > 0 && n_con > 0,
          fmt("lambda=0 vs CGLS %.1e; ADMM objective gap %.1e over %d problems; constrained %.1e over %d", cgls_gap,
              admm_gap, n_admm, con_gap, n_con)};
}

Outcome haar_equivalence() {
  ExperimentConfig c = default_config(StudyKind::recover1d);
  double worst = 0.0;
  for (int degree : {0, 2}) {
    const Problem1D p = make_problem_1d(c, 7, degree, 0.5, NoiseSpec::snr(10.0));
    RegularizerSpec tv;
    tv.order = 1;
    tv.levels = 3;
    tv.lambda = 1e-2 * lambda_scale(*p.a, p.b);
    // Haar detail at level j equals 2^{-(j+1)/2} times the scale-2^j first difference
    RegularizerSpec haar = tv;
    haar.kind = RegularizerKind::wavelet;
    const auto w = level_weights(1, 2);
    haar.weights = std::vector<double>(3);
    for (int j = 0; j < 3; ++j) (*haar.weights)[j] = w[j] * std::pow(2.0, (j + 1) / 2.0);
    SolverOptions o = tight();
    o.max_iter = 5000;
    const auto [f1, r1] = admm_l1(*p.a, p.b, tv, o);
    const auto [f2, r2] = admm_l1(*p.a, p.b, haar, o);
    worst = std::max(worst, (f1 - f2).norm() / f1.norm());
  }
  return {worst < 1e-3, fmt("N=1024, 50%% sampling, SNR 10, MHOTV1(3) vs Haar(3): max relative distance %.2e", worst)};
}

Outcome recovery_study() {
  ExperimentConfig c = default_config(StudyKind::recover1d);
  c.methods = {parse_method("HOTV3"), parse_method("MHOTV3(3)")};
  c.least_squares = false;
  const auto r = run_recovery_study(c);
  const double wins = r.win_fraction("MHOTV3(3)", "HOTV3");
  const double sparser = r.sparser_fraction("MHOTV3(3)", "HOTV3");
  for (const auto& w : r.warnings) std::printf("  note: %s\n", w.c_str());
  return {wins >= 0.8 && sparser >= 0.8,
          fmt("%zu seeds: MHOTV3(3) lower error on %.0f%%, fewer 3rd-difference nonzeros on %.0f%%", r.trials.size(),
              100 * wins, 100 * sparser)};
}

Outcome table1_trend() {
  ExperimentConfig c = default_config(StudyKind::table1);
  c.methods = method_grid({"mhotv"}, {1.0, 2.0, 3.0}, {1, 2, 3, 4});
  const auto r = run_table1(c);
  const auto all = [](const RegularizerSpec&) { return true; };
  bool ok = true;
  std::string detail;
  for (double snr : {2.0, 5.0, 10.0}) {
    const auto& best = r.argmin(snr, all);
    const auto& target = r.at(snr, "MHOTV2(3)");
    ok = ok && best.method == "MHOTV2(3)";
    detail += fmt("SNR %g best %s %.4f (MHOTV2(3) %.4f); ", snr, best.method.c_str(), best.mean(), target.mean());
  }
  const double m10 = r.at(10.0, "MHOTV2(3)").mean();
  ok = ok && std::abs(m10 - 0.0359) <= 0.5 * 0.0359;
  return {ok, detail + fmt("SNR 10 mean %.4f vs 0.0359 +-50%%", m10)};
}

Outcome success_curves() {
  ExperimentConfig c = default_config(StudyKind::success);
  c.degrees = {1};
  c.methods = {parse_method("HOTV2"), parse_method("MHOTV2(3)")};
  const auto r = run_success_study(c);
  const auto& hotv = r.at(1, "HOTV2");
  const auto& mhotv = r.at(1, "MHOTV2(3)");
  bool ok = hotv.fraction.back() == 1.0 && mhotv.fraction.back() == 1.0;
  std::string h, m;
  for (std::size_t i = 0; i < hotv.rates.size(); ++i) {
    ok = ok && mhotv.fraction[i] >= hotv.fraction[i];
    h += fmt(" %.2f", hotv.fraction[i]);
    m += fmt(" %.2f", mhotv.fraction[i]);
  }
  return {ok, fmt("%d trials/rate; HOTV2%s | MHOTV2(3)%s", hotv.trials, h.c_str(), m.c_str())};
}

Outcome tomography() {
  const ExperimentConfig c = default_config(StudyKind::tomo2d);
  const auto r = run_tomo_study(c);
  for (const auto& w : r.warnings) std::printf("  note: %s\n", w.c_str());
  const double band = r.data_error_band();
  const double e = r.at("MHOTV3(3)").rel_error, fbp = r.at("FBP").rel_error, cg = r.at("CGLS").rel_error;
  return {band < 0.02 && e < fbp && e < cg,
          fmt("%ldx%ld, %d angles: data-error band %.4f; MHOTV3(3) %.4f, FBP %.4f, CGLS %.4f", c.n_pix, c.n_pix,
              c.angles, band, e, fbp, cg)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"filter formula vs brute-force DFT", filter_oracle},
      {"decomposition exactness", decomposition_exact},
      {"binomial identity", binomial_identity},
      {"flop counts", flop_counts},
      {"adjoint dot-product tests", adjoints},
      {"solver sanity", solver_sanity},
      {"Haar equivalence", haar_equivalence},
      {"1-D recovery study", recovery_study},
      {"error table trend", table1_trend},
      {"success curves", success_curves},
      {"tomography study", tomography},
  };
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::stoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) which.push_back(i);

  int failures = 0;
  for (int id : which) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::printf("FAIL %d: no such criterion\n", id);
      ++failures;
      continue;
    }
    const auto& [name, run] = criteria[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d: %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures;
}
