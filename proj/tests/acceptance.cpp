// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "fixtures.hpp"

#include "polygmdh/baseline.hpp"
#include "polygmdh/detail/rng.hpp"
#include "polygmdh/fit.hpp"
#include "polygmdh/gmdh.hpp"
#include "polygmdh/pipeline.hpp"
#include "polygmdh/signal.hpp"
#include "polygmdh/synth.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>

using namespace polygmdh;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Normal equations (U U^T) w = U y solved by Gaussian elimination with
// partial pivoting, written independently of the library.
Eigen::VectorXd normal_equation_oracle(const Eigen::MatrixXd& u, const Eigen::VectorXd& y) {
  const auto p = u.rows();
  std::vector<std::vector<double>> a(static_cast<std::size_t>(p),
                                     std::vector<double>(static_cast<std::size_t>(p + 1), 0.0));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < u.cols(); ++k) s += u(i, k) * u(j, k);
      a[i][j] = s;
    }
    double s = 0.0;
    for (Eigen::Index k = 0; k < u.cols(); ++k) s += u(i, k) * y[k];
    a[i][p] = s;
  }
  for (Eigen::Index c = 0; c < p; ++c) {
    auto piv = c;
    for (auto r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (auto r = c + 1; r < p; ++r) {
      const double f = a[r][c] / a[c][c];
      for (auto k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  Eigen::VectorXd w(p);
  for (auto i = p - 1; i >= 0; --i) {
    double s = a[i][p];
    for (auto k = i + 1; k < p; ++k) s -= a[i][k] * w[k];
    w[i] = s / a[i][i];
  }
  return w;
}

double accuracy(const PolyNetwork& net, const LabeledDataset& d) {
  std::size_t ok = 0;
  const auto binding = bind_inputs(net, d.feature_names);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(d.cols()));
    for (Eigen::Index j = 0; j < d.cols(); ++j) row[static_cast<std::size_t>(j)] = d.features(i, j);
    if (classify_score(predict(net, binding, row)) == static_cast<int>(d.labels[i])) ++ok;
  }
  return double(ok) / double(d.rows());
}

// Rows [0, n) go to training, the rest are held out.
std::pair<LabeledDataset, LabeledDataset> head_tail(const LabeledDataset& d, Eigen::Index n) {
  std::vector<Eigen::Index> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(d.rows() - n));
  std::iota(a.begin(), a.end(), Eigen::Index{0});
  std::iota(b.begin(), b.end(), n);
  return {d.subset(a), d.subset(b)};
}

// 1. Projection fit stops within 30 steps at the recommended settings.
Outcome projection_step_count() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> steps;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto task = generate_neuron_task(100, 100, 0.0, seed);
    FitConfig cfg;
    cfg.chi = 1.9;
    cfg.delta = 0.0015;
    cfg.seed = seed;
    steps.push_back(projection_fit(task.design, cfg).trace.steps);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double med = median(steps);
  return {med <= 30.0 && secs < 5.0,
          fmt::format("median k* = {} (max {}), {:.3f} s", med,
                      *std::max_element(steps.begin(), steps.end()), secs)};
}

// 2. Faster learning rate reaches a fixed error level no later.
Outcome learning_rate_ordering() {
  const auto task = generate_neuron_task(100, 100, 0.0, 7);
  int ordered = 0;
  std::vector<double> fast, slow;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto steps_at = [&](double chi) {
      FitConfig cfg;
      cfg.chi = chi;
      cfg.epsilon = 1e-3;
      cfg.max_steps = 100000;
      cfg.seed = seed;
      return projection_fit(task.design, cfg).trace.steps;
    };
    const int k2 = steps_at(2.0);
    const int k125 = steps_at(1.25);
    fast.push_back(k2);
    slow.push_back(k125);
    if (k2 <= k125) ++ordered;
  }
  return {ordered >= 40, fmt::format("k*(2.0) <= k*(1.25) in {}/50 seeds (median {} vs {})",
                                     ordered, median(fast), median(slow))};
}

// 3. Least squares equals an independent normal-equations solve.
Outcome lsm_oracle() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Eigen::MatrixXd u(4, 50);
    Eigen::VectorXd y(50);
    for (auto& v : u.reshaped()) v = gauss(rng);
    for (auto& v : y) v = gauss(rng);
    const auto w = lsm_fit(u, y).weights;
    const auto o = normal_equation_oracle(u, y);
    worst = std::max(worst, (w - o).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8, fmt::format("max |w - oracle| = {:.3e}", worst)};
}

// 4. Projection run to a tight noise level predicts like least squares.
Outcome projection_matches_lsm() {
  double worst = 0.0;
  int max_steps = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto task = generate_neuron_task(100, 100, 0.0, 100 + seed);
    FitConfig cfg;
    cfg.epsilon = 1e-10;
    cfg.max_steps = 1000000;
    cfg.seed = seed;
    const auto proj = projection_fit(task.design, cfg);
    const auto lsm = lsm_fit(task.design.u_train, task.design.y_train);
    const Eigen::VectorXd diff =
        task.design.u_examine.transpose() * (proj.weights - lsm.weights);
    worst = std::max(worst, std::sqrt(diff.squaredNorm() / double(diff.size())));
    max_steps = std::max(max_steps, proj.trace.steps);
  }
  return {worst < 1e-3,
          fmt::format("max RMS difference on D_B = {:.3e} over 10 tasks (up to {} steps)",
                      worst, max_steps)};
}

// 5. Growth stops at the criterion minimum on depth-2 cascades.
Outcome cr_minimum_stopping() {
  int monotone = 0, depth_ok = 0, acc_ok = 0;
  std::vector<int> depths;
  double worst_acc = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto task = generate_poly_task(2, 5, 800, 0.0, seed);
    auto [fit_rows, held] = head_tail(task.data, 400);
    const auto parts = split(fit_rows, 0.5, seed);
    GrowthConfig cfg;
    cfg.seed = seed;
    const auto r = grow(fit_rows.subset(parts.train), fit_rows.subset(parts.examine), cfg);
    bool strict = true;
    for (int l = 1; l < r.trace.final_layer; ++l)
      if (!(r.trace.layers[static_cast<std::size_t>(l)].cr_min <
            r.trace.layers[static_cast<std::size_t>(l - 1)].cr_min))
        strict = false;
    const int depth = r.network.depth();
    const double acc = accuracy(r.network, held);
    depths.push_back(depth);
    worst_acc = std::min(worst_acc, acc);
    monotone += strict;
    depth_ok += depth == 2 || depth == 3;
    acc_ok += acc >= 0.95;
  }
  std::string ds;
  for (int d : depths) ds += (ds.empty() ? "" : " ") + std::to_string(d);
  return {monotone == 20 && depth_ok == 20 && acc_ok == 20,
          fmt::format("strict CR descent {}/20, depth in {{2,3}} {}/20 (depths {}), "
                      "accuracy >= 0.95 {}/20 (worst {:.3f})",
                      monotone, depth_ok, ds, acc_ok, worst_acc)};
}

// 6. Held-out selection does not grow deeper than training-error selection.
Outcome overfitting_guard() {
  int ok = 0;
  std::string pairs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto task = generate_poly_task(2, 5, 200, 0.0, seed);
    LabeledDataset d = task.data;
    std::mt19937_64 rng(detail::derive_seed(seed, {99}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    d.features.conservativeResize(Eigen::NoChange, d.cols() + 20);
    for (Eigen::Index j = 5; j < d.cols(); ++j) {
      for (Eigen::Index i = 0; i < d.rows(); ++i) d.features(i, j) = unit(rng);
      d.feature_names.push_back(fmt::format("noise{}", j - 4));
    }
    const auto parts = split(d, 0.5, seed);
    const auto a = d.subset(parts.train), b = d.subset(parts.examine);
    GrowthConfig cfg;
    cfg.F = 10;
    cfg.seed = seed;
    const int exterior = grow(a, b, cfg).network.depth();
    cfg.criterion = SelectionCriterion::training;
    const int training = grow(a, b, cfg).network.depth();
    ok += exterior <= training;
    pairs += fmt::format(" {}/{}", exterior, training);
  }
  return {ok >= 18, fmt::format("exterior depth <= training depth in {}/20 (depths{})", ok,
                                pairs)};
}

// 7. Candidate counts per layer.
Outcome candidate_counts() {
  auto choose2 = [](long n) { return n * (n - 1) / 2; };
  bool ok = true;
  for (int m = 2; m <= 50; ++m) {
    ok &= long(generate_candidates(1, m, 0, GrowthMode::full).size()) == choose2(m);
    ok &= long(generate_candidates(1, m, 0, GrowthMode::chain).size()) == choose2(m);
    ok &= long(generate_candidates(2, m, 1, GrowthMode::chain).size()) == m;
    ok &= long(generate_candidates(3, m, 1, GrowthMode::chain).size()) == m;
  }
  for (int F = 2; F <= 80; ++F)
    ok &= long(generate_candidates(2, 50, F, GrowthMode::full).size()) == choose2(F);
  return {ok, "layer 1 = C(m,2) for m in 2..50, layer r = C(F,2) for F in 2..80, chain = m"};
}

// 8. Published rule sets round-trip and evaluate as printed.
Outcome rule_fixtures() {
  const auto a = fixtures::alzheimer_rule();
  const auto b = fixtures::artifact_rule();
  const auto ta = serialize(a), tb = serialize(b);
  const bool idempotent = serialize(deserialize(ta)) == ta && serialize(deserialize(tb)) == tb;
  const std::vector<std::string> header{"x11", "x69", "x73", "x76"};
  const std::vector<double> zeros(4, 0.0);
  const double y = predict(a, header, zeros);
  const int cls = classify(a, header, zeros);
  const auto fa = feature_report(a).size(), fb = feature_report(b).size();
  return {idempotent && std::abs(y - 0.796668) <= 1e-6 && cls == 1 && fa == 4 && fb == 7,
          fmt::format("round trip {}, y(0) = {:.7f}, class {}, features {} and {}",
                      idempotent ? "byte-identical" : "differs", y, cls, fa, fb)};
}

// 9. Band power on known signals.
Outcome band_power_checks() {
  const double rate = 128.0;
  Eigen::VectorXd s(128);
  for (Eigen::Index t = 0; t < s.size(); ++t)
    s[t] = std::sin(2.0 * std::numbers::pi * 10.0 * double(t) / rate);
  const auto bands = band_preset("alzheimer4");
  const auto p = band_powers(s, rate, bands);
  const double total = periodogram(s, rate).power.sum();
  const double alpha_share = p[2] / total;

  // Additivity: [0,8) + [8,64] == [0,64] on a random signal.
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd r(128);
  for (auto& v : r) v = gauss(rng);
  const double lo = band_power(r, rate, {"lo", 0.0, 8.0});
  const double hi = band_power(r, rate, {"hi", 8.0, 64.0}, {}, true);
  const double all = band_power(r, rate, {"all", 0.0, 64.0}, {}, true);
  const double additivity = std::abs(lo + hi - all) / all;

  const auto zero = band_powers(Eigen::VectorXd::Zero(128), rate, bands);
  const bool zero_ok = (zero.array() == 0.0).all();
  return {alpha_share >= 0.95 && additivity <= 1e-9 && zero_ok,
          fmt::format("alpha share {:.4f}, additivity error {:.2e}, zero signal {}", alpha_share,
                      additivity, zero_ok ? "all zero" : "non-zero")};
}

// 10. PCA orthonormality, rank-1 data and agreement with an eigen oracle.
Outcome pca_checks() {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x(40, 6);
  for (auto& v : x.reshaped()) v = gauss(rng);
  x.col(1) += 2.0 * x.col(0);
  const auto model = pca_fit(x, 1.0);
  const Eigen::MatrixXd gram = model.components.transpose() * model.components;
  const double ortho = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
                           .cwiseAbs()
                           .maxCoeff();

  Eigen::MatrixXd line(20, 2);
  for (Eigen::Index i = 0; i < 20; ++i) {
    line(i, 0) = double(i);
    line(i, 1) = 3.0 * double(i) + 1.0;
  }
  const auto q = pca_fit(line, 0.9).outputs();

  // Oracle: Jacobi eigen-decomposition of the sample covariance.
  Eigen::MatrixXd small(5, 3);
  for (auto& v : small.reshaped()) v = gauss(rng);
  const Eigen::RowVectorXd mean = small.colwise().mean();
  const Eigen::MatrixXd c = small.rowwise() - mean;
  Eigen::MatrixXd cov = c.transpose() * c / 4.0;
  Eigen::MatrixXd vecs = Eigen::MatrixXd::Identity(3, 3);
  for (int sweep = 0; sweep < 100; ++sweep)
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        if (std::abs(cov(i, j)) < 1e-300) continue;
        const double th = 0.5 * std::atan2(2.0 * cov(i, j), cov(j, j) - cov(i, i));
        const double cs = std::cos(th), sn = std::sin(th);
        Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(3, 3);
        rot(i, i) = cs;
        rot(j, j) = cs;
        rot(i, j) = sn;
        rot(j, i) = -sn;
        cov = rot.transpose() * cov * rot;
        vecs = vecs * rot;
      }
  std::vector<int> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return cov(a, a) > cov(b, b); });
  const auto m = pca_fit(small, 1.0);
  const Eigen::MatrixXd z = pca_transform(m, small);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const Eigen::VectorXd o = c * vecs.col(order[static_cast<std::size_t>(j)]);
    worst = std::max(worst, std::min((z.col(j) - o).cwiseAbs().maxCoeff(),
                                     (z.col(j) + o).cwiseAbs().maxCoeff()));
  }
  return {ortho <= 1e-8 && q == 1 && worst <= 1e-8,
          fmt::format("orthonormality error {:.2e}, rank-1 q = {}, oracle difference {:.2e}",
                      ortho, q, worst)};
}

// 11. FNN solves XOR and its gradient matches finite differences.
Outcome fnn_checks() {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const Eigen::VectorXd y = fixtures::vec({0, 1, 1, 0});
  FnnTrainConfig cfg;
  cfg.hidden = 2;
  cfg.restarts = 20;
  cfg.max_epochs = 1000;
  cfg.patience = 50;
  cfg.seed = 11;
  const auto r = fnn_train(x, y, x, y, cfg);
  int solved = 0;
  for (Eigen::Index i = 0; i < 4; ++i)
    solved += classify_score(fnn_predict(r.model, x.row(i).transpose())) == int(y[i]);

  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto net = make_fnn(3, 4);
    Eigen::VectorXd theta(net.parameter_count());
    for (auto& v : theta) v = gauss(rng);
    unpack_parameters(net, theta);
    Eigen::MatrixXd xs(12, 3);
    Eigen::VectorXd ys(12);
    for (auto& v : xs.reshaped()) v = unit(rng);
    for (auto& v : ys) v = unit(rng) < 0.5 ? 0.0 : 1.0;
    const auto g = fnn_sse_gradient(net, xs, ys);
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      const double h = 1e-6;
      auto plus = theta, minus = theta;
      plus[k] += h;
      minus[k] -= h;
      unpack_parameters(net, plus);
      const double fp = fnn_sse(net, xs, ys);
      unpack_parameters(net, minus);
      const double fm = fnn_sse(net, xs, ys);
      const double fd = (fp - fm) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
    }
  }
  return {solved == 4 && worst <= 1e-6,
          fmt::format("XOR {}/4 correct, gradient relative error {:.2e}", solved, worst)};
}

// 12. Model bytes do not depend on the worker count.
Outcome determinism() {
  const auto dir = fixtures::scratch("accept_determinism");
  SynthOptions s;
  s.out = dir;
  s.eeg.channels = 6;
  s.eeg.recordings_per_class = 4;
  s.eeg.overlap = 0.3;
  s.seed = 5;
  run_synth(s);
  int same = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<std::string> models;
    for (unsigned threads : {1u, 8u}) {
      std::string all;
      for (auto method : {TrainMethod::gmdh, TrainMethod::chain, TrainMethod::fnn}) {
        TrainOptions o;
        o.data = dir / "features.csv";
        o.method = method;
        o.fitter = method == TrainMethod::chain ? FitterKind::projection : FitterKind::lsm;
        o.F = 12;
        o.restarts = 8;
        o.pca = method == TrainMethod::fnn ? std::optional<double>(0.92) : std::nullopt;
        o.seed = seed;
        o.threads = threads;
        all += run_train(o).model;
      }
      models.push_back(all);
    }
    same += models[0] == models[1];
  }
  return {same == 5, fmt::format("byte-identical models for 1 vs 8 threads in {}/5 seeds", same)};
}

// 13. Desk-scale classification through the whole pipeline.
Outcome end_to_end() {
  auto corpus = [](std::uint64_t seed, NoiseKind noise, double scale) {
    SynthSpec s;
    s.amplitudes = default_profiles(s.bands);
    s.overlap = 0.5;
    s.noise = noise;
    s.noise_scale = scale;
    s.seed = seed;
    s.recordings_per_class = 10;
    return s;
  };
  auto features = [](const SynthSpec& spec, const fs::path& dir) {
    const auto recs = generate_recordings(spec);
    // Recordings alternate between the training file and the test file so
    // segments of one recording never appear on both sides.
    std::vector<LabeledRecording> train, test;
    for (std::size_t i = 0; i < recs.size(); ++i) (i % 2 ? test : train).push_back(recs[i]);
    std::ofstream tr(dir / "train.csv"), te(dir / "test.csv");
    write_csv(tr, recordings_to_features(train, spec.bands, 0.5, 0.25));
    write_csv(te, recordings_to_features(test, spec.bands, 0.5, 0.25));
  };
  auto train = [](const fs::path& dir, FitterKind fitter, std::uint64_t seed) {
    TrainOptions o;
    o.data = dir / "train.csv";
    o.test = dir / "test.csv";
    o.method = TrainMethod::chain;
    o.fitter = fitter;
    o.pca = 0.92;
    o.seed = seed;
    return run_train(o);
  };

  const auto dir = fixtures::scratch("accept_e2e");
  features(corpus(13, NoiseKind::gaussian, 2.0), dir);
  const auto low = train(dir, FitterKind::projection, 13);
  const double acc = low.test->accuracy();

  int better = 0;
  std::string counts;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    features(corpus(1000 + seed, NoiseKind::lognormal, 1.0), dir);
    const auto proj = train(dir, FitterKind::projection, seed);
    const auto lsm = train(dir, FitterKind::lsm, seed);
    better += proj.test->errors <= lsm.test->errors;
    counts += fmt::format(" {}/{}", proj.test->errors, lsm.test->errors);
  }
  return {acc >= 0.90 && better >= 12,
          fmt::format("low-noise test accuracy {:.3f} ({} PCs); heavy noise: projection <= LSM "
                      "errors in {}/20 (proj/lsm{})",
                      acc, low.pca_components.value_or(0), better, counts)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"projection-fit step count", projection_step_count},
      {"learning-rate ordering", learning_rate_ordering},
      {"least-squares oracle equivalence", lsm_oracle},
      {"projection/least-squares agreement", projection_matches_lsm},
      {"criterion-minimum stopping", cr_minimum_stopping},
      {"over-fitting guard", overfitting_guard},
      {"candidate combinatorics", candidate_counts},
      {"rule fixtures", rule_fixtures},
      {"band power", band_power_checks},
      {"PCA", pca_checks},
      {"FNN baseline", fnn_checks},
      {"determinism across thread counts", determinism},
      {"end-to-end classification", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    fmt::print("{} {:>2}. {}: {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
               o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
