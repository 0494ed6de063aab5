#include <doctest.h>

#include "polygmdh/error.hpp"
#include "polygmdh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace polygmdh;
using doctest::Approx;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.channels = 2;
  s.duration = 4.0;
  s.amplitudes = default_profiles(s.bands);
  s.recordings_per_class = 4;
  s.seed = 9;
  return s;
}

// Fewest errors of any single-feature threshold rule, in either direction.
std::size_t best_stump_errors(const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(f.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
  const auto n = order.size();
  const auto pos = static_cast<std::size_t>(y.sum());
  std::size_t best = std::min(pos, n - pos);
  std::size_t pos_below = 0;
  for (std::size_t k = 0; k < n; ++k) {
    pos_below += y[order[k]] > 0.5;
    if (k + 1 < n && f[order[k]] == f[order[k + 1]]) continue;
    const std::size_t below = k + 1;
    // class 1 above the cut, or class 1 below it
    const std::size_t e1 = pos_below + (n - below - (pos - pos_below));
    const std::size_t e2 = (below - pos_below) + (pos - pos_below);
    best = std::min({best, e1, e2});
  }
  return best;
}

double skewness(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  const Eigen::ArrayXd d = v.array() - mean;
  const double m2 = d.square().mean();
  const double m3 = d.cube().mean();
  return m3 / std::pow(m2, 1.5);
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("noiseless classes are separable on one feature") {
  const auto spec = small_spec();
  const auto d = recordings_to_features(generate_recordings(spec), spec.bands, 0.5, 0.25);
  CHECK(d.rows() == 8 * 15);
  std::size_t best = d.rows();
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    best = std::min(best, best_stump_errors(d.features.col(j), d.labels));
  CHECK(best == 0);
}

TEST_CASE("lognormal noise skews band power") {
  auto spec = small_spec();
  spec.channels = 1;
  spec.duration = 32.0;
  spec.recordings_per_class = 16;
  spec.noise = NoiseKind::lognormal;
  spec.noise_scale = 1.0;
  const auto recs = generate_recordings(spec);
  std::vector<LabeledRecording> one_class(recs.begin(), recs.begin() + 16);
  const auto d = recordings_to_features(one_class, spec.bands, 0.5, 0.5);
  REQUIRE(d.rows() >= 1000);
  const Eigen::VectorXd alpha = d.features.col(2);
  MESSAGE("skewness " << skewness(alpha));
  CHECK(skewness(alpha) > 0.5);
}

TEST_CASE("zero amplitudes without noise give silent recordings") {
  auto spec = small_spec();
  spec.amplitudes[0].assign(spec.bands.size(), 0.0);
  spec.amplitudes[1].assign(spec.bands.size(), 0.0);
  for (const auto& r : generate_recordings(spec))
    CHECK(r.recording.samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("recordings are deterministic per seed") {
  auto spec = small_spec();
  spec.noise = NoiseKind::gaussian;
  spec.noise_scale = 1.0;
  const auto a = generate_recordings(spec);
  const auto b = generate_recordings(spec);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].recording.samples == b[i].recording.samples);
    CHECK(a[i].label == (i < 4 ? 0 : 1));
  }
  spec.seed = 10;
  CHECK(generate_recordings(spec)[0].recording.samples != a[0].recording.samples);
}

TEST_CASE("spec validation") {
  auto spec = small_spec();
  spec.overlap = 1.5;
  CHECK_THROWS_AS(generate_recordings(spec), ConfigError);
  spec = small_spec();
  spec.amplitudes[0].pop_back();
  CHECK_THROWS_AS(generate_recordings(spec), ConfigError);
  CHECK_THROWS_AS(parse_noise("pink"), ConfigError);
}

TEST_CASE("polynomial task labels are balanced and the truth reproduces the target") {
  for (int rows : {200, 201}) {
    const auto t = generate_poly_task(2, 5, rows, 0.0, 4);
    const double pos = double(t.data.count_positive());
    CHECK(std::abs(pos - rows / 2.0) <= 1.0);
    CHECK(t.truth.depth() == 2);
    CHECK(t.truth.referenced_features().size() == 3);
    CHECK_NOTHROW(t.data.validate());
    for (Eigen::Index i = 0; i < t.data.rows(); ++i) {
      const std::vector<double> row(t.data.features.row(i).begin(),
                                    t.data.features.row(i).end());
      CHECK(predict(t.truth, t.data.feature_names, row) ==
            Approx(t.target[i]).epsilon(1e-9));
    }
    CHECK(t.target.minCoeff() == Approx(0.0));
    CHECK(t.target.maxCoeff() == Approx(1.0));
  }
}

TEST_CASE("polynomial task argument checks") {
  CHECK_THROWS_AS(generate_poly_task(0, 5, 100, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(generate_poly_task(3, 3, 100, 0.0, 1), ConfigError);
  CHECK(serialize(generate_poly_task(2, 5, 50, 0.1, 1).truth) ==
        serialize(generate_poly_task(2, 5, 50, 0.1, 1).truth));
}

TEST_CASE("neuron task targets are exact without noise") {
  const auto t = generate_neuron_task(100, 100, 0.0, 3);
  const Eigen::VectorXd fitted = t.design.u_train.transpose() * t.true_weights;
  CHECK((fitted - t.design.y_train).norm() == 0.0);
  CHECK(t.design.u_train.cols() == 100);
}

}
