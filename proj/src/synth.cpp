#include "polygmdh/synth.hpp"

#include "polygmdh/detail/parallel.hpp"
#include "polygmdh/detail/rng.hpp"
#include "polygmdh/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace polygmdh {

NoiseKind parse_noise(const std::string& token) {
  if (token == "none") return NoiseKind::none;
  if (token == "gaussian") return NoiseKind::gaussian;
  if (token == "lognormal") return NoiseKind::lognormal;
  throw ConfigError("unknown noise kind '" + token + "'");
}

void SynthSpec::validate() const {
  if (channels < 1) throw ConfigError("synth needs at least one channel");
  if (!(rate > 0.0) || !(duration > 0.0))
    throw ConfigError("synth rate and duration must be positive");
  if (bands.empty()) throw ConfigError("synth needs at least one band");
  for (const auto& profile : amplitudes) {
    if (profile.size() != bands.size())
      throw ConfigError("amplitude profile length must match band count");
    for (double a : profile)
      if (!(a >= 0.0)) throw ConfigError("amplitudes must be non-negative");
  }
  for (const auto& b : bands)
    if (!(b.lo >= 0.0 && b.lo < b.hi && b.hi <= rate / 2.0))
      throw ConfigError("band '" + b.name + "' is invalid for rate " +
                        std::to_string(rate));
  if (!(noise_scale >= 0.0)) throw ConfigError("noise scale must be >= 0");
  if (!(noise_block > 0.0)) throw ConfigError("noise block must be positive");
  if (!(overlap >= 0.0 && overlap <= 1.0))
    throw ConfigError("overlap must lie in [0,1]");
  if (!(gain_jitter >= 0.0 && gain_jitter < 1.0))
    throw ConfigError("gain jitter must lie in [0,1)");
  if (recordings_per_class < 1)
    throw ConfigError("need at least one recording per class");
  if (std::llround(duration * rate) < 2)
    throw ConfigError("recording would have fewer than 2 samples");
}

std::array<std::vector<double>, 2> default_profiles(const std::vector<Band>& bands) {
  std::array<std::vector<double>, 2> p;
  for (const auto& b : bands) {
    const double centre = 0.5 * (b.lo + b.hi);
    const bool slow = centre < 4.0;
    const bool alpha = centre >= 7.5 && centre < 13.5;
    p[0].push_back(slow ? 20.0 : 5.0);
    p[1].push_back(alpha ? 20.0 : 5.0);
  }
  return p;
}

std::vector<LabeledRecording> generate_recordings(const SynthSpec& spec) {
  spec.validate();
  const auto samples = static_cast<Eigen::Index>(std::llround(spec.duration * spec.rate));
  const int total = 2 * spec.recordings_per_class;
  std::vector<LabeledRecording> out(static_cast<std::size_t>(total));

  for (int i = 0; i < total; ++i) {
    const int label = i < spec.recordings_per_class ? 0 : 1;
    std::mt19937_64 rng(detail::derive_seed(spec.seed, {static_cast<std::uint64_t>(i)}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double mix = spec.overlap * unit(rng);
    const auto& own = spec.amplitudes[static_cast<std::size_t>(label)];
    const auto& other = spec.amplitudes[static_cast<std::size_t>(1 - label)];

    Recording rec;
    rec.rate = spec.rate;
    rec.samples = Eigen::MatrixXd::Zero(samples, spec.channels);
    for (int c = 0; c < spec.channels; ++c) {
      rec.channel_names.push_back(fmt::format("C{}", c + 1));
      const double gain = 1.0 + spec.gain_jitter * (2.0 * unit(rng) - 1.0);
      for (std::size_t b = 0; b < spec.bands.size(); ++b) {
        const auto& band = spec.bands[b];
        const double amp = gain * ((1.0 - mix) * own[b] + mix * other[b]);
        const double freq = band.lo + (band.hi - band.lo) * (0.15 + 0.7 * unit(rng));
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        for (Eigen::Index t = 0; t < samples; ++t)
          rec.samples(t, c) +=
              amp * std::sin(2.0 * std::numbers::pi * freq * double(t) / spec.rate + phase);
      }
      if (spec.noise == NoiseKind::gaussian) {
        for (Eigen::Index t = 0; t < samples; ++t)
          rec.samples(t, c) += spec.noise_scale * gauss(rng);
      } else if (spec.noise == NoiseKind::lognormal) {
        const auto block = std::max<Eigen::Index>(
            1, static_cast<Eigen::Index>(std::llround(spec.noise_block * spec.rate)));
        const double s = spec.noise_scale;
        for (Eigen::Index t0 = 0; t0 < samples; t0 += block) {
          const double factor = std::exp(s * gauss(rng) - 0.5 * s * s);
          const auto len = std::min(block, samples - t0);
          rec.samples.col(c).segment(t0, len) *= factor;
        }
      }
    }
    out[static_cast<std::size_t>(i)] = {std::move(rec), label};
  }
  return out;
}

LabeledDataset recordings_to_features(const std::vector<LabeledRecording>& recs,
                                      const std::vector<Band>& bands,
                                      double window, double hop,
                                      const SpectrumOptions& opts,
                                      unsigned threads) {
  if (recs.empty()) throw DataError("no recordings");
  std::vector<FeatureRows> rows;
  Eigen::Index total = 0;
  for (const auto& r : recs) {
    rows.push_back(extract_band_features(r.recording, bands, window, hop, opts, threads));
    total += rows.back().values.rows();
    if (rows.back().names != rows.front().names)
      throw DataError("recordings have different channel layouts");
  }
  LabeledDataset d;
  d.feature_names = rows.front().names;
  d.features.resize(total, static_cast<Eigen::Index>(d.feature_names.size()));
  d.labels.resize(total);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto n = rows[i].values.rows();
    d.features.middleRows(at, n) = rows[i].values;
    d.labels.segment(at, n).setConstant(double(recs[i].label));
    at += n;
  }
  return d;
}

PolyTask generate_poly_task(int depth, int m, int rows, double noise,
                            std::uint64_t seed) {
  if (depth < 1) throw ConfigError("cascade depth must be >= 1");
  if (m < depth + 1) throw ConfigError("need m >= depth + 1 features");
  if (rows < 4) throw ConfigError("need at least 4 rows");
  if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");

  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng(detail::derive_seed(seed, {static_cast<std::uint64_t>(attempt)}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<int> cols(static_cast<std::size_t>(m));
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(cols.begin(), cols.end(), rng);
    cols.resize(static_cast<std::size_t>(depth + 1));

    Eigen::MatrixXd x(rows, m);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = unit(rng);

    std::vector<Neuron> graph;
    Eigen::VectorXd y;
    for (int r = 1; r <= depth; ++r) {
      Neuron n;
      n.id = {r, 1};
      n.kind = TransferKind::bilinear;
      n.weights.resize(4);
      for (auto& w : n.weights) w = gauss(rng);
      if (r == 1) {
        n.first = InputRef::feature(cols[0] + 1);
        n.second = InputRef::feature(cols[1] + 1);
        y = eval_neuron_batch(make_design(x.col(cols[0]), x.col(cols[1]), n.kind), n.weights);
      } else {
        n.first = InputRef::neuron({r - 1, 1});
        n.second = InputRef::feature(cols[static_cast<std::size_t>(r)] + 1);
        y = eval_neuron_batch(make_design(y, x.col(cols[static_cast<std::size_t>(r)]), n.kind),
                              n.weights);
      }
      graph.push_back(std::move(n));
    }
    const double lo = y.minCoeff();
    const double hi = y.maxCoeff();
    if (!(hi - lo > 1e-6) || !y.allFinite()) continue;
    // Fold the [0,1] squash into the last neuron.
    graph.back().weights /= (hi - lo);
    graph.back().weights[0] -= lo / (hi - lo);

    PolyTask task;
    task.target = (y.array() - lo) / (hi - lo);
    Eigen::VectorXd noisy = task.target;
    for (auto& v : noisy) v += noise * gauss(rng);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return noisy[a] < noisy[b]; });
    task.data.features = x;
    task.data.labels = Eigen::VectorXd::Zero(rows);
    for (std::size_t k = static_cast<std::size_t>(rows) / 2; k < order.size(); ++k)
      task.data.labels[order[k]] = 1.0;
    for (int j = 0; j < m; ++j) task.data.feature_names.push_back(fmt::format("x{}", j + 1));

    InputStage stage;
    stage.input_count = m;
    for (int j = 0; j < m; ++j) stage.features.push_back({j + 1, fmt::format("x{}", j + 1), 0.0, 1.0});
    task.truth = prune(std::move(stage), std::move(graph), {depth, 1});
    return task;
  }
  throw DataError("could not draw a non-degenerate cascade in 100 attempts");
}

NeuronTask generate_neuron_task(int n_train, int n_examine, double noise,
                                std::uint64_t seed, TransferKind kind) {
  if (n_train < 1 || n_examine < 1) throw ConfigError("neuron task needs rows");
  // Derived so that a fit seeded with the same value starts elsewhere.
  std::mt19937_64 rng(detail::derive_seed(seed, {0x6e65}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  NeuronTask t;
  t.true_weights.resize(arity(kind));
  for (auto& w : t.true_weights) w = gauss(rng);
  auto block = [&](int n, Eigen::MatrixXd& u, Eigen::VectorXd& y) {
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = unit(rng);
      b[i] = unit(rng);
    }
    u = make_design(a, b, kind);
    y = u.transpose() * t.true_weights;
    if (noise > 0.0)
      for (auto& v : y) v += noise * gauss(rng);
  };
  block(n_train, t.design.u_train, t.design.y_train);
  block(n_examine, t.design.u_examine, t.design.y_examine);
  return t;
}

}  // namespace polygmdh
