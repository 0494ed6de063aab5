#include "polygmdh/signal.hpp"

#include "polygmdh/data.hpp"
#include "polygmdh/detail/parallel.hpp"
#include "polygmdh/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <ostream>

namespace polygmdh {

void Recording::validate() const {
  if (!(rate > 0.0)) throw ConfigError("sampling rate must be positive");
  if (samples.rows() < 2) throw DataError("recording needs at least 2 samples");
  if (static_cast<Eigen::Index>(channel_names.size()) != samples.cols())
    throw DataError("channel name count does not match channel count");
}

Recording read_signal_csv(std::istream& in, double rate) {
  auto table = read_feature_csv(in);
  Recording rec{std::move(table.values), rate, std::move(table.names)};
  rec.validate();
  return rec;
}

Recording load_signal_csv(const std::filesystem::path& path, double rate) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_signal_csv(in, rate);
}

void write_signal_csv(std::ostream& out, const Recording& rec) {
  for (std::size_t c = 0; c < rec.channel_names.size(); ++c)
    out << (c ? "," : "") << rec.channel_names[c];
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < rec.samples.rows(); ++i) {
    for (Eigen::Index c = 0; c < rec.samples.cols(); ++c) {
      if (c) out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, rec.samples(i, c));
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

std::vector<Band> band_preset(std::string_view name) {
  if (name == "alzheimer4")
    return {{"delta", 0.0, 3.0},
            {"theta", 4.0, 7.0},
            {"alpha", 8.0, 13.0},
            {"beta", 14.0, 20.0}};
  if (name == "risk6")
    return {{"subdelta", 0.0, 1.5}, {"delta", 1.5, 3.5},
            {"theta", 3.5, 7.5},    {"alpha", 7.5, 13.5},
            {"beta1", 13.5, 19.5},  {"beta2", 19.5, 20.0}};
  throw ConfigError("unknown band preset '" + std::string(name) + "'");
}

std::vector<Band> parse_bands(std::string_view spec) {
  if (spec.find(':') == std::string_view::npos) return band_preset(spec);
  std::vector<Band> bands;
  while (!spec.empty()) {
    auto comma = spec.find(',');
    auto item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view{}
                                           : spec.substr(comma + 1);
    auto colon = item.find(':');
    auto dash = item.find('-', colon == std::string_view::npos ? 0 : colon);
    if (colon == std::string_view::npos || dash == std::string_view::npos)
      throw ConfigError("band '" + std::string(item) +
                        "' is not of the form name:lo-hi");
    Band b{std::string(item.substr(0, colon)), 0.0, 0.0};
    auto lo = item.substr(colon + 1, dash - colon - 1);
    auto hi = item.substr(dash + 1);
    auto r1 = std::from_chars(lo.data(), lo.data() + lo.size(), b.lo);
    auto r2 = std::from_chars(hi.data(), hi.data() + hi.size(), b.hi);
    if (r1.ec != std::errc() || r2.ec != std::errc() || b.name.empty() ||
        r1.ptr != lo.data() + lo.size() || r2.ptr != hi.data() + hi.size())
      throw ConfigError("band '" + std::string(item) + "' is malformed");
    if (!(b.lo >= 0.0 && b.lo < b.hi))
      throw ConfigError("band '" + std::string(item) + "' needs 0 <= lo < hi");
    bands.push_back(std::move(b));
  }
  return bands;
}

std::vector<Segment> segment(const Recording& rec, double window, double hop) {
  rec.validate();
  if (!(hop > 0.0)) throw ConfigError("hop must be positive");
  if (!(window > 0.0)) throw ConfigError("window must be positive");
  const auto ws = static_cast<Eigen::Index>(std::llround(window * rec.rate));
  const auto hs = static_cast<Eigen::Index>(std::llround(hop * rec.rate));
  if (ws < 1 || hs < 1)
    throw ConfigError("window and hop must span at least one sample");
  if (ws > rec.length())
    throw ConfigError("window of " + std::to_string(window) +
                      " s is longer than the recording");
  const auto count = (rec.length() - ws) / hs + 1;
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index k = 0; k < count; ++k)
    out.push_back({double(k * hs) / rec.rate, k * hs, ws});
  return out;
}

Periodogram periodogram(const Eigen::Ref<const Eigen::VectorXd>& x,
                        double rate, const SpectrumOptions& opts) {
  const auto n = x.size();
  if (n < 2) throw DataError("segment needs at least 2 samples");
  if (!(rate > 0.0)) throw ConfigError("sampling rate must be positive");

  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (opts.taper == Taper::hann)
    for (Eigen::Index i = 0; i < n; ++i)
      w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(n)));

  Eigen::VectorXd centered = x;
  if (opts.remove_mean) centered.array() -= x.mean();
  Eigen::VectorXd tapered = centered.cwiseProduct(w);

  Eigen::FFT<double> fft;
  Eigen::VectorXcd spectrum;
  fft.fwd(spectrum, tapered);

  const double scale = double(n) * w.squaredNorm();
  const auto bins = n / 2 + 1;
  Periodogram p;
  p.frequency.resize(bins);
  p.power.resize(bins);
  for (Eigen::Index k = 0; k < bins; ++k) {
    p.frequency[k] = double(k) * rate / double(n);
    const bool paired = k != 0 && !(n % 2 == 0 && k == n / 2);
    p.power[k] = (paired ? 2.0 : 1.0) * std::norm(spectrum[k]) / scale;
  }
  return p;
}

namespace {

void check_band(const Band& b, double rate) {
  if (!(b.lo >= 0.0 && b.lo < b.hi))
    throw ConfigError("band '" + b.name + "' needs 0 <= lo < hi");
  if (b.hi > rate / 2.0 * (1.0 + 1e-12))
    throw ConfigError("band '" + b.name + "' upper edge " +
                      std::to_string(b.hi) + " Hz exceeds Nyquist " +
                      std::to_string(rate / 2.0) + " Hz");
}

double sum_band(const Periodogram& p, const Band& b, bool closed_hi) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < p.frequency.size(); ++k) {
    const double f = p.frequency[k];
    if (f >= b.lo && (f < b.hi || (closed_hi && f == b.hi))) s += p.power[k];
  }
  return s;
}

}  // namespace

double band_power(const Eigen::Ref<const Eigen::VectorXd>& x, double rate,
                  const Band& band, const SpectrumOptions& opts,
                  bool closed_hi) {
  check_band(band, rate);
  return sum_band(periodogram(x, rate, opts), band, closed_hi);
}

Eigen::VectorXd band_powers(const Eigen::Ref<const Eigen::VectorXd>& x,
                            double rate, const std::vector<Band>& bands,
                            const SpectrumOptions& opts) {
  double top = 0.0;
  for (const auto& b : bands) {
    check_band(b, rate);
    top = std::max(top, b.hi);
  }
  const auto p = periodogram(x, rate, opts);
  Eigen::VectorXd out(static_cast<Eigen::Index>(bands.size()));
  for (std::size_t i = 0; i < bands.size(); ++i)
    out[static_cast<Eigen::Index>(i)] =
        sum_band(p, bands[i], bands[i].hi == top);
  return out;
}

FeatureRows extract_band_features(const Recording& rec,
                                  const std::vector<Band>& bands,
                                  double window, double hop,
                                  const SpectrumOptions& opts,
                                  unsigned threads) {
  if (bands.empty()) throw ConfigError("no bands given");
  for (const auto& b : bands) check_band(b, rec.rate);
  const auto segs = segment(rec, window, hop);
  const auto channels = rec.channels();
  const auto nb = static_cast<Eigen::Index>(bands.size());

  FeatureRows out;
  for (const auto& b : bands)
    for (const auto& ch : rec.channel_names) out.names.push_back(ch + "_" + b.name);
  out.values.resize(static_cast<Eigen::Index>(segs.size()), channels * nb);
  for (const auto& s : segs) out.starts.push_back(s.start);

  detail::parallel_for(segs.size(), threads, [&](std::size_t i) {
    const auto& s = segs[i];
    for (Eigen::Index c = 0; c < channels; ++c) {
      Eigen::VectorXd x = rec.samples.col(c).segment(s.offset, s.length);
      const auto powers = band_powers(x, rec.rate, bands, opts);
      for (Eigen::Index b = 0; b < nb; ++b)
        out.values(static_cast<Eigen::Index>(i), b * channels + c) = powers[b];
    }
  });
  return out;
}

PCAModel pca_fit(const Eigen::MatrixXd& x, double variance_threshold) {
  if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
    throw ConfigError("PCA variance threshold must lie in (0,1]");
  if (x.rows() < 2) throw DataError("PCA needs at least 2 rows");

  PCAModel model;
  model.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / double(x.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw DataError("PCA eigen-decomposition failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values =
      solver.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  const double total = values.sum();
  if (!(total > 0.0)) throw DataError("PCA input has zero total variance");

  Eigen::Index q = 0;
  double cumulative = 0.0;
  while (q < values.size()) {
    cumulative += values[q] / total;
    ++q;
    if (cumulative >= variance_threshold - 1e-10) break;
  }

  model.components = vectors.leftCols(q);
  model.eigenvalues = values.head(q);
  model.explained = values.head(q) / total;
  // Fix the sign so the largest-magnitude loading of each column is positive.
  for (Eigen::Index j = 0; j < q; ++j) {
    Eigen::Index imax = 0;
    model.components.col(j).cwiseAbs().maxCoeff(&imax);
    if (model.components(imax, j) < 0.0) model.components.col(j) *= -1.0;
  }
  return model;
}

Eigen::MatrixXd pca_transform(const PCAModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.inputs())
    throw DataError("PCA expects " + std::to_string(model.inputs()) +
                    " columns, got " + std::to_string(x.cols()));
  return (x.rowwise() - model.mean.transpose()) * model.components;
}

}  // namespace polygmdh
