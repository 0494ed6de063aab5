#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace polygmdh {

/// Multichannel signal: one column per channel, one row per sample.
struct Recording {
  Eigen::MatrixXd samples;
  double rate = 0.0;  // Hz
  std::vector<std::string> channel_names;

  Eigen::Index length() const { return samples.rows(); }
  Eigen::Index channels() const { return samples.cols(); }
  double duration() const { return double(samples.rows()) / rate; }
  void validate() const;
};

/// Raw-signal CSV: header of channel names, one row per sample.
Recording read_signal_csv(std::istream& in, double rate);
Recording load_signal_csv(const std::filesystem::path& path, double rate);
void write_signal_csv(std::ostream& out, const Recording& rec);

/// Frequency band. Membership of a periodogram bin is lo <= f < hi, except
/// for the topmost band of a set, which also includes f == hi.
struct Band {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
};

/// Named band sets: "alzheimer4" (delta, theta, alpha, beta) and
/// "risk6" (subdelta, delta, theta, alpha, beta1, beta2).
std::vector<Band> band_preset(std::string_view name);

/// Parses either a preset name or "name:lo-hi,name:lo-hi,...".
std::vector<Band> parse_bands(std::string_view spec);

struct Segment {
  double start = 0.0;  // seconds
  Eigen::Index offset = 0;
  Eigen::Index length = 0;
};

/// Sliding windows of `window` seconds every `hop` seconds.
std::vector<Segment> segment(const Recording& rec, double window, double hop);

enum class Taper { hann, rectangular };

struct SpectrumOptions {
  Taper taper = Taper::hann;
  bool remove_mean = false;
};

/// One-sided periodogram. Power is scaled so that its sum equals
/// sum((w*x)^2) / sum(w^2), i.e. the mean square for a rectangular taper.
struct Periodogram {
  Eigen::VectorXd frequency;
  Eigen::VectorXd power;
};

Periodogram periodogram(const Eigen::Ref<const Eigen::VectorXd>& x,
                        double rate, const SpectrumOptions& opts = {});

/// Power of `x` inside `band`. With `closed_hi` the bin at exactly band.hi is
/// included.
double band_power(const Eigen::Ref<const Eigen::VectorXd>& x, double rate,
                  const Band& band, const SpectrumOptions& opts = {},
                  bool closed_hi = false);

/// Powers for a whole band set from a single periodogram; the band with the
/// largest upper edge is closed at its top.
Eigen::VectorXd band_powers(const Eigen::Ref<const Eigen::VectorXd>& x,
                            double rate, const std::vector<Band>& bands,
                            const SpectrumOptions& opts = {});

/// Band-power rows for every segment of a recording. Columns are band-major:
/// all channels for the first band, then all channels for the next band.
struct FeatureRows {
  std::vector<std::string> names;  // "<channel>_<band>"
  std::vector<double> starts;
  Eigen::MatrixXd values;
};

FeatureRows extract_band_features(const Recording& rec,
                                  const std::vector<Band>& bands,
                                  double window, double hop,
                                  const SpectrumOptions& opts = {},
                                  unsigned threads = 1);

struct PCAModel {
  Eigen::VectorXd mean;        // m
  Eigen::MatrixXd components;  // m x q, orthonormal columns
  Eigen::VectorXd eigenvalues; // q, sample covariance eigenvalues
  Eigen::VectorXd explained;   // q, fraction of total variance

  Eigen::Index inputs() const { return components.rows(); }
  Eigen::Index outputs() const { return components.cols(); }
};

/// Keeps the fewest leading components whose cumulative explained variance
/// reaches `variance_threshold`.
PCAModel pca_fit(const Eigen::MatrixXd& x, double variance_threshold);
Eigen::MatrixXd pca_transform(const PCAModel& model, const Eigen::MatrixXd& x);

}  // namespace polygmdh
