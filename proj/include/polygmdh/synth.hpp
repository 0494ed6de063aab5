#pragma once

#include "polygmdh/data.hpp"
#include "polygmdh/fit.hpp"
#include "polygmdh/model.hpp"
#include "polygmdh/signal.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace polygmdh {

enum class NoiseKind { none, gaussian, lognormal };
NoiseKind parse_noise(const std::string& token);

/// Two-class EEG-like recordings built from one sinusoid per band and channel.
struct SynthSpec {
  int channels = 19;
  double rate = 128.0;
  double duration = 8.0;  // seconds
  std::vector<Band> bands = band_preset("alzheimer4");
  /// Per-class sinusoid amplitude for each band (class 0, class 1).
  std::array<std::vector<double>, 2> amplitudes;
  /// gaussian: additive white noise with std-dev `noise_scale`.
  /// lognormal: each channel is multiplied by exp(s*Z - s^2/2), s =
  /// noise_scale, redrawn every `noise_block` seconds.
  NoiseKind noise = NoiseKind::none;
  double noise_scale = 0.0;
  double noise_block = 0.5;
  /// Each recording mixes in a U(0, overlap) share of the other class's
  /// profile; 0 keeps classes apart, 0.5 lets them touch.
  double overlap = 0.0;
  /// Per-recording channel gain is drawn from U(1 - g, 1 + g).
  double gain_jitter = 0.2;
  int recordings_per_class = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Delta-dominant class 0 and alpha-dominant class 1 for the given bands.
std::array<std::vector<double>, 2> default_profiles(const std::vector<Band>& bands);

struct LabeledRecording {
  Recording recording;
  int label = 0;
};

/// Class-0 recordings first, then class-1; recording i uses a seed derived
/// from (spec.seed, i).
std::vector<LabeledRecording> generate_recordings(const SynthSpec& spec);

/// Band-power rows for every segment of every recording, labelled.
LabeledDataset recordings_to_features(const std::vector<LabeledRecording>& recs,
                                      const std::vector<Band>& bands,
                                      double window, double hop,
                                      const SpectrumOptions& opts = {},
                                      unsigned threads = 1);

struct PolyTask {
  LabeledDataset data;
  Eigen::VectorXd target;  // cascade output squashed to [0,1]
  PolyNetwork truth;       // reproduces `target` from the features
};

/// Random chain-shaped bilinear cascade of `depth` neurons over distinct
/// features drawn from m, inputs U(0,1). Labels are 1 for the upper half of
/// the (noisy) target ranking.
PolyTask generate_poly_task(int depth, int m, int rows, double noise,
                            std::uint64_t seed);

/// Single bilinear neuron with Gaussian true weights and U(0,1) inputs.
/// Targets are exact unless `noise` > 0 (additive Gaussian).
struct NeuronTask {
  DesignPair<double> design;
  Eigen::VectorXd true_weights;
};
NeuronTask generate_neuron_task(int n_train, int n_examine, double noise,
                                std::uint64_t seed,
                                TransferKind kind = TransferKind::bilinear);

}  // namespace polygmdh
