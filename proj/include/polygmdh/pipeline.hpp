#pragma once

// Subcommand bodies of the command-line tool, callable without a process.

#include "polygmdh/gmdh.hpp"
#include "polygmdh/signal.hpp"
#include "polygmdh/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace polygmdh {

struct FeaturesOptions {
  std::vector<std::filesystem::path> inputs;
  /// CSV with columns `path,label`; relative paths resolve against the
  /// manifest's directory. Adds a `label` column to the output.
  std::optional<std::filesystem::path> manifest;
  std::optional<double> rate;
  std::string bands = "alzheimer4";
  double window = 0.5;
  double hop = 0.25;
  SpectrumOptions spectrum;
  unsigned threads = 1;
};

/// Writes one row per (recording, segment), columns `<channel>_<band>`.
void run_features(const FeaturesOptions& opts, std::ostream& out);

enum class TrainMethod { gmdh, chain, fnn };
TrainMethod parse_method(const std::string& token);
FitterKind parse_fitter(const std::string& token);

struct TrainOptions {
  std::filesystem::path data;
  std::string label = "label";
  LabelMapping mapping;
  TrainMethod method = TrainMethod::gmdh;
  FitterKind fitter = FitterKind::lsm;
  TransferKind transfer = TransferKind::bilinear;
  int F = 40;
  int max_layers = 10;
  double chi = 1.9;
  double delta = 0.0015;
  std::optional<double> epsilon;
  int max_steps = 100;
  double split = 0.5;
  std::optional<double> pca;
  std::optional<std::filesystem::path> test;
  std::optional<std::filesystem::path> trace;  // per-layer growth CSV
  int hidden = 2;
  int restarts = 100;
  int max_epochs = 500;
  int patience = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct ErrorCount {
  std::size_t errors = 0;
  std::size_t rows = 0;
  double accuracy() const { return rows ? 1.0 - double(errors) / double(rows) : 0.0; }
};

struct TrainOutcome {
  std::string model;  // serialized model document
  std::string report;
  ErrorCount train;   // over every row of the training file
  std::optional<ErrorCount> test;
  std::optional<int> pca_components;
  int depth = 0;      // 0 for the FNN baseline
};

TrainOutcome run_train(const TrainOptions& opts);

struct PredictOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  double threshold = 0.5;
};

/// Writes `row,score,class` lines; returns the error count when the data
/// carries the model's label column.
std::optional<ErrorCount> run_predict(const PredictOptions& opts, std::ostream& out);

/// Rule text followed by the feature report.
std::string run_rules(const std::filesystem::path& model);

enum class SynthKind { eeg, poly };

struct SynthOptions {
  SynthKind kind = SynthKind::eeg;
  std::filesystem::path out;
  SynthSpec eeg;
  double window = 0.5;
  double hop = 0.25;
  int depth = 2;
  int m = 5;
  int rows = 200;
  double noise = 0.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// eeg: rec_NNN.csv per recording, manifest.csv and features.csv.
/// poly: poly.csv and the generating network as truth.model.
void run_synth(const SynthOptions& opts);

}  // namespace polygmdh
