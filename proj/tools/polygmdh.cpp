// polygmdh: feature extraction, training, prediction and rule printing for
// polynomial GMDH networks.

#include "polygmdh/error.hpp"
#include "polygmdh/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace polygmdh;

constexpr int kUsage = 2;
constexpr int kRuntime = 3;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("POLYGMDH_SEED")) {
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [p, ec] = std::from_chars(env, end, v);
    if (ec != std::errc{} || p != end || p == env)
      throw ConfigError(fmt::format("POLYGMDH_SEED '{}' is not an unsigned integer", env));
    return v;
  }
  return 0;
}

void write_output(const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + *path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("polygmdh");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Polynomial GMDH networks for binary classification"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_flag;
  unsigned threads = 1;
  std::string log_level = "warn";
  app.add_option("--seed", seed_flag, "Random seed (falls back to POLYGMDH_SEED, then 0)");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // features
  FeaturesOptions fopt;
  std::vector<std::string> f_inputs;
  std::string f_manifest, f_taper = "hann";
  std::optional<std::string> f_out;
  auto* features = app.add_subcommand("features", "Band-power features from raw signal CSVs");
  features->add_option("inputs", f_inputs, "Raw signal CSV files");
  features->add_option("--manifest", f_manifest, "CSV of path,label rows");
  features->add_option("--rate", fopt.rate, "Sampling rate in Hz");
  features->add_option("--bands", fopt.bands, "Preset (alzheimer4, risk6) or name:lo-hi,...");
  features->add_option("--window", fopt.window, "Segment length in seconds");
  features->add_option("--hop", fopt.hop, "Segment step in seconds");
  features->add_option("--taper", f_taper, "hann or rectangular")
      ->check(CLI::IsMember({"hann", "rectangular"}));
  features->add_flag("--remove-mean", fopt.spectrum.remove_mean, "Subtract segment mean");
  features->add_option("--out", f_out, "Output CSV (default stdout)");

  // train
  TrainOptions topt;
  std::string t_method = "gmdh", t_fitter = "lsm", t_transfer = "bilinear", t_model;
  std::optional<std::string> t_test, t_trace;
  std::string t_data;
  auto* train = app.add_subcommand("train", "Train a classifier on a feature CSV");
  train->add_option("data", t_data, "Labelled feature CSV")->required();
  train->add_option("--label", topt.label, "Label column name");
  train->add_option("--negative", topt.mapping.negative, "Label token of class 0");
  train->add_option("--positive", topt.mapping.positive, "Label token of class 1");
  train->add_option("--method", t_method, "gmdh, chain or fnn");
  train->add_option("--fitter", t_fitter, "lsm or proj");
  train->add_option("--transfer", t_transfer, "bilinear or linear");
  train->add_option("--F", topt.F, "Neurons kept per layer");
  train->add_option("--max-layers", topt.max_layers, "Layer limit");
  train->add_option("--chi", topt.chi, "Projection learning rate, in (1,2]");
  train->add_option("--delta", topt.delta, "Projection minimal error decrement");
  train->add_option("--epsilon", topt.epsilon, "Projection noise level (replaces --delta)");
  train->add_option("--max-steps", topt.max_steps, "Projection step limit");
  train->add_option("--split", topt.split, "Training share of rows");
  train->add_option("--pca", topt.pca, "Keep principal components up to this variance share");
  train->add_option("--hidden", topt.hidden, "FNN hidden units");
  train->add_option("--restarts", topt.restarts, "FNN random restarts");
  train->add_option("--max-epochs", topt.max_epochs, "FNN epoch limit");
  train->add_option("--patience", topt.patience, "FNN early-stopping patience");
  train->add_option("--test", t_test, "Labelled CSV for the Test row");
  train->add_option("--trace", t_trace, "Write per-layer growth CSV here");
  train->add_option("--out", t_model, "Model file")->required();

  // predict
  PredictOptions popt;
  std::string p_model, p_data;
  std::optional<std::string> p_out;
  auto* predict = app.add_subcommand("predict", "Score rows with a trained model");
  predict->add_option("model", p_model, "Model file")->required();
  predict->add_option("data", p_data, "Feature CSV")->required();
  predict->add_option("--threshold", popt.threshold, "Class 1 when score >= threshold");
  predict->add_option("--out", p_out, "Output CSV (default stdout)");

  // rules
  std::string r_model;
  auto* rules = app.add_subcommand("rules", "Print a model as polynomial rules");
  rules->add_option("model", r_model, "Model file")->required();

  // synth
  SynthOptions sopt;
  std::string s_kind = "eeg", s_noise = "none", s_bands = "alzheimer4", s_out;
  auto* synth = app.add_subcommand("synth", "Write synthetic fixtures");
  synth->add_option("kind", s_kind, "eeg or poly")->check(CLI::IsMember({"eeg", "poly"}));
  synth->add_option("--out", s_out, "Output directory")->required();
  synth->add_option("--channels", sopt.eeg.channels, "eeg: channel count");
  synth->add_option("--rate", sopt.eeg.rate, "eeg: sampling rate");
  synth->add_option("--duration", sopt.eeg.duration, "eeg: seconds per recording");
  synth->add_option("--bands", s_bands, "eeg: band preset or list");
  synth->add_option("--recordings", sopt.eeg.recordings_per_class, "eeg: recordings per class");
  synth->add_option("--noise-kind", s_noise, "eeg: none, gaussian or lognormal");
  synth->add_option("--noise-scale", sopt.eeg.noise_scale, "eeg: noise strength");
  synth->add_option("--overlap", sopt.eeg.overlap, "eeg: class overlap in [0,1]");
  synth->add_option("--window", sopt.window, "eeg: feature segment length");
  synth->add_option("--hop", sopt.hop, "eeg: feature segment step");
  synth->add_option("--depth", sopt.depth, "poly: cascade depth");
  synth->add_option("--m", sopt.m, "poly: feature count");
  synth->add_option("--rows", sopt.rows, "poly: row count");
  synth->add_option("--noise", sopt.noise, "poly: label noise std-dev");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    const auto seed = resolve_seed(seed_flag);

    if (features->parsed()) {
      for (const auto& p : f_inputs) fopt.inputs.emplace_back(p);
      if (!f_manifest.empty()) fopt.manifest = f_manifest;
      fopt.spectrum.taper = f_taper == "hann" ? Taper::hann : Taper::rectangular;
      fopt.threads = threads;
      if (f_out) {
        std::ofstream out(*f_out, std::ios::binary);
        if (!out) throw InputError("cannot write '" + *f_out + "'");
        run_features(fopt, out);
      } else {
        run_features(fopt, std::cout);
      }
    } else if (train->parsed()) {
      topt.data = t_data;
      topt.method = parse_method(t_method);
      topt.fitter = parse_fitter(t_fitter);
      topt.transfer = parse_transfer(t_transfer);
      if (t_test) topt.test = *t_test;
      if (t_trace) topt.trace = *t_trace;
      topt.seed = seed;
      topt.threads = threads;
      const auto outcome = run_train(topt);
      write_output(t_model, outcome.model);
      std::cout << outcome.report;
    } else if (predict->parsed()) {
      popt.model = p_model;
      popt.data = p_data;
      std::ostringstream rows;
      const auto count = run_predict(popt, rows);
      write_output(p_out, rows.str());
      if (count)
        std::cerr << fmt::format("accuracy {:.4f} ({} of {} correct)\n", count->accuracy(),
                                 count->rows - count->errors, count->rows);
    } else if (rules->parsed()) {
      std::cout << run_rules(r_model);
    } else if (synth->parsed()) {
      sopt.kind = s_kind == "poly" ? SynthKind::poly : SynthKind::eeg;
      sopt.out = s_out;
      sopt.eeg.bands = parse_bands(s_bands);
      sopt.eeg.noise = parse_noise(s_noise);
      sopt.seed = seed;
      sopt.threads = threads;
      run_synth(sopt);
    }
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  }
  return 0;
}
