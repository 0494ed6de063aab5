#include "polygmdh/pipeline.hpp"

#include "polygmdh/baseline.hpp"
#include "polygmdh/error.hpp"
#include "polygmdh/model.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace polygmdh {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write to '" + path.string() + "' failed");
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

struct ManifestEntry {
  fs::path path;
  std::string label;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest '" + path.string() + "'");
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw ParseError("manifest needs exactly two columns: path,label", line_no);
    auto first = trim(line.substr(0, comma));
    auto second = trim(line.substr(comma + 1));
    if (header) {
      header = false;
      if (first != "path" || second != "label")
        throw ParseError("manifest header must be 'path,label'", line_no);
      continue;
    }
    fs::path p(first);
    if (p.is_relative()) p = path.parent_path() / p;
    out.push_back({p, second});
  }
  if (out.empty()) throw InputError("manifest '" + path.string() + "' lists no recordings");
  return out;
}

void write_header(std::ostream& out, const std::vector<std::string>& names,
                  bool with_label) {
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  if (with_label) out << ",label";
  out << '\n';
}

void write_rows(std::ostream& out, const Eigen::MatrixXd& values,
                const std::string* label) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      out << (j ? "," : "") << fmt::format("{}", values(i, j));
    if (label) out << ',' << *label;
    out << '\n';
  }
}

std::vector<double> row_of(const Eigen::MatrixXd& x, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) r[static_cast<std::size_t>(j)] = x(i, j);
  return r;
}

template <typename Score>
ErrorCount count_errors(const LabeledDataset& d, Score&& score) {
  ErrorCount c;
  c.rows = static_cast<std::size_t>(d.rows());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const auto row = row_of(d.features, i);
    if (classify_score(score(row)) != static_cast<int>(d.labels[i])) ++c.errors;
  }
  return c;
}

// Scaled design for one of the data splits, plus how its columns map back to
// the model's feature space.
struct Prepared {
  Eigen::MatrixXd train;
  Eigen::MatrixXd examine;
  InputStage stage;  // every usable feature, column = model feature column
  std::vector<int> columns;  // design column j -> model feature column
  std::optional<int> components;
  double explained = 0.0;
};

Prepared prepare(const LabeledDataset& a, const LabeledDataset& b,
                 const TrainOptions& opts) {
  Prepared p;
  const auto norm = fit_normalizer(a);
  Eigen::MatrixXd xa = norm.transform(a.features);
  Eigen::MatrixXd xb = norm.transform(b.features);
  std::vector<FeatureInfo> raw;
  for (auto j : norm.retained())
    raw.push_back({static_cast<int>(j) + 1, a.feature_names[static_cast<std::size_t>(j)],
                   norm.min()[j], norm.max()[j]});

  if (!opts.pca) {
    p.stage.input_count = static_cast<int>(a.cols());
    p.stage.features = raw;
    for (const auto& f : raw) p.columns.push_back(f.column);
    p.train = std::move(xa);
    p.examine = std::move(xb);
    return p;
  }

  auto pca = pca_fit(xa, *opts.pca);
  const Eigen::MatrixXd za = pca_transform(pca, xa);
  const Eigen::MatrixXd zb = pca_transform(pca, xb);
  p.components = static_cast<int>(pca.outputs());
  p.explained = pca.explained.sum();
  const auto pc_norm = Normalizer::fit(za);
  p.stage.input_count = static_cast<int>(pca.outputs());
  for (auto j : pc_norm.retained()) {
    const int col = static_cast<int>(j) + 1;
    p.stage.features.push_back({col, fmt::format("pc{}", col), pc_norm.min()[j],
                                pc_norm.max()[j]});
    p.columns.push_back(col);
  }
  p.stage.projection = InputProjection{std::move(raw), std::move(pca)};
  p.train = pc_norm.transform(za);
  p.examine = pc_norm.transform(zb);
  return p;
}

// Moves a network grown on design columns into the model feature space.
PolyNetwork remap(const PolyNetwork& grown, const Prepared& p) {
  auto fix = [&](InputRef r) {
    if (r.is_feature())
      r = InputRef::feature(p.columns[static_cast<std::size_t>(r.index - 1)]);
    return r;
  };
  std::vector<Neuron> graph = grown.neurons;
  for (auto& n : graph) {
    n.first = fix(n.first);
    n.second = fix(n.second);
  }
  return prune(p.stage, std::move(graph), grown.output);
}

void write_trace(const fs::path& path, const GrowthTrace& trace) {
  std::ostringstream out;
  out << "layer,candidates,selected,cr_min,kept\n";
  for (const auto& l : trace.layers)
    out << l.layer << ',' << l.candidates.size() << ',' << l.selected.size() << ','
        << fmt::format("{}", l.cr_min) << ',' << (l.layer <= trace.final_layer ? 1 : 0)
        << '\n';
  write_file(path, out.str());
}

std::string method_label(const TrainOptions& o) {
  switch (o.method) {
    case TrainMethod::fnn: return "FNN";
    case TrainMethod::chain:
      return o.fitter == FitterKind::projection ? "GMDH-chain PNN" : "GMDH-chain LSM";
    case TrainMethod::gmdh: break;
  }
  return o.fitter == FitterKind::projection ? "GMDH PNN" : "GMDH LSM";
}

std::string error_cell(const ErrorCount& c) {
  return fmt::format("{} of {} ({:.1f}%)", c.errors, c.rows, 100.0 * (1.0 - c.accuracy()));
}

}  // namespace

void run_features(const FeaturesOptions& opts, std::ostream& out) {
  if (!opts.rate) throw ConfigError("--rate is required");
  if (!(*opts.rate > 0.0)) throw ConfigError("--rate must be positive");
  if (!(opts.hop > 0.0)) throw ConfigError("--hop must be positive");
  if (!(opts.window > 0.0)) throw ConfigError("--window must be positive");
  const auto bands = parse_bands(opts.bands);

  std::vector<ManifestEntry> entries;
  if (opts.manifest) entries = read_manifest(*opts.manifest);
  for (const auto& p : opts.inputs) entries.push_back({p, {}});
  if (entries.empty()) throw ConfigError("no input recordings");
  const bool labelled = opts.manifest.has_value();
  if (labelled && !opts.inputs.empty())
    throw ConfigError("use either a manifest or input files, not both");

  std::vector<std::string> names;
  for (const auto& e : entries) {
    const auto rec = load_signal_csv(e.path, *opts.rate);
    auto rows = extract_band_features(rec, bands, opts.window, opts.hop, opts.spectrum,
                                      opts.threads);
    if (names.empty()) {
      names = rows.names;
      write_header(out, names, labelled);
    } else if (rows.names != names) {
      throw DataError("'" + e.path.string() + "' has a different channel layout");
    }
    spdlog::debug("{}: {} segments", e.path.string(), rows.values.rows());
    write_rows(out, rows.values, labelled ? &e.label : nullptr);
  }
}

TrainMethod parse_method(const std::string& token) {
  if (token == "gmdh") return TrainMethod::gmdh;
  if (token == "chain") return TrainMethod::chain;
  if (token == "fnn") return TrainMethod::fnn;
  throw ConfigError("unknown method '" + token + "' (gmdh, chain, fnn)");
}

FitterKind parse_fitter(const std::string& token) {
  if (token == "lsm") return FitterKind::lsm;
  if (token == "proj") return FitterKind::projection;
  throw ConfigError("unknown fitter '" + token + "' (lsm, proj)");
}

void TrainOptions::validate() const {
  if (!(split > 0.0 && split < 1.0)) throw ConfigError("--split must lie in (0,1)");
  if (pca && !(*pca > 0.0 && *pca <= 1.0)) throw ConfigError("--pca must lie in (0,1]");
  if (method == TrainMethod::fnn) {
    FnnTrainConfig cfg;
    cfg.hidden = hidden;
    cfg.restarts = restarts;
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    cfg.validate();
  } else {
    GrowthConfig cfg;
    cfg.F = F;
    cfg.max_layers = max_layers;
    cfg.fitter = fitter;
    cfg.fit.chi = chi;
    cfg.fit.delta = delta;
    cfg.fit.epsilon = epsilon;
    cfg.fit.max_steps = max_steps;
    cfg.validate();
  }
}

TrainOutcome run_train(const TrainOptions& opts) {
  opts.validate();
  const auto data = load_csv(opts.data, opts.label, opts.mapping);
  data.validate();
  const auto parts = split(data, opts.split, opts.seed);
  const auto a = data.subset(parts.train);
  const auto b = data.subset(parts.examine);
  auto prep = prepare(a, b, opts);

  std::optional<LabeledDataset> test;
  if (opts.test) {
    test = load_csv(*opts.test, opts.label, opts.mapping);
    test->validate();
  }

  const LabelInfo labels{opts.label, opts.mapping.negative, opts.mapping.positive};
  TrainOutcome result;
  result.pca_components = prep.components;
  std::string extra;

  if (opts.method == TrainMethod::fnn) {
    FnnTrainConfig cfg;
    cfg.hidden = opts.hidden;
    cfg.restarts = opts.restarts;
    cfg.max_epochs = opts.max_epochs;
    cfg.patience = opts.patience;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;
    auto trained = fnn_train(prep.train, a.labels, prep.examine, b.labels, cfg);
    FnnModel model = std::move(trained.model);
    model.inputs = prep.stage;
    model.inputs.labels = labels;
    const auto binding = bind_inputs(model, data.feature_names);
    result.train = count_errors(data, [&](const std::vector<double>& r) {
      return fnn_predict(model, binding, r);
    });
    if (test) {
      const auto tb = bind_inputs(model, test->feature_names);
      result.test = count_errors(*test, [&](const std::vector<double>& r) {
        return fnn_predict(model, tb, r);
      });
    }
    result.model = serialize(model);
    extra = fmt::format("best restart {} of {}\n", trained.best_restart + 1,
                        trained.restarts.size());
  } else {
    GrowthConfig cfg;
    cfg.F = opts.F;
    cfg.max_layers = opts.max_layers;
    cfg.mode = opts.method == TrainMethod::chain ? GrowthMode::chain : GrowthMode::full;
    cfg.fitter = opts.fitter;
    cfg.transfer = opts.transfer;
    cfg.fit.chi = opts.chi;
    cfg.fit.delta = opts.delta;
    cfg.fit.epsilon = opts.epsilon;
    cfg.fit.max_steps = opts.max_steps;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;
    std::vector<std::string> names;
    for (const auto& f : prep.stage.features) names.push_back(f.name);
    auto grown = grow(prep.train, a.labels, prep.examine, b.labels, cfg, names);
    spdlog::info("growth stopped: {}", to_string(grown.trace.stop));
    if (opts.trace) write_trace(*opts.trace, grown.trace);

    PolyNetwork net = remap(grown.network, prep);
    net.inputs.labels = labels;
    net.validate();
    const auto binding = bind_inputs(net, data.feature_names);
    result.train = count_errors(data, [&](const std::vector<double>& r) {
      return predict(net, binding, r);
    });
    if (test) {
      const auto tb = bind_inputs(net, test->feature_names);
      result.test = count_errors(*test, [&](const std::vector<double>& r) {
        return predict(net, tb, r);
      });
    }
    result.depth = net.depth();
    result.model = serialize(net);
    extra = fmt::format("layers {} (stop: {}), neurons {}, features used {}\n",
                        result.depth, to_string(grown.trace.stop), net.neurons.size(),
                        feature_report(net).size());
  }

  std::string report;
  report += fmt::format("method {}\n", method_label(opts));
  report += fmt::format("rows {} (training {}, examining {})\n", data.rows(), a.rows(),
                        b.rows());
  if (prep.components)
    report += fmt::format("PCA components retained: {} (threshold {}, explained {:.4f})\n",
                          *prep.components, *opts.pca, prep.explained);
  report += extra;
  const std::string head = "Dataset";
  report += fmt::format("{:<8}| The number of errors\n", head);
  report += fmt::format("{:<8}| {}\n", "", method_label(opts));
  report += fmt::format("{:<8}| {}\n", "Train", error_cell(result.train));
  report += fmt::format("{:<8}| {}\n", "Test",
                        result.test ? error_cell(*result.test) : std::string("-"));
  result.report = std::move(report);
  return result;
}

std::optional<ErrorCount> run_predict(const PredictOptions& opts, std::ostream& out) {
  const auto text = read_file(opts.model);
  const auto kind = model_kind(text);

  std::optional<PolyNetwork> net;
  std::optional<FnnModel> fnn;
  const InputStage* stage = nullptr;
  if (kind == "fnn") {
    fnn = deserialize_fnn(text);
    stage = &fnn->inputs;
  } else {
    net = deserialize(text);
    stage = &net->inputs;
  }

  // Labels are optional: only present when the header carries the model's
  // label column.
  std::string header_line;
  {
    std::ifstream in(opts.data);
    if (!in) throw InputError("cannot open '" + opts.data.string() + "'");
    std::getline(in, header_line);
  }
  bool labelled = false;
  {
    std::istringstream hs(header_line);
    std::string cell;
    while (std::getline(hs, cell, ','))
      if (trim(cell) == stage->labels.column || trim(cell) == "\xEF\xBB\xBF" + stage->labels.column)
        labelled = true;
  }

  LabeledDataset d;
  if (labelled) {
    d = load_csv(opts.data, stage->labels.column,
                 LabelMapping{stage->labels.negative, stage->labels.positive});
  } else {
    auto t = load_feature_csv(opts.data);
    d.feature_names = std::move(t.names);
    d.features = std::move(t.values);
  }

  std::optional<InputBinding> binding;
  if (fnn)
    binding.emplace(bind_inputs(*fnn, d.feature_names));
  else
    binding.emplace(bind_inputs(*net, d.feature_names));

  ErrorCount count;
  count.rows = static_cast<std::size_t>(d.rows());
  out << "row,score,class\n";
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const auto row = row_of(d.features, i);
    const double s = fnn ? fnn_predict(*fnn, *binding, row) : predict(*net, *binding, row);
    const int cls = classify_score(s, opts.threshold);
    out << (i + 1) << ',' << fmt::format("{:.6f}", s) << ',' << cls << '\n';
    if (labelled && cls != static_cast<int>(d.labels[i])) ++count.errors;
  }
  if (!labelled) return std::nullopt;
  return count;
}

std::string run_rules(const fs::path& model) {
  const auto text = read_file(model);
  if (model_kind(text) != "pnn")
    throw InputError("only polynomial network models have rules");
  const auto net = deserialize(text);
  if (net.neurons.empty()) throw InputError("model has no neurons");
  std::string out = render_rules(net);
  const auto report = feature_report(net);
  out += fmt::format("features used: {}\n", report.size());
  for (const auto& u : report)
    out += fmt::format("  x{} {} ({} neuron{})\n", u.column, u.name, u.references,
                       u.references == 1 ? "" : "s");
  return out;
}

void run_synth(const SynthOptions& opts) {
  if (opts.out.empty()) throw ConfigError("--out is required");
  fs::create_directories(opts.out);
  if (opts.kind == SynthKind::poly) {
    auto task = generate_poly_task(opts.depth, opts.m, opts.rows, opts.noise, opts.seed);
    std::ostringstream csv;
    write_csv(csv, task.data);
    write_file(opts.out / "poly.csv", csv.str());
    write_file(opts.out / "truth.model", serialize(task.truth));
    return;
  }

  SynthSpec spec = opts.eeg;
  spec.seed = opts.seed;
  if (spec.amplitudes[0].empty() && spec.amplitudes[1].empty())
    spec.amplitudes = default_profiles(spec.bands);
  const auto recs = generate_recordings(spec);
  std::ostringstream manifest;
  manifest << "path,label\n";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto name = fmt::format("rec_{:03}.csv", i + 1);
    std::ostringstream rec;
    write_signal_csv(rec, recs[i].recording);
    write_file(opts.out / name, rec.str());
    manifest << name << ',' << recs[i].label << '\n';
  }
  write_file(opts.out / "manifest.csv", manifest.str());

  const auto d = recordings_to_features(recs, spec.bands, opts.window, opts.hop, {},
                                        opts.threads);
  std::ostringstream csv;
  write_csv(csv, d);
  write_file(opts.out / "features.csv", csv.str());
}

}  // namespace polygmdh
