#include "polygmdh/gmdh.hpp"

#include "polygmdh/detail/parallel.hpp"
#include "polygmdh/detail/rng.hpp"
#include "polygmdh/error.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <limits>
#include <numeric>

namespace polygmdh {

const char* to_string(FitStop stop) {
  switch (stop) {
    case FitStop::epsilon: return "epsilon";
    case FitStop::delta: return "delta";
    case FitStop::max_steps: return "max_steps";
  }
  return "?";
}

const char* to_string(GrowthStop stop) {
  switch (stop) {
    case GrowthStop::cr_rose: return "cr_rose";
    case GrowthStop::max_layers: return "max_layers";
    case GrowthStop::sources_exhausted: return "sources_exhausted";
  }
  return "?";
}

void GrowthConfig::validate() const {
  if (F < 1) throw ConfigError("F must be at least 1");
  if (mode == GrowthMode::full && F < 2 && max_layers > 1)
    throw ConfigError("full mode needs F >= 2 to form later layers");
  if (max_layers < 1) throw ConfigError("max_layers must be at least 1");
  if (fitter == FitterKind::projection) fit.validate();
}

std::vector<CandidateSpec> generate_candidates(int layer, int feature_count,
                                               int previous_selected,
                                               GrowthMode mode) {
  if (layer < 1) throw ConfigError("layer index must be >= 1");
  std::vector<CandidateSpec> out;
  if (layer == 1) {
    for (auto [i, j] : enumerate_pairs(feature_count))
      out.push_back({InputRef::feature(i + 1), InputRef::feature(j + 1)});
    return out;
  }
  if (mode == GrowthMode::chain) {
    if (previous_selected < 1 || feature_count < 1)
      throw DataError("chain layer needs one previous neuron and features");
    const auto prev = InputRef::neuron({layer - 1, 1});
    for (int i = 0; i < feature_count; ++i)
      out.push_back({prev, InputRef::feature(i + 1)});
    return out;
  }
  if (previous_selected < 2)
    throw DataError("full layer " + std::to_string(layer) +
                    " needs at least 2 selected neurons, got " +
                    std::to_string(previous_selected));
  for (auto [i, j] : enumerate_pairs(previous_selected))
    out.push_back({InputRef::neuron({layer - 1, i + 1}),
                   InputRef::neuron({layer - 1, j + 1})});
  return out;
}

LayerRecord select_best(int layer, std::vector<Candidate> candidates, int F) {
  std::vector<int> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::erase_if(order, [&](int i) {
    return !std::isfinite(candidates[static_cast<std::size_t>(i)].cr);
  });
  if (order.empty())
    throw DataError("layer " + std::to_string(layer) +
                    ": no candidate has a finite criterion");
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return candidates[static_cast<std::size_t>(a)].cr <
           candidates[static_cast<std::size_t>(b)].cr;
  });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(F)));
  LayerRecord rec;
  rec.layer = layer;
  rec.cr_min = candidates[static_cast<std::size_t>(order.front())].cr;
  rec.selected = std::move(order);
  rec.candidates = std::move(candidates);
  return rec;
}

std::string GrowthTrace::log() const {
  std::string out;
  for (const auto& l : layers)
    out += fmt::format("layer {} candidates {} cr_min {:.10g} selected {}{}\n",
                       l.layer, l.candidates.size(), l.cr_min,
                       l.selected.size(),
                       l.layer > final_layer ? " (rejected)" : "");
  out += fmt::format("stop {} at layer {}\n", to_string(stop), final_layer);
  return out;
}

namespace {

struct LayerOutputs {
  Eigen::MatrixXd train;    // n_A x selected
  Eigen::MatrixXd examine;  // n_B x selected
};

Candidate fit_candidate(const CandidateSpec& spec, const Eigen::MatrixXd& x_a,
                        const Eigen::VectorXd& y_a, const Eigen::MatrixXd& x_b,
                        const Eigen::VectorXd& y_b, const LayerOutputs& prev,
                        const GrowthConfig& cfg, std::uint64_t seed) {
  auto column = [&](const InputRef& r, bool train) -> Eigen::VectorXd {
    if (r.is_feature()) return (train ? x_a : x_b).col(r.index - 1);
    return (train ? prev.train : prev.examine).col(r.index - 1);
  };
  Candidate c{spec.first, spec.second, {}, 0.0, false, 0};
  DesignPair<double> d{
      make_design(column(spec.first, true), column(spec.second, true),
                  cfg.transfer),
      y_a,
      make_design(column(spec.first, false), column(spec.second, false),
                  cfg.transfer),
      y_b};
  try {
    if (cfg.fitter == FitterKind::lsm) {
      auto r = lsm_fit(d.u_train, d.y_train);
      c.weights = std::move(r.weights);
      c.rank_deficient = r.rank_deficient;
      c.cr = cfg.criterion == SelectionCriterion::exterior
                 ? compute_cr(c.weights, d.u_examine, d.y_examine)
                 : compute_cr(c.weights, d.u_train, d.y_train);
    } else {
      FitConfig fc = cfg.fit;
      fc.seed = seed;
      auto r = projection_fit(d, fc);
      c.weights = std::move(r.weights);
      c.fit_steps = r.trace.steps;
      c.cr = cfg.criterion == SelectionCriterion::exterior
                 ? r.criterion()
                 : compute_cr(c.weights, d.u_train, d.y_train);
    }
  } catch (const DivergenceError&) {
    c.cr = std::numeric_limits<double>::infinity();
  } catch (const DataError&) {
    c.cr = std::numeric_limits<double>::infinity();
  }
  if (c.weights.size() != arity(cfg.transfer) || !c.weights.allFinite()) {
    c.weights = Eigen::VectorXd::Zero(arity(cfg.transfer));
    c.cr = std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(c.cr)) c.cr = std::numeric_limits<double>::infinity();
  return c;
}

LayerOutputs layer_outputs(const LayerRecord& rec, const Eigen::MatrixXd& x_a,
                           const Eigen::MatrixXd& x_b, const LayerOutputs& prev,
                           TransferKind kind) {
  LayerOutputs out;
  const auto s = static_cast<Eigen::Index>(rec.selected.size());
  out.train.resize(x_a.rows(), s);
  out.examine.resize(x_b.rows(), s);
  for (Eigen::Index k = 0; k < s; ++k) {
    const auto& c = rec.candidates[static_cast<std::size_t>(rec.selected[static_cast<std::size_t>(k)])];
    for (int t = 0; t < 2; ++t) {
      const auto& x = t == 0 ? x_a : x_b;
      const auto& p = t == 0 ? prev.train : prev.examine;
      auto col = [&](const InputRef& r) -> Eigen::VectorXd {
        return r.is_feature() ? Eigen::VectorXd(x.col(r.index - 1))
                              : Eigen::VectorXd(p.col(r.index - 1));
      };
      const auto u = make_design(col(c.first), col(c.second), kind);
      (t == 0 ? out.train : out.examine).col(k) = eval_neuron_batch(u, c.weights);
    }
  }
  return out;
}

}  // namespace

GrowthResult grow(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                  const Eigen::MatrixXd& x_examine,
                  const Eigen::VectorXd& y_examine, const GrowthConfig& cfg,
                  const std::vector<std::string>& feature_names) {
  cfg.validate();
  const auto m = static_cast<int>(x_train.cols());
  if (x_examine.cols() != m)
    throw DataError("training and examining sets have different widths");
  if (x_train.rows() != y_train.size() || x_examine.rows() != y_examine.size())
    throw DataError("feature rows and targets disagree");
  if (x_train.rows() < 2 || x_examine.rows() < 2)
    throw DataError("both training and examining sets need at least 2 rows");
  if (m < 2) throw DataError("need at least 2 features to grow a network");
  if (!feature_names.empty() && static_cast<int>(feature_names.size()) != m)
    throw DataError("feature name count does not match feature columns");
  if (!x_train.allFinite() || !x_examine.allFinite() || !y_train.allFinite() ||
      !y_examine.allFinite())
    throw DataError("non-finite values in growth data");

  const int width = cfg.selection_width();
  const auto l1 = static_cast<double>(m) * (m - 1) / 2.0;
  if (cfg.mode == GrowthMode::full && width >= 0.4 * l1)
    spdlog::warn("F = {} is not below 0.4 * L1 = {:.1f}", width, 0.4 * l1);
  if (x_train.rows() < arity(cfg.transfer))
    spdlog::warn("training set has {} rows, fewer than {} coefficients",
                 x_train.rows(), arity(cfg.transfer));

  GrowthTrace trace;
  trace.stop = GrowthStop::max_layers;
  LayerOutputs prev;
  for (int r = 1; r <= cfg.max_layers; ++r) {
    const int prev_selected =
        r == 1 ? 0 : static_cast<int>(trace.layers.back().selected.size());
    if (r > 1 && cfg.mode == GrowthMode::full && prev_selected < 2) {
      trace.stop = GrowthStop::sources_exhausted;
      break;
    }
    const auto specs = generate_candidates(r, m, prev_selected, cfg.mode);
    std::vector<Candidate> candidates(specs.size());
    detail::parallel_for(specs.size(), cfg.threads, [&](std::size_t i) {
      candidates[i] = fit_candidate(
          specs[i], x_train, y_train, x_examine, y_examine, prev, cfg,
          detail::derive_seed(cfg.seed, {static_cast<std::uint64_t>(r), i}));
    });
    const auto degenerate = std::count_if(
        candidates.begin(), candidates.end(),
        [](const Candidate& c) { return c.rank_deficient; });
    if (degenerate > 0)
      spdlog::debug("layer {}: {} rank-deficient candidate fits", r, degenerate);

    const bool any_finite =
        std::any_of(candidates.begin(), candidates.end(),
                    [](const Candidate& c) { return std::isfinite(c.cr); });
    LayerRecord rec;
    if (any_finite) {
      rec = select_best(r, std::move(candidates), width);
    } else if (r == 1) {
      throw DataError("layer 1 produced no candidate with a finite criterion");
    } else {
      rec.layer = r;
      rec.candidates = std::move(candidates);
      rec.cr_min = std::numeric_limits<double>::infinity();
    }
    spdlog::debug("layer {}: {} candidates, CR_m = {:.6g}", r,
                  rec.candidates.size(), rec.cr_min);

    if (r > 1 && !(rec.cr_min < trace.layers.back().cr_min)) {
      trace.layers.push_back(std::move(rec));
      trace.stop = GrowthStop::cr_rose;
      break;
    }
    trace.layers.push_back(std::move(rec));
    trace.final_layer = r;
    if (r < cfg.max_layers)
      prev = layer_outputs(trace.layers.back(), x_train, x_examine, prev,
                           cfg.transfer);
  }

  InputStage stage;
  stage.input_count = m;
  for (int j = 0; j < m; ++j)
    stage.features.push_back(
        {j + 1,
         feature_names.empty() ? fmt::format("x{}", j + 1)
                               : feature_names[static_cast<std::size_t>(j)],
         0.0, 1.0});

  std::vector<Neuron> graph;
  for (int r = 1; r <= trace.final_layer; ++r) {
    const auto& rec = trace.layers[static_cast<std::size_t>(r - 1)];
    for (std::size_t k = 0; k < rec.selected.size(); ++k) {
      const auto& c = rec.candidates[static_cast<std::size_t>(rec.selected[k])];
      graph.push_back({{r, static_cast<int>(k) + 1}, cfg.transfer, c.first,
                       c.second, c.weights});
    }
  }
  GrowthResult result;
  result.network = prune(std::move(stage), std::move(graph), {trace.final_layer, 1});
  result.trace = std::move(trace);
  return result;
}

GrowthResult grow(const LabeledDataset& train, const LabeledDataset& examine,
                  const GrowthConfig& cfg) {
  return grow(train.features, train.labels, examine.features, examine.labels,
              cfg, train.feature_names);
}

}  // namespace polygmdh
