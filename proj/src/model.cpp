#include "polygmdh/model.hpp"

#include "model_io.hpp"
#include "polygmdh/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

namespace polygmdh {

namespace {

std::string ref_token(const InputRef& r) {
  return r.is_feature() ? fmt::format("x{}", r.index)
                        : fmt::format("y{}.{}", r.layer, r.index);
}

InputRef parse_ref(const io::Reader& in, const io::Line& line,
                   std::size_t token) {
  const std::string& s = line.tokens[token];
  auto number = [&](std::string_view part) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || v < 1)
      in.fail(line, "malformed reference '" + s + "'");
    return v;
  };
  std::string_view v = s;
  if (v.size() > 1 && v.front() == 'x') return InputRef::feature(number(v.substr(1)));
  if (v.size() > 1 && v.front() == 'y') {
    auto dot = v.find('.');
    if (dot == std::string_view::npos)
      in.fail(line, "malformed reference '" + s + "'");
    return InputRef::neuron(
        {number(v.substr(1, dot - 1)), number(v.substr(dot + 1))});
  }
  in.fail(line, "malformed reference '" + s + "'");
}

bool neuron_less(const Neuron& a, const Neuron& b) { return a.id < b.id; }

/// Whether the first/second input can influence the neuron output.
bool first_live(const Neuron& n) {
  return n.weights[1] != 0.0 ||
         (n.kind == TransferKind::bilinear && n.weights[3] != 0.0);
}
bool second_live(const Neuron& n) {
  return n.weights[2] != 0.0 ||
         (n.kind == TransferKind::bilinear && n.weights[3] != 0.0);
}

}  // namespace

const FeatureInfo* InputStage::find_column(int column) const {
  auto it = std::lower_bound(
      features.begin(), features.end(), column,
      [](const FeatureInfo& f, int c) { return f.column < c; });
  return it != features.end() && it->column == column ? &*it : nullptr;
}

const Neuron* PolyNetwork::find(NeuronId id) const {
  auto it = std::lower_bound(
      neurons.begin(), neurons.end(), id,
      [](const Neuron& n, NeuronId v) { return n.id < v; });
  return it != neurons.end() && it->id == id ? &*it : nullptr;
}

int PolyNetwork::depth() const {
  int d = 0;
  for (const auto& n : neurons) d = std::max(d, n.id.layer);
  return d;
}

std::vector<int> PolyNetwork::referenced_features() const {
  std::set<int> cols;
  for (const auto& n : neurons)
    for (const auto& r : {n.first, n.second})
      if (r.is_feature()) cols.insert(r.index);
  return {cols.begin(), cols.end()};
}

void PolyNetwork::validate() const {
  if (neurons.empty()) throw IntegrityError("network has no neurons");
  if (!std::is_sorted(neurons.begin(), neurons.end(), neuron_less))
    throw IntegrityError("neurons are not in layer-major order");
  for (std::size_t i = 1; i < neurons.size(); ++i)
    if (neurons[i].id == neurons[i - 1].id)
      throw IntegrityError("duplicate neuron " + neuron_name(neurons[i].id));
  if (!find(output))
    throw IntegrityError("output " + neuron_name(output) +
                         " does not name a neuron");

  for (const auto& n : neurons) {
    if (n.id.layer < 1 || n.id.index < 1)
      throw IntegrityError("neuron ids must be 1-based");
    if (n.weights.size() != arity(n.kind))
      throw IntegrityError(neuron_name(n.id) + " has " +
                           std::to_string(n.weights.size()) +
                           " coefficients, expected " +
                           std::to_string(arity(n.kind)));
    if (!n.weights.allFinite())
      throw IntegrityError(neuron_name(n.id) + " has non-finite coefficients");
    if (n.first == n.second)
      throw IntegrityError(neuron_name(n.id) + " uses the same input twice");
    for (const auto& r : {n.first, n.second}) {
      if (r.is_feature()) {
        if (!inputs.find_column(r.index))
          throw IntegrityError(neuron_name(n.id) + " references unknown x" +
                               std::to_string(r.index));
      } else {
        if (r.layer >= n.id.layer)
          throw IntegrityError(neuron_name(n.id) +
                               " references a neuron that is not upstream");
        if (!find(r.neuron_id()))
          throw IntegrityError(neuron_name(n.id) + " references missing " +
                               neuron_name(r.neuron_id()));
      }
    }
  }

  std::set<NeuronId> reached{output};
  for (auto it = neurons.rbegin(); it != neurons.rend(); ++it) {
    if (!reached.count(it->id)) continue;
    for (const auto& r : {it->first, it->second})
      if (!r.is_feature()) reached.insert(r.neuron_id());
  }
  if (reached.size() != neurons.size())
    throw IntegrityError("network contains neurons unreachable from output");
}

PolyNetwork prune(InputStage inputs, std::vector<Neuron> graph,
                  NeuronId output) {
  std::sort(graph.begin(), graph.end(), neuron_less);
  std::map<NeuronId, const Neuron*> by_id;
  for (const auto& n : graph) by_id[n.id] = &n;
  if (!by_id.count(output))
    throw IntegrityError("output " + neuron_name(output) + " is not in graph");

  std::set<NeuronId> keep;
  std::set<int> features;
  std::vector<NeuronId> stack{output};
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    if (!keep.insert(id).second) continue;
    const Neuron& n = *by_id.at(id);
    for (const auto& r : {n.first, n.second}) {
      if (r.is_feature()) {
        features.insert(r.index);
      } else if (!by_id.count(r.neuron_id())) {
        throw IntegrityError(neuron_name(id) + " references missing " +
                             neuron_name(r.neuron_id()));
      } else {
        stack.push_back(r.neuron_id());
      }
    }
  }

  PolyNetwork net;
  net.output = output;
  for (const auto& n : graph)
    if (keep.count(n.id)) net.neurons.push_back(n);
  std::vector<FeatureInfo> kept;
  for (const auto& f : inputs.features)
    if (features.count(f.column)) kept.push_back(f);
  std::sort(kept.begin(), kept.end(),
            [](const auto& a, const auto& b) { return a.column < b.column; });
  if (kept.size() != features.size())
    throw IntegrityError("network references a feature missing from inputs");
  inputs.features = std::move(kept);
  net.inputs = std::move(inputs);
  net.validate();
  return net;
}

std::vector<FeatureUse> feature_report(const PolyNetwork& net) {
  std::map<int, int> refs;
  std::set<NeuronId> visited;
  std::vector<NeuronId> stack{net.output};
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    if (!visited.insert(id).second) continue;
    const Neuron* n = net.find(id);
    if (!n) throw IntegrityError("missing neuron " + neuron_name(id));
    const bool live[2] = {first_live(*n), second_live(*n)};
    const InputRef ins[2] = {n->first, n->second};
    for (int k = 0; k < 2; ++k) {
      if (!live[k]) continue;
      if (ins[k].is_feature())
        ++refs[ins[k].index];
      else
        stack.push_back(ins[k].neuron_id());
    }
  }
  std::vector<FeatureUse> out;
  for (const auto& [column, count] : refs) {
    const auto* f = net.inputs.find_column(column);
    out.push_back({column, f ? f->name : fmt::format("x{}", column), count});
  }
  return out;
}

std::vector<std::string> required_inputs(const PolyNetwork& net) {
  std::vector<std::string> names;
  if (net.inputs.projection) {
    for (const auto& f : net.inputs.projection->raw) names.push_back(f.name);
  } else {
    for (const auto& u : feature_report(net)) names.push_back(u.name);
  }
  return names;
}

InputBinding::InputBinding(const InputStage& stage,
                           const std::vector<std::string>& header,
                           const std::vector<int>& needed_columns)
    : stage_(&stage) {
  auto locate = [&](const std::string& name) -> std::ptrdiff_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw MissingFeatureError(name);
    return it - header.begin();
  };
  needed_.assign(stage.features.size(), false);
  for (std::size_t i = 0; i < stage.features.size(); ++i)
    needed_[i] = std::binary_search(needed_columns.begin(), needed_columns.end(),
                                    stage.features[i].column);
  if (stage.projection) {
    for (const auto& f : stage.projection->raw)
      raw_position_.push_back(locate(f.name));
  } else {
    for (std::size_t i = 0; i < stage.features.size(); ++i)
      raw_position_.push_back(needed_[i] ? locate(stage.features[i].name) : -1);
  }
}

Eigen::VectorXd InputBinding::features(std::span<const double> row) const {
  for (auto p : raw_position_)
    if (p >= static_cast<std::ptrdiff_t>(row.size()))
      throw DataError("input row has " + std::to_string(row.size()) +
                      " values; binding needs column " + std::to_string(p + 1));
  const auto& fs = stage_->features;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fs.size()));
  if (stage_->projection) {
    const auto& p = *stage_->projection;
    Eigen::RowVectorXd raw(static_cast<Eigen::Index>(p.raw.size()));
    for (std::size_t i = 0; i < p.raw.size(); ++i)
      raw[static_cast<Eigen::Index>(i)] =
          p.raw[i].scale(row[static_cast<std::size_t>(raw_position_[i])]);
    const Eigen::RowVectorXd z = (raw - p.pca.mean.transpose()) * p.pca.components;
    for (std::size_t i = 0; i < fs.size(); ++i)
      out[static_cast<Eigen::Index>(i)] = fs[i].scale(z[fs[i].column - 1]);
  } else {
    for (std::size_t i = 0; i < fs.size(); ++i)
      if (needed_[i])
        out[static_cast<Eigen::Index>(i)] =
            fs[i].scale(row[static_cast<std::size_t>(raw_position_[i])]);
  }
  return out;
}

InputBinding bind_inputs(const PolyNetwork& net,
                         const std::vector<std::string>& header) {
  std::vector<int> needed;
  for (const auto& u : feature_report(net)) needed.push_back(u.column);
  return InputBinding(net.inputs, header, needed);
}

double evaluate_scaled(const PolyNetwork& net,
                       const Eigen::Ref<const Eigen::VectorXd>& features) {
  const auto& fs = net.inputs.features;
  if (features.size() != static_cast<Eigen::Index>(fs.size()))
    throw DataError("expected " + std::to_string(fs.size()) +
                    " scaled features, got " + std::to_string(features.size()));
  std::vector<double> outputs(net.neurons.size());
  auto value = [&](const InputRef& r) -> double {
    if (r.is_feature()) {
      const auto* f = net.inputs.find_column(r.index);
      return features[f - fs.data()];
    }
    const auto* n = net.find(r.neuron_id());
    return outputs[static_cast<std::size_t>(n - net.neurons.data())];
  };
  for (std::size_t i = 0; i < net.neurons.size(); ++i) {
    const auto& n = net.neurons[i];
    outputs[i] = eval_neuron(
        make_input_vector(value(n.first), value(n.second), n.kind), n.weights);
  }
  return outputs[static_cast<std::size_t>(net.find(net.output) -
                                          net.neurons.data())];
}

double predict(const PolyNetwork& net, const InputBinding& binding,
               std::span<const double> row) {
  return evaluate_scaled(net, binding.features(row));
}

double predict(const PolyNetwork& net, const std::vector<std::string>& header,
               std::span<const double> row) {
  return predict(net, bind_inputs(net, header), row);
}

int classify(const PolyNetwork& net, const std::vector<std::string>& header,
             std::span<const double> row, double threshold) {
  return classify_score(predict(net, header, row), threshold);
}

std::string serialize(const PolyNetwork& net) {
  net.validate();
  std::string out;
  io::write_preamble(out, "pnn", net.inputs);
  for (const auto& n : net.neurons) {
    out += fmt::format("neuron {} {} {} {} {}", n.id.layer, n.id.index,
                       to_string(n.kind), ref_token(n.first),
                       ref_token(n.second));
    for (double w : n.weights) out += ' ' + io::hex(w);
    out += "  #";
    for (double w : n.weights) out += ' ' + io::dec(w);
    out += '\n';
  }
  out += fmt::format("output {} {}\n", net.output.layer, net.output.index);
  out += "end\n";
  return out;
}

PolyNetwork deserialize(std::string_view text) {
  io::Reader in(text);
  PolyNetwork net;
  net.inputs = io::read_preamble(in, "pnn");
  bool have_output = false;
  bool ended = false;
  while (!in.at_end()) {
    const auto& line = in.next();
    const auto& kw = line.tokens.front();
    if (ended) in.fail(line, "content after 'end'");
    if (kw == "neuron") {
      if (line.tokens.size() < 6) in.fail(line, "incomplete neuron line");
      Neuron n;
      n.id = {in.integer(line, 1), in.integer(line, 2)};
      try {
        n.kind = parse_transfer(line.tokens[3]);
      } catch (const ConfigError& e) {
        in.fail(line, e.what());
      }
      n.first = parse_ref(in, line, 4);
      n.second = parse_ref(in, line, 5);
      in.expect_arity(line, 6 + static_cast<std::size_t>(arity(n.kind)));
      n.weights.resize(arity(n.kind));
      for (int k = 0; k < arity(n.kind); ++k)
        n.weights[k] = in.number(line, 6 + static_cast<std::size_t>(k));
      net.neurons.push_back(std::move(n));
    } else if (kw == "output") {
      in.expect_arity(line, 3);
      net.output = {in.integer(line, 1), in.integer(line, 2)};
      have_output = true;
    } else if (kw == "end") {
      in.expect_arity(line, 1);
      ended = true;
    } else {
      in.fail(line, "unknown keyword '" + kw + "'");
    }
  }
  if (!ended) throw ModelFormatError("model document lacks 'end'");
  if (!have_output) throw ModelFormatError("model document lacks 'output'");
  std::sort(net.neurons.begin(), net.neurons.end(), neuron_less);
  net.validate();
  return net;
}

std::string model_kind(std::string_view text) {
  io::Reader in(text);
  if (in.at_end()) throw ModelFormatError("empty model document");
  const auto& magic = in.next();
  if (magic.tokens.front() != io::kMagic)
    throw ModelFormatError("not a model document");
  if (magic.tokens.size() != 2 || magic.tokens[1] != io::kVersion)
    throw VersionError("unsupported model version");
  const auto& kind = in.next();
  if (kind.tokens.front() != "kind" || kind.tokens.size() != 2)
    in.fail(kind, "expected 'kind <name>'");
  return kind.tokens[1];
}

std::string neuron_name(NeuronId id) {
  return fmt::format("y_{}^{{({})}}", id.index, id.layer);
}

std::string render_rules(const PolyNetwork& net) {
  net.validate();
  auto input_name = [&](const InputRef& r) {
    if (!r.is_feature()) return neuron_name(r.neuron_id());
    const auto* f = net.inputs.find_column(r.index);
    return f ? f->name : fmt::format("x{}", r.index);
  };
  std::string out;
  for (const auto& n : net.neurons) {
    const std::string a = input_name(n.first);
    const std::string b = input_name(n.second);
    std::vector<std::pair<double, std::string>> terms{
        {n.weights[0], ""}, {n.weights[1], a}, {n.weights[2], b}};
    if (n.kind == TransferKind::bilinear)
      terms.emplace_back(n.weights[3], a + "·" + b);

    std::string rhs;
    for (const auto& [w, name] : terms) {
      if (w == 0.0) continue;
      const std::string mag = fmt::format("{:.4f}", rhs.empty() ? w : std::abs(w));
      const std::string term = name.empty() ? mag : mag + "·" + name;
      if (rhs.empty())
        rhs = term;
      else
        rhs += (w < 0.0 ? " - " : " + ") + term;
    }
    if (rhs.empty()) rhs = fmt::format("{:.4f}", 0.0);
    out += neuron_name(n.id) + " = " + rhs + '\n';
  }
  return out;
}

}  // namespace polygmdh
