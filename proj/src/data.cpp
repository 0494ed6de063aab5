#include "polygmdh/data.hpp"

#include "polygmdh/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace polygmdh {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view token, double& value) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  return ec == std::errc() && ptr == token.data() + token.size();
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

RawTable read_table(std::istream& in) {
  RawTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (trim(view).empty()) continue;
    auto fields = split_fields(view);
    if (!have_header) {
      for (auto f : fields) t.header.emplace_back(f);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(t.header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    t.rows.emplace_back(fields.begin(), fields.end());
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw ParseError("empty CSV: no header row", 0);
  return t;
}

std::size_t resolve_column(const RawTable& t, const LabelColumn& col) {
  if (const auto* idx = std::get_if<std::size_t>(&col)) {
    if (*idx >= t.header.size())
      throw ParseError("label column index " + std::to_string(*idx) +
                           " out of range",
                       1);
    return *idx;
  }
  const auto& name = std::get<std::string>(col);
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end())
    throw ParseError("label column '" + name + "' not found in header", 1);
  return static_cast<std::size_t>(it - t.header.begin());
}

double parse_value(const std::string& token, std::size_t line,
                   std::size_t column, const std::string& name) {
  double v = 0.0;
  if (!parse_double(token, v))
    throw ValueError("line " + std::to_string(line) + ", column '" + name +
                         "': non-numeric value '" + token + "'",
                     line, column);
  if (!std::isfinite(v))
    throw ValueError("line " + std::to_string(line) + ", column '" + name +
                         "': non-finite value '" + token + "'",
                     line, column);
  return v;
}

}  // namespace

void LabeledDataset::validate() const {
  if (labels.size() != features.rows())
    throw DataError("label count does not match feature rows");
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols())
    throw DataError("feature name count does not match feature columns");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw DataError("label at row " + std::to_string(i) + " is not 0/1");
  if (!features.allFinite()) throw DataError("non-finite feature value");
}

LabeledDataset LabeledDataset::subset(
    std::span<const Eigen::Index> row_indices) const {
  LabeledDataset out;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Eigen::Index>(row_indices.size()), cols());
  out.labels.resize(static_cast<Eigen::Index>(row_indices.size()));
  for (std::size_t k = 0; k < row_indices.size(); ++k) {
    const auto r = row_indices[k];
    out.features.row(static_cast<Eigen::Index>(k)) = features.row(r);
    out.labels[static_cast<Eigen::Index>(k)] = labels[r];
  }
  return out;
}

std::size_t LabeledDataset::count_positive() const {
  return static_cast<std::size_t>((labels.array() == 1.0).count());
}

LabeledDataset read_csv(std::istream& in, const LabelColumn& label_column,
                        const LabelMapping& mapping) {
  const auto table = read_table(in);
  const auto label_idx = resolve_column(table, label_column);

  LabeledDataset d;
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (c != label_idx) d.feature_names.push_back(table.header[c]);

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  const auto m = static_cast<Eigen::Index>(d.feature_names.size());
  d.features.resize(n, m);
  d.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const auto line = table.line_numbers[static_cast<std::size_t>(i)];
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == label_idx) {
        if (row[c] == mapping.positive) {
          d.labels[i] = 1.0;
        } else if (row[c] == mapping.negative) {
          d.labels[i] = 0.0;
        } else {
          throw LabelError("line " + std::to_string(line) + ": label '" +
                               row[c] + "' is neither '" + mapping.negative +
                               "' nor '" + mapping.positive + "'",
                           line);
        }
        continue;
      }
      d.features(i, j++) = parse_value(row[c], line, c, table.header[c]);
    }
  }
  return d;
}

LabeledDataset load_csv(const std::filesystem::path& path,
                        const LabelColumn& label_column,
                        const LabelMapping& mapping) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_csv(in, label_column, mapping);
}

FeatureTable read_feature_csv(std::istream& in) {
  const auto table = read_table(in);
  FeatureTable out;
  out.names = table.header;
  out.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                    static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t c = 0; c < table.header.size(); ++c)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          parse_value(table.rows[i][c], table.line_numbers[i], c,
                      table.header[c]);
  return out;
}

FeatureTable load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_feature_csv(in);
}

void write_csv(std::ostream& out, const LabeledDataset& d,
               const std::string& label_name, const LabelMapping& mapping) {
  for (const auto& name : d.feature_names) out << name << ',';
  out << label_name << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d.features(i, j));
      out.write(buf, ptr - buf);
      out << ',';
    }
    out << (d.labels[i] == 1.0 ? mapping.positive : mapping.negative) << '\n';
  }
}

Normalizer::Normalizer(Eigen::VectorXd min, Eigen::VectorXd max)
    : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size())
    throw DataError("normalizer min/max length mismatch");
  for (Eigen::Index j = 0; j < min_.size(); ++j)
    if (max_[j] > min_[j]) retained_.push_back(j);
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 1) throw DataError("cannot fit normalizer on zero rows");
  Normalizer n(x.colwise().minCoeff().transpose(),
               x.colwise().maxCoeff().transpose());
  if (n.retained_.empty())
    throw DataError("all feature columns are constant; no usable features");
  return n;
}

Eigen::MatrixXd Normalizer::transform(const Eigen::MatrixXd& x) const {
  if (x.cols() != min_.size())
    throw DataError("normalizer expects " + std::to_string(min_.size()) +
                    " columns, got " + std::to_string(x.cols()));
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(retained_.size()));
  for (std::size_t k = 0; k < retained_.size(); ++k) {
    const auto j = retained_[k];
    out.col(static_cast<Eigen::Index>(k)) =
        (x.col(j).array() - min_[j]) / (max_[j] - min_[j]);
  }
  return out;
}

Eigen::MatrixXd Normalizer::inverse_transform(
    const Eigen::MatrixXd& scaled) const {
  if (scaled.cols() != static_cast<Eigen::Index>(retained_.size()))
    throw DataError("inverse_transform column count mismatch");
  Eigen::MatrixXd out(scaled.rows(), scaled.cols());
  for (std::size_t k = 0; k < retained_.size(); ++k) {
    const auto j = retained_[k];
    const auto c = static_cast<Eigen::Index>(k);
    out.col(c) = scaled.col(c).array() * (max_[j] - min_[j]) + min_[j];
  }
  return out;
}

Normalizer fit_normalizer(const LabeledDataset& d) {
  auto n = Normalizer::fit(d.features);
  if (static_cast<Eigen::Index>(n.retained().size()) != d.cols()) {
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (!(n.max()[j] > n.min()[j]))
        spdlog::warn("dropping constant feature '{}'",
                     j < static_cast<Eigen::Index>(d.feature_names.size())
                         ? d.feature_names[static_cast<std::size_t>(j)]
                         : std::to_string(j));
  }
  return n;
}

LabeledDataset apply(const Normalizer& norm, const LabeledDataset& d) {
  LabeledDataset out;
  out.features = norm.transform(d.features);
  out.labels = d.labels;
  for (auto j : norm.retained())
    out.feature_names.push_back(d.feature_names[static_cast<std::size_t>(j)]);
  return out;
}

DatasetSplit split(const LabeledDataset& d, double fraction_train,
                   std::uint64_t seed, bool stratified) {
  if (!(fraction_train > 0.0 && fraction_train < 1.0))
    throw ConfigError("split fraction must lie in (0,1)");
  const auto n = static_cast<std::size_t>(d.rows());
  const auto n_train =
      static_cast<std::size_t>(std::llround(fraction_train * double(n)));
  if (n_train < 2 || n - n_train < 2)
    throw DataError("split of " + std::to_string(n) + " rows at fraction " +
                    std::to_string(fraction_train) +
                    " leaves fewer than 2 rows in a subset");

  std::mt19937_64 rng(seed);
  DatasetSplit s;
  if (!stratified) {
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    s.train.assign(idx.begin(), idx.begin() + static_cast<long>(n_train));
    s.examine.assign(idx.begin() + static_cast<long>(n_train), idx.end());
  } else {
    std::vector<Eigen::Index> pos, neg;
    for (std::size_t i = 0; i < n; ++i)
      (d.labels[static_cast<Eigen::Index>(i)] == 1.0 ? pos : neg)
          .push_back(static_cast<Eigen::Index>(i));
    if (pos.empty() || neg.empty())
      throw DataError("stratified split needs both classes present");
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    auto pos_train = static_cast<std::size_t>(
        std::llround(fraction_train * double(pos.size())));
    pos_train = std::min(pos_train, n_train);
    auto neg_train = n_train - pos_train;
    if (neg_train > neg.size()) {
      pos_train += neg_train - neg.size();
      neg_train = neg.size();
    }
    s.train.assign(pos.begin(), pos.begin() + static_cast<long>(pos_train));
    s.train.insert(s.train.end(), neg.begin(),
                   neg.begin() + static_cast<long>(neg_train));
    s.examine.assign(pos.begin() + static_cast<long>(pos_train), pos.end());
    s.examine.insert(s.examine.end(),
                     neg.begin() + static_cast<long>(neg_train), neg.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.examine.begin(), s.examine.end());
  return s;
}

}  // namespace polygmdh
