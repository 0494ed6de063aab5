#include "model_io.hpp"

#include "polygmdh/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace polygmdh::io {

std::string hex(double v) { return fmt::format("{:a}", v); }
std::string dec(double v) { return fmt::format("{:.17g}", v); }

void check_name(const std::string& name) {
  if (name.empty() ||
      name.find_first_of(" \t\r\n#") != std::string::npos)
    throw DataError("name '" + name +
                    "' cannot be stored in a model file (empty, whitespace "
                    "or '#')");
}

Reader::Reader(std::string_view text) {
  std::size_t number = 0;
  while (!text.empty()) {
    auto eol = text.find('\n');
    auto raw = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{}
                                         : text.substr(eol + 1);
    ++number;
    if (auto hash = raw.find('#'); hash != std::string_view::npos)
      raw = raw.substr(0, hash);
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i])))
        ++i;
      std::size_t j = i;
      while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j])))
        ++j;
      if (j > i) line.tokens.emplace_back(raw.substr(i, j - i));
      i = j;
    }
    if (!line.tokens.empty()) lines_.push_back(std::move(line));
  }
}

const Line& Reader::peek() const {
  if (at_end()) throw ModelFormatError("model document ends unexpectedly");
  return lines_[pos_];
}

const Line& Reader::next() {
  const Line& l = peek();
  ++pos_;
  return l;
}

void Reader::fail(const Line& line, const std::string& what) const {
  throw ModelFormatError("model line " + std::to_string(line.number) + ": " +
                         what);
}

double Reader::number(const Line& line, std::size_t token) const {
  if (token >= line.tokens.size()) fail(line, "missing number");
  const std::string& s = line.tokens[token];
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    fail(line, "malformed number '" + s + "'");
  return v;
}

int Reader::integer(const Line& line, std::size_t token) const {
  if (token >= line.tokens.size()) fail(line, "missing integer");
  const std::string& s = line.tokens[token];
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(line, "malformed integer '" + s + "'");
  return v;
}

void Reader::expect_arity(const Line& line, std::size_t tokens) const {
  if (line.tokens.size() != tokens)
    fail(line, "'" + line.tokens.front() + "' expects " +
                   std::to_string(tokens - 1) + " fields, got " +
                   std::to_string(line.tokens.size() - 1));
}

namespace {

void write_feature_line(std::string& out, std::string_view keyword,
                        const FeatureInfo& f) {
  check_name(f.name);
  out += fmt::format("{} {} {} {} {}  # min={} max={}\n", keyword, f.column,
                     f.name, hex(f.min), hex(f.max), dec(f.min), dec(f.max));
}

void write_vector_line(std::string& out, std::string_view prefix,
                       const Eigen::VectorXd& v) {
  out += prefix;
  for (double x : v) out += ' ' + hex(x);
  out += '\n';
}

FeatureInfo read_feature_line(const Reader& in, const Line& line) {
  in.expect_arity(line, 5);
  FeatureInfo f;
  f.column = in.integer(line, 1);
  f.name = line.tokens[2];
  f.min = in.number(line, 3);
  f.max = in.number(line, 4);
  if (f.column < 1) in.fail(line, "feature column must be >= 1");
  if (!(f.max > f.min)) in.fail(line, "feature range needs max > min");
  return f;
}

Eigen::VectorXd read_vector(const Reader& in, const Line& line,
                            std::size_t first, Eigen::Index expected) {
  if (static_cast<Eigen::Index>(line.tokens.size() - first) != expected)
    in.fail(line, "expected " + std::to_string(expected) + " values");
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i)
    v[i] = in.number(line, first + static_cast<std::size_t>(i));
  return v;
}

}  // namespace

void write_preamble(std::string& out, std::string_view kind,
                    const InputStage& stage) {
  out += fmt::format("{} {}\n", kMagic, kVersion);
  out += fmt::format("kind {}\n", kind);
  out += fmt::format("inputs {}\n", stage.input_count);
  check_name(stage.labels.column);
  check_name(stage.labels.negative);
  check_name(stage.labels.positive);
  out += fmt::format("labels {} {} {}\n", stage.labels.column,
                     stage.labels.negative, stage.labels.positive);
  if (stage.projection) {
    const auto& p = *stage.projection;
    out += fmt::format("projection {} {}\n", p.raw.size(), p.pca.outputs());
    for (const auto& f : p.raw) write_feature_line(out, "raw", f);
    write_vector_line(out, "mean", p.pca.mean);
    for (Eigen::Index j = 0; j < p.pca.outputs(); ++j)
      write_vector_line(out, fmt::format("component {}", j + 1),
                        p.pca.components.col(j));
    write_vector_line(out, "eigenvalues", p.pca.eigenvalues);
    write_vector_line(out, "explained", p.pca.explained);
  }
  for (const auto& f : stage.features) write_feature_line(out, "feature", f);
}

InputStage read_preamble(Reader& in, std::string_view expected_kind) {
  if (in.at_end()) throw ModelFormatError("empty model document");
  {
    const auto& line = in.next();
    if (line.tokens.front() != kMagic)
      throw ModelFormatError("not a model document (missing '" +
                             std::string(kMagic) + "' header)");
    if (line.tokens.size() != 2 || line.tokens[1] != kVersion)
      throw VersionError(
          "unsupported model version '" +
          (line.tokens.size() > 1 ? line.tokens[1] : std::string("")) +
          "', expected " + std::string(kVersion));
  }
  {
    const auto& line = in.next();
    if (line.tokens.front() != "kind") in.fail(line, "expected 'kind'");
    in.expect_arity(line, 2);
    if (line.tokens[1] != expected_kind)
      in.fail(line, "model kind is '" + line.tokens[1] + "', expected '" +
                        std::string(expected_kind) + "'");
  }

  InputStage stage;
  bool have_inputs = false;
  while (!in.at_end()) {
    const auto& kw = in.keyword();
    if (kw == "inputs") {
      const auto& line = in.next();
      in.expect_arity(line, 2);
      stage.input_count = in.integer(line, 1);
      have_inputs = true;
    } else if (kw == "labels") {
      const auto& line = in.next();
      in.expect_arity(line, 4);
      stage.labels = {line.tokens[1], line.tokens[2], line.tokens[3]};
    } else if (kw == "feature") {
      stage.features.push_back(read_feature_line(in, in.next()));
    } else if (kw == "projection") {
      const auto& line = in.next();
      in.expect_arity(line, 3);
      const int raw_count = in.integer(line, 1);
      const int q = in.integer(line, 2);
      if (raw_count < 1 || q < 1 || q > raw_count)
        in.fail(line, "invalid projection shape");
      InputProjection p;
      for (int i = 0; i < raw_count; ++i) {
        const auto& l = in.next();
        if (l.tokens.front() != "raw") in.fail(l, "expected 'raw'");
        p.raw.push_back(read_feature_line(in, l));
      }
      const auto& mean = in.next();
      if (mean.tokens.front() != "mean") in.fail(mean, "expected 'mean'");
      p.pca.mean = read_vector(in, mean, 1, raw_count);
      p.pca.components.resize(raw_count, q);
      for (int j = 0; j < q; ++j) {
        const auto& l = in.next();
        if (l.tokens.front() != "component" || in.integer(l, 1) != j + 1)
          in.fail(l, "expected 'component " + std::to_string(j + 1) + "'");
        p.pca.components.col(j) = read_vector(in, l, 2, raw_count);
      }
      const auto& ev = in.next();
      if (ev.tokens.front() != "eigenvalues")
        in.fail(ev, "expected 'eigenvalues'");
      p.pca.eigenvalues = read_vector(in, ev, 1, q);
      const auto& ex = in.next();
      if (ex.tokens.front() != "explained") in.fail(ex, "expected 'explained'");
      p.pca.explained = read_vector(in, ex, 1, q);
      stage.projection = std::move(p);
    } else {
      break;
    }
  }
  if (!have_inputs) throw ModelFormatError("model document lacks 'inputs'");
  std::sort(stage.features.begin(), stage.features.end(),
            [](const auto& a, const auto& b) { return a.column < b.column; });
  for (std::size_t i = 1; i < stage.features.size(); ++i)
    if (stage.features[i].column == stage.features[i - 1].column)
      throw ModelFormatError("duplicate feature column " +
                             std::to_string(stage.features[i].column));
  for (const auto& f : stage.features)
    if (f.column > stage.input_count)
      throw ModelFormatError("feature column " + std::to_string(f.column) +
                             " exceeds inputs " +
                             std::to_string(stage.input_count));
  return stage;
}

}  // namespace polygmdh::io
