#pragma once

// Line-oriented text format shared by the persisted model kinds.
//
//   polygmdh-model v1
//   kind <pnn|fnn>
//   inputs <m>
//   labels <column> <negative-token> <positive-token>
//   [projection <raw-count> <components>
//    raw <column> <name> <min> <max>          (raw-count lines)
//    mean <v>...
//    component <j> <v>...                      (one per component)
//    eigenvalues <v>...
//    explained <v>...]
//   feature <column> <name> <min> <max>
//   ... kind-specific body ...
//   end
//
// Reals are hex-floats; '#' starts a comment that runs to end of line.

#include "polygmdh/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace polygmdh::io {

inline constexpr std::string_view kMagic = "polygmdh-model";
inline constexpr std::string_view kVersion = "v1";

std::string hex(double v);
std::string dec(double v);
void check_name(const std::string& name);

struct Line {
  std::size_t number = 0;
  std::vector<std::string> tokens;
};

class Reader {
 public:
  explicit Reader(std::string_view text);

  bool at_end() const { return pos_ >= lines_.size(); }
  const Line& peek() const;
  const Line& next();
  const std::string& keyword() const { return peek().tokens.front(); }

  [[noreturn]] void fail(const Line& line, const std::string& what) const;
  double number(const Line& line, std::size_t token) const;
  int integer(const Line& line, std::size_t token) const;
  void expect_arity(const Line& line, std::size_t tokens) const;

 private:
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

/// Writes the magic line, kind, and the shared input stage.
void write_preamble(std::string& out, std::string_view kind,
                    const InputStage& stage);
/// Reads the magic line and kind, then every input-stage line up to the first
/// body keyword.
InputStage read_preamble(Reader& in, std::string_view expected_kind);

}  // namespace polygmdh::io
