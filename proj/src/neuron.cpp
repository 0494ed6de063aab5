#include "polygmdh/neuron.hpp"

namespace polygmdh {

const char* to_string(TransferKind kind) {
  return kind == TransferKind::bilinear ? "bilinear" : "linear";
}

TransferKind parse_transfer(const std::string& token) {
  if (token == "bilinear") return TransferKind::bilinear;
  if (token == "linear") return TransferKind::linear;
  throw ConfigError("unknown transfer kind '" + token + "'");
}

std::vector<std::pair<int, int>> enumerate_pairs(int count) {
  if (count < 2)
    throw DataError("need at least 2 sources to form pairs, got " +
                    std::to_string(count));
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(count) * (count - 1) / 2);
  for (int i = 0; i < count; ++i)
    for (int j = i + 1; j < count; ++j) pairs.emplace_back(i, j);
  return pairs;
}

}  // namespace polygmdh
