#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shq/diff/tensor.hpp"

namespace shq::data {

inline constexpr std::uint32_t kUnlabeled = 0xFFFFFFFFu;

struct LabeledTensor {
  Tensor tensor;
  std::optional<std::uint32_t> label;
};

// "SHQ1", u16 version = 1, u16 rank, rank x u32 dims, u32 label, then the
// payload as float32. All little-endian.
std::vector<std::uint8_t> encode_tensor(const Tensor& t, std::optional<std::uint32_t> label = {});
LabeledTensor decode_tensor(const std::vector<std::uint8_t>& bytes);

void save_tensor(const std::string& path, const Tensor& t, std::optional<std::uint32_t> label = {});
LabeledTensor load_tensor(const std::string& path);

}  // namespace shq::data
