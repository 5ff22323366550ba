#include "shq/data/tensor_file.hpp"

#include <fstream>
#include <iterator>

#include "shq/detail/binary_io.hpp"
#include "shq/errors.hpp"

namespace shq {
namespace detail {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace detail

namespace data {

namespace {
constexpr std::uint16_t kVersion = 1;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t, std::optional<std::uint32_t> label) {
  detail::ByteWriter w;
  w.raw("SHQ1");
  w.u16(kVersion);
  w.u16(static_cast<std::uint16_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  w.u32(label.value_or(kUnlabeled));
  for (double v : t.data()) w.f32(static_cast<float>(v));
  return w.bytes();
}

LabeledTensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(4) != "SHQ1") throw FormatError("tensor file: bad magic", 0);
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw FormatError("tensor file: unsupported version " + std::to_string(version), 4);
  const std::uint16_t rank = r.u16();
  Shape shape(rank);
  for (auto& d : shape) {
    const std::size_t at = r.offset();
    d = r.u32();
    if (d == 0) throw FormatError("tensor file: zero dimension", at);
  }
  const std::uint32_t label = r.u32();
  const std::size_t n = shape_numel(shape);
  if (r.remaining() != 4 * n) {
    throw FormatError("tensor file: payload holds " + std::to_string(r.remaining()) + " bytes, dims need " +
                          std::to_string(4 * n),
                      r.offset());
  }
  std::vector<double> data(n);
  for (double& v : data) v = r.f32();
  LabeledTensor out{Tensor(std::move(shape), std::move(data)), std::nullopt};
  if (label != kUnlabeled) out.label = label;
  return out;
}

void save_tensor(const std::string& path, const Tensor& t, std::optional<std::uint32_t> label) {
  detail::write_file(path, encode_tensor(t, label));
}

LabeledTensor load_tensor(const std::string& path) { return decode_tensor(detail::read_file(path)); }

}  // namespace data
}  // namespace shq
