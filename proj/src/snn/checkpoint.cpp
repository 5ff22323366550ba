#include "shq/snn/checkpoint.hpp"

#include <sstream>

#include "shq/detail/binary_io.hpp"
#include "shq/detail/text.hpp"
#include "shq/errors.hpp"

namespace shq::snn {

using detail::format_double;

namespace {

constexpr std::uint16_t kVersion = 1;

void write_tensor(detail::ByteWriter& w, const Tensor& t) {
  w.u16(static_cast<std::uint16_t>(t.rank()));
  for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
  for (double v : t.data()) w.f32(static_cast<float>(v));
}

Tensor read_tensor(detail::ByteReader& r) {
  const std::size_t at = r.offset();
  const std::uint16_t rank = r.u16();
  Shape shape(rank);
  for (auto& d : shape) {
    d = r.u32();
    if (d == 0) throw FormatError("zero dimension in tensor shape", at);
  }
  const std::size_t n = shape_numel(shape);
  if (r.remaining() < 4 * n) throw FormatError("tensor payload shorter than its shape", r.offset());
  std::vector<double> data(n);
  for (double& v : data) v = r.f32();
  return Tensor(std::move(shape), std::move(data));
}

void write_string(detail::ByteWriter& w, const std::string& s) {
  w.u32(static_cast<std::uint32_t>(s.size()));
  w.raw(s);
}

std::string read_string(detail::ByteReader& r) { return r.raw(r.u32()); }

}  // namespace

std::vector<std::pair<std::string, std::string>> model_entries(const ModelConfig& c,
                                                               const LifConfig& lif) {
  return {
      {"model.steps", std::to_string(c.steps)},
      {"model.blocks", std::to_string(c.blocks)},
      {"model.dim", std::to_string(c.dim)},
      {"model.heads", std::to_string(c.heads)},
      {"model.mlp_ratio", std::to_string(c.mlp_ratio)},
      {"model.channels", detail::join_sizes(c.channels)},
      {"model.pool_after", detail::join_sizes(c.pool_after)},
      {"model.height", std::to_string(c.height)},
      {"model.width", std::to_string(c.width)},
      {"model.classes", std::to_string(c.classes)},
      {"model.attention_scale", format_double(c.attention_scale)},
      {"model.lif.threshold", format_double(lif.threshold)},
      {"model.lif.decay", format_double(lif.decay)},
      {"model.lif.surrogate_width", format_double(lif.surrogate_width)},
  };
}

bool set_model_entry(ModelConfig& c, LifConfig& lif, const std::string& key, const std::string& v) {
  auto size = [&] { return static_cast<std::size_t>(detail::parse_u64(key, v)); };
  if (key == "model.steps") c.steps = size();
  else if (key == "model.blocks") c.blocks = size();
  else if (key == "model.dim") c.dim = size();
  else if (key == "model.heads") c.heads = size();
  else if (key == "model.mlp_ratio") c.mlp_ratio = size();
  else if (key == "model.channels") c.channels = detail::parse_size_list(key, v);
  else if (key == "model.pool_after") c.pool_after = detail::parse_size_list(key, v);
  else if (key == "model.height") c.height = size();
  else if (key == "model.width") c.width = size();
  else if (key == "model.classes") c.classes = size();
  else if (key == "model.attention_scale") c.attention_scale = detail::parse_double(key, v);
  else if (key == "model.lif.threshold") lif.threshold = detail::parse_double(key, v);
  else if (key == "model.lif.decay") lif.decay = detail::parse_double(key, v);
  else if (key == "model.lif.surrogate_width") lif.surrogate_width = detail::parse_double(key, v);
  else return false;
  return true;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const Model& m = ckpt.model;
  if (ckpt.choices.size() != m.layers.size() || m.weights.size() != m.layers.size()) {
    throw ValidationError("checkpoint: choices, weights and layers disagree in length");
  }
  detail::ByteWriter w;
  w.raw("SHQC");
  w.u16(kVersion);
  std::string text;
  for (const auto& [k, v] : model_entries(m.config, m.lif)) text += k + "=" + v + "\n";
  write_string(w, text);
  w.u32(static_cast<std::uint32_t>(m.layers.size()));
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    write_string(w, m.layers[i].name);
    w.u8(static_cast<std::uint8_t>(quant::index_of(ckpt.choices[i])));
    write_tensor(w, m.weights[i]);
  }
  w.u32(static_cast<std::uint32_t>(m.aux.size()));
  for (const auto& [name, t] : m.aux) {
    write_string(w, name);
    write_tensor(w, t);
  }
  return w.bytes();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(4) != "SHQC") throw FormatError("checkpoint: bad magic", 0);
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version), 4);

  ModelConfig cfg;
  LifConfig lif;
  std::istringstream text(read_string(r));
  std::string line;
  while (std::getline(text, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (!set_model_entry(cfg, lif, line.substr(0, eq), line.substr(eq + 1))) {
      throw FormatError("checkpoint: unknown config key " + line.substr(0, eq), r.offset());
    }
  }
  Checkpoint ckpt;
  ckpt.model.config = cfg;
  ckpt.model.lif = lif;
  ckpt.model.layers = enumerate_layers(cfg);
  const std::size_t at = r.offset();
  const std::uint32_t count = r.u32();
  if (count != ckpt.model.layers.size()) {
    throw FormatError("checkpoint: " + std::to_string(count) + " layers stored, config implies " +
                      std::to_string(ckpt.model.layers.size()), at);
  }
  for (const auto& h : ckpt.model.layers) {
    const std::size_t name_at = r.offset();
    const std::string name = read_string(r);
    if (name != h.name) throw FormatError("checkpoint: expected layer " + h.name + ", found " + name, name_at);
    const std::uint8_t choice = r.u8();
    if (choice >= quant::kChoiceCount) throw FormatError("checkpoint: invalid choice index", r.offset() - 1);
    ckpt.choices.push_back(quant::kAllChoices[choice]);
    const std::size_t tensor_at = r.offset();
    Tensor w = read_tensor(r);
    if (w.shape() != h.weight_shape) {
      throw FormatError("checkpoint: layer " + h.name + " has shape " + shape_string(w.shape()) +
                        ", expected " + shape_string(h.weight_shape), tensor_at);
    }
    ckpt.model.weights.push_back(std::move(w));
  }
  const std::uint32_t aux_count = r.u32();
  for (std::uint32_t i = 0; i < aux_count; ++i) {
    std::string name = read_string(r);
    ckpt.model.aux[name] = read_tensor(r);
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes", r.offset());
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(detail::read_file(path)); }

}  // namespace shq::snn
