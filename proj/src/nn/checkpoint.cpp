#include "bitwave/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bitwave/error.hpp"

namespace bitwave::nn {
namespace {

constexpr char kMagic[4] = {'B', 'W', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void tensor(const NamedTensor& t) {
    str(t.name);
    u32(static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) u64(d);
    for (double v : t.value.storage()) f64(v);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : bytes(b) {}
  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += static_cast<std::size_t>(width);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string str() {
    const auto n = static_cast<std::size_t>(uint(4));
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
  NamedTensor tensor() {
    NamedTensor t;
    t.name = str();
    const auto rank = uint(4);
    if (rank > 8) throw Error(ErrorKind::io_parse, "checkpoint tensor rank too large");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(uint(8));
    const std::size_t n = element_count(shape);
    need(n * 8);
    std::vector<double> values(n);
    for (double& v : values) v = f64();
    t.value = Tensor(std::move(shape), std::move(values));
    return t;
  }
  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw Error(ErrorKind::io_parse, "checkpoint truncated");
  }
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
};

}  // namespace

Checkpoint snapshot(Sequential& graph, std::string metadata, const MomentumSgd* optimizer) {
  Checkpoint c;
  c.metadata = std::move(metadata);
  for (std::size_t i = 0; i < graph.size(); ++i) c.layer_specs.push_back(graph.at(i).describe());
  const auto params = graph.params();
  for (std::size_t k = 0; k < params.size(); ++k)
    c.params.push_back({std::to_string(k) + ":" + params[k]->name, params[k]->value});
  if (optimizer && !optimizer->velocity().empty()) {
    c.momentum = optimizer->momentum();
    for (std::size_t k = 0; k < optimizer->velocity().size(); ++k)
      c.velocity.push_back({"v" + std::to_string(k), optimizer->velocity()[k]});
  }
  return c;
}

void restore(const Checkpoint& ckpt, Sequential& graph) {
  const auto params = graph.params();
  if (params.size() != ckpt.params.size())
    throw Error(ErrorKind::config, "checkpoint holds " + std::to_string(ckpt.params.size()) +
                                       " tensors but the model has " + std::to_string(params.size()));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->value.shape() != ckpt.params[k].value.shape())
      throw Error(ErrorKind::config, "checkpoint tensor " + ckpt.params[k].name + " has shape " +
                                         to_string(ckpt.params[k].value.shape()) + ", model expects " +
                                         to_string(params[k]->value.shape()));
    params[k]->value = ckpt.params[k].value;
  }
}

std::vector<std::uint8_t> encode(const Checkpoint& ckpt) {
  Writer w;
  w.out.assign(kMagic, kMagic + 4);
  w.u32(kVersion);
  w.str(ckpt.metadata);
  w.u32(static_cast<std::uint32_t>(ckpt.layer_specs.size()));
  for (const auto& s : ckpt.layer_specs) w.str(s);
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& t : ckpt.params) w.tensor(t);
  w.u8(ckpt.momentum ? 1 : 0);
  if (ckpt.momentum) {
    w.f64(*ckpt.momentum);
    w.u32(static_cast<std::uint32_t>(ckpt.velocity.size()));
    for (const auto& t : ckpt.velocity) w.tensor(t);
  }
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorKind::io_parse, "checkpoint magic mismatch");
  r.pos = 4;
  if (r.uint(4) != kVersion) throw Error(ErrorKind::io_parse, "unsupported checkpoint version");
  Checkpoint c;
  c.metadata = r.str();
  const auto n_specs = r.uint(4);
  for (std::uint64_t i = 0; i < n_specs; ++i) c.layer_specs.push_back(r.str());
  const auto n_params = r.uint(4);
  for (std::uint64_t i = 0; i < n_params; ++i) c.params.push_back(r.tensor());
  if (r.uint(1)) {
    c.momentum = r.f64();
    const auto n_vel = r.uint(4);
    for (std::uint64_t i = 0; i < n_vel; ++i) c.velocity.push_back(r.tensor());
  }
  if (r.pos != bytes.size()) throw Error(ErrorKind::io_parse, "trailing bytes after checkpoint");
  return c;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_parse, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io_parse, "write failed for '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_parse, "cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace bitwave::nn
