#include "bitwave/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "bitwave/error.hpp"

namespace bitwave::container {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorKind::io_parse, "container truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode(const Container& c) {
  const std::uint64_t count = c.rows * c.cols;
  const bool is_bits = c.kind != PayloadKind::feature_matrix;
  if ((is_bits ? c.bits.size() : c.values.size()) != count)
    throw Error(ErrorKind::shape, "container payload does not match rows x cols");

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(c.kind));
  put_u32(out, c.bit_depth);
  put_u32(out, c.sample_rate);
  put_u64(out, c.rows);
  put_u64(out, c.cols);
  put_u32(out, static_cast<std::uint32_t>(c.meta.size()));
  out.insert(out.end(), c.meta.begin(), c.meta.end());
  if (is_bits) {
    out.insert(out.end(), c.bits.begin(), c.bits.end());
  } else {
    for (double v : c.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Container decode(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4), kMagic, 4) != 0) throw Error(ErrorKind::io_parse, "container magic mismatch");
  const auto version = r.uint(4);
  if (version != kVersion)
    throw Error(ErrorKind::io_parse, "unsupported container version " + std::to_string(version));
  Container c;
  const auto kind = r.uint(4);
  if (kind < 1 || kind > 3) throw Error(ErrorKind::io_parse, "unknown container kind " + std::to_string(kind));
  c.kind = static_cast<PayloadKind>(kind);
  c.bit_depth = static_cast<std::uint32_t>(r.uint(4));
  c.sample_rate = static_cast<std::uint32_t>(r.uint(4));
  c.rows = r.uint(8);
  c.cols = r.uint(8);
  const auto meta_len = static_cast<std::size_t>(r.uint(4));
  const auto* meta = r.take(meta_len);
  c.meta.assign(reinterpret_cast<const char*>(meta), meta_len);
  const std::uint64_t count = c.rows * c.cols;
  if (c.kind == PayloadKind::feature_matrix) {
    if (r.remaining() != count * 8) throw Error(ErrorKind::io_parse, "feature payload size mismatch");
    c.values.resize(count);
    for (auto& v : c.values) v = std::bit_cast<double>(r.uint(8));
  } else {
    if (r.remaining() != count) throw Error(ErrorKind::io_parse, "bit payload size mismatch");
    const auto* p = r.take(count);
    c.bits.assign(p, p + count);
    for (std::uint8_t b : c.bits)
      if (b > 1) throw Error(ErrorKind::io_parse, "bit payload holds a non-binary value");
  }
  return c;
}

void write_file(const Container& c, const std::filesystem::path& path) {
  const auto bytes = encode(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_parse, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io_parse, "write failed for '" + path.string() + "'");
}

Container read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_parse, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode(bytes);
}

Container pack(const bitrep::BitPulseSet& p) {
  Container c;
  c.kind = PayloadKind::bit_pulses;
  c.bit_depth = static_cast<std::uint32_t>(p.bit_depth);
  c.sample_rate = p.sample_rate;
  c.rows = static_cast<std::uint64_t>(p.bit_depth);
  c.cols = p.length;
  c.meta = "bit_pulse msb_first twos_complement";
  c.bits = p.data;
  return c;
}

Container pack(const bitrep::BitPatternImage& img) {
  Container c;
  c.kind = PayloadKind::bit_image;
  c.bit_depth = static_cast<std::uint32_t>(img.bit_depth);
  c.sample_rate = img.sample_rate;
  c.rows = img.rows;
  c.cols = img.cols();
  c.meta = "bit_image msb_first twos_complement";
  c.bits = img.data;
  return c;
}

bitrep::BitPulseSet unpack_pulses(const Container& c) {
  if (c.kind != PayloadKind::bit_pulses || c.rows != c.bit_depth)
    throw Error(ErrorKind::io_parse, "container does not hold a bit pulse set");
  bitrep::BitPulseSet p;
  p.bit_depth = static_cast<int>(c.bit_depth);
  p.length = c.cols;
  p.sample_rate = c.sample_rate;
  p.data = c.bits;
  return p;
}

bitrep::BitPatternImage unpack_image(const Container& c) {
  if (c.kind != PayloadKind::bit_image || c.cols != c.bit_depth)
    throw Error(ErrorKind::io_parse, "container does not hold a bit pattern image");
  bitrep::BitPatternImage img;
  img.bit_depth = static_cast<int>(c.bit_depth);
  img.rows = c.rows;
  img.sample_rate = c.sample_rate;
  img.data = c.bits;
  return img;
}

}  // namespace bitwave::container
