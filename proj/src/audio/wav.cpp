#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "bitwave/audio.hpp"
#include "bitwave/error.hpp"

namespace bitwave::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

[[noreturn]] void malformed(const std::string& chunk, const std::string& detail) {
  throw Error(ErrorKind::io_parse, "malformed RIFF/WAVE: chunk '" + chunk + "' " + detail);
}

struct Parsed {
  WavInfo info;
  const std::uint8_t* data = nullptr;
};

Parsed parse_chunks(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12) malformed("RIFF", "header truncated");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0) malformed("RIFF", "missing RIFF tag");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) malformed("RIFF", "form type is not WAVE");

  Parsed parsed;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string tag(reinterpret_cast<const char*>(bytes.data() + pos), 4);
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (tag == "fmt ") {
      if (size < 16 || body + size > bytes.size()) malformed(tag, "truncated");
      const std::uint8_t* p = bytes.data() + body;
      parsed.info.format_tag = read_u16(p);
      parsed.info.channels = read_u16(p + 2);
      parsed.info.sample_rate = read_u32(p + 4);
      parsed.info.bits_per_sample = read_u16(p + 14);
      if (parsed.info.format_tag == kFormatExtensible) {
        if (size < 40) malformed(tag, "extensible format block truncated");
        // Sub-format GUID starts with the plain format code.
        parsed.info.format_tag = read_u16(p + 24);
      }
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) malformed(tag, "appears before 'fmt '");
      if (body + size > bytes.size()) malformed(tag, "truncated");
      const auto& info = parsed.info;
      if (info.format_tag == kFormatFloat)
        throw Error(ErrorKind::unsupported, "unsupported WAV codec: IEEE float PCM");
      if (info.format_tag != kFormatPcm)
        throw Error(ErrorKind::unsupported,
                    "unsupported WAV codec: format tag " + std::to_string(info.format_tag));
      if (info.bits_per_sample != 8 && info.bits_per_sample != 16)
        throw Error(ErrorKind::unsupported, "unsupported WAV bit depth: " +
                                                std::to_string(info.bits_per_sample));
      if (info.channels == 0) malformed("fmt ", "declares zero channels");
      if (info.sample_rate == 0) malformed("fmt ", "declares zero sample rate");
      const std::uint32_t frame_bytes = info.channels * (info.bits_per_sample / 8u);
      parsed.info.frames = size / frame_bytes;
      parsed.data = bytes.data() + body;
      return parsed;
    }
    pos = body + size + (size & 1u);
  }
  malformed(have_fmt ? "data" : "fmt ", "missing");
}

}  // namespace

Waveform parse_wav(const std::vector<std::uint8_t>& bytes, ChannelSelect select) {
  const Parsed parsed = parse_chunks(bytes);
  const WavInfo& info = parsed.info;
  if (info.frames == 0) malformed("data", "holds no samples");
  if (select.channel && *select.channel >= info.channels)
    throw Error(ErrorKind::config, "channel " + std::to_string(*select.channel) +
                                       " requested but file has " +
                                       std::to_string(info.channels));

  const int depth = info.bits_per_sample;
  const std::size_t bytes_per_sample = depth / 8;
  auto sample_at = [&](std::size_t frame, unsigned ch) -> std::int32_t {
    const std::uint8_t* p = parsed.data + (frame * info.channels + ch) * bytes_per_sample;
    if (depth == 8) return static_cast<std::int32_t>(p[0]) - 128;
    return static_cast<std::int16_t>(read_u16(p));
  };

  Waveform w;
  w.sample_rate = info.sample_rate;
  w.bit_depth = depth;
  w.samples.resize(info.frames);
  for (std::size_t t = 0; t < info.frames; ++t) {
    if (select.channel) {
      w.samples[t] = sample_at(t, *select.channel);
    } else if (info.channels == 1) {
      w.samples[t] = sample_at(t, 0);
    } else {
      double acc = 0.0;
      for (unsigned ch = 0; ch < info.channels; ++ch) acc += sample_at(t, ch);
      w.samples[t] = quantize(acc / info.channels, depth);
    }
  }
  return w;
}

namespace {
std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_parse, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
}  // namespace

Waveform load_wav(const std::filesystem::path& path, ChannelSelect select) {
  try {
    return parse_wav(read_file(path), select);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io_parse && std::string(e.what()).find(path.string()) == std::string::npos)
      throw Error(e.kind(), path.string() + ": " + e.what());
    throw;
  }
}

WavInfo probe_wav(const std::filesystem::path& path) {
  return parse_chunks(read_file(path)).info;
}

std::vector<std::uint8_t> encode_wav(const Waveform& w) {
  validate(w);
  const std::uint16_t depth = static_cast<std::uint16_t>(w.bit_depth);
  const std::uint32_t bytes_per_sample = depth / 8u;
  const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size()) * bytes_per_sample;

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size + 1);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size + (data_size & 1u));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, w.sample_rate);
  put_u32(out, w.sample_rate * bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
  put_u16(out, depth);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (std::int32_t s : w.samples) {
    if (depth == 8)
      out.push_back(static_cast<std::uint8_t>(s + 128));
    else
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
  }
  if (data_size & 1u) out.push_back(0);
  return out;
}

void save_wav(const Waveform& w, const std::filesystem::path& path) {
  const auto bytes = encode_wav(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io_parse, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io_parse, "write failed for '" + path.string() + "'");
}

}  // namespace bitwave::audio
