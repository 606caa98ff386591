#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "tunetext/audio.hpp"

namespace tunetext {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

struct WavLayout {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  std::streamoff data_offset = 0;
  std::uint32_t data_bytes = 0;
};

WavLayout parse_header(std::ifstream& in, const std::filesystem::path& path) {
  auto fail = [&](const std::string& why) {
    throw AudioError(path.string() + ": " + why);
  };
  std::array<unsigned char, 12> riff{};
  if (!in.read(reinterpret_cast<char*>(riff.data()), riff.size())) {
    fail("truncated RIFF header");
  }
  if (std::memcmp(riff.data(), "RIFF", 4) != 0 ||
      std::memcmp(riff.data() + 8, "WAVE", 4) != 0) {
    fail("not a RIFF/WAVE file");
  }
  WavLayout layout;
  bool have_fmt = false;
  while (true) {
    std::array<unsigned char, 8> chunk{};
    if (!in.read(reinterpret_cast<char*>(chunk.data()), chunk.size())) {
      fail("missing data chunk");
    }
    const std::uint32_t size = le32(chunk.data() + 4);
    if (std::memcmp(chunk.data(), "fmt ", 4) == 0) {
      if (size < 16) fail("fmt chunk too small");
      std::vector<unsigned char> fmt(size);
      if (!in.read(reinterpret_cast<char*>(fmt.data()), size)) fail("truncated fmt chunk");
      layout.format = le16(fmt.data());
      layout.channels = le16(fmt.data() + 2);
      layout.sample_rate = le32(fmt.data() + 4);
      layout.bits = le16(fmt.data() + 14);
      if (layout.format == kFormatExtensible && size >= 26) {
        layout.format = le16(fmt.data() + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk.data(), "data", 4) == 0) {
      if (!have_fmt) fail("data chunk before fmt chunk");
      layout.data_offset = in.tellg();
      layout.data_bytes = size;
      break;
    } else {
      in.seekg(size, std::ios::cur);
    }
    if (size % 2 == 1) in.seekg(1, std::ios::cur);
  }
  if (layout.channels == 0) fail("zero channels");
  if (layout.sample_rate == 0) fail("zero sample rate");
  const bool pcm_ok = layout.format == kFormatPcm &&
                      (layout.bits == 8 || layout.bits == 16 ||
                       layout.bits == 24 || layout.bits == 32);
  const bool float_ok =
      layout.format == kFormatFloat && (layout.bits == 32 || layout.bits == 64);
  if (!pcm_ok && !float_ok) {
    fail("unsupported encoding (format " + std::to_string(layout.format) +
         ", " + std::to_string(layout.bits) + " bits)");
  }
  return layout;
}

double decode_sample(const unsigned char* p, const WavLayout& layout) {
  if (layout.format == kFormatFloat) {
    if (layout.bits == 32) {
      std::uint32_t bits = le32(p);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      return f;
    }
    std::uint64_t bits = static_cast<std::uint64_t>(le32(p)) |
                         (static_cast<std::uint64_t>(le32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  switch (layout.bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(
          (static_cast<std::uint32_t>(p[0]) << 8) |
          (static_cast<std::uint32_t>(p[1]) << 16) |
          (static_cast<std::uint32_t>(p[2]) << 24));
      return (v >> 8) / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
  }
}

}  // namespace

void validate_clip(const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw AudioError("sample rate must be positive");
  for (double s : clip.samples) {
    if (!std::isfinite(s)) throw AudioError("clip contains non-finite samples");
  }
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError(path.string() + ": cannot open");
  const WavLayout layout = parse_header(in, path);
  const std::size_t bytes_per_sample = layout.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * layout.channels;
  const std::size_t frames = layout.data_bytes / frame_bytes;

  std::vector<unsigned char> raw(frames * frame_bytes);
  in.seekg(layout.data_offset);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  const std::size_t got = static_cast<std::size_t>(in.gcount()) / frame_bytes;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(layout.sample_rate);
  clip.samples.resize(got);
  for (std::size_t f = 0; f < got; ++f) {
    double sum = 0.0;
    for (std::size_t c = 0; c < layout.channels; ++c) {
      sum += decode_sample(raw.data() + f * frame_bytes + c * bytes_per_sample,
                           layout);
    }
    clip.samples[f] = sum / layout.channels;
  }
  validate_clip(clip);
  return clip;
}

double wav_duration_s(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError(path.string() + ": cannot open");
  const WavLayout layout = parse_header(in, path);
  const std::size_t frame_bytes = (layout.bits / 8) * layout.channels;
  return static_cast<double>(layout.data_bytes / frame_bytes) /
         layout.sample_rate;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding) {
  validate_clip(clip);
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t format =
      encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, format);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put32(out, static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8));
  put16(out, bits / 8);
  put16(out, bits);
  out += "data";
  put32(out, data_bytes);
  for (double s : clip.samples) {
    if (encoding == WavEncoding::kPcm16) {
      const double c = std::clamp(s, -1.0, 32767.0 / 32768.0);
      put16(out, static_cast<std::uint16_t>(
                     static_cast<std::int16_t>(std::lround(c * 32768.0))));
    } else {
      const float f = static_cast<float>(s);
      std::uint32_t b;
      std::memcpy(&b, &f, sizeof b);
      put32(out, b);
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw AudioError(path.string() + ": cannot open for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw AudioError(path.string() + ": write failed");
}

AudioClip fit_length(const AudioClip& clip, std::size_t length) {
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(length, 0.0);
  const std::size_t n = std::min(length, clip.samples.size());
  std::copy_n(clip.samples.begin(), n, out.samples.begin());
  return out;
}

}  // namespace tunetext
