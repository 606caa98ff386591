#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace tunetext {

/// Mono PCM audio with real-valued samples.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
  bool empty() const { return samples.empty(); }

  bool operator==(const AudioClip&) const = default;
};

class AudioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws AudioError unless sample_rate > 0 and every sample is finite.
void validate_clip(const AudioClip& clip);

/// Reads a RIFF/WAVE file (PCM 8/16/24/32-bit or IEEE float 32/64-bit).
/// Multi-channel input is downmixed by averaging the channels.
AudioClip read_wav(const std::filesystem::path& path);

/// Reads only the header and returns the duration in seconds.
double wav_duration_s(const std::filesystem::path& path);

enum class WavEncoding { kPcm16, kFloat32 };

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::kFloat32);

/// Returns a copy of `clip` resized to exactly `length` samples: truncated,
/// or zero-padded at the end.
AudioClip fit_length(const AudioClip& clip, std::size_t length);

}  // namespace tunetext
