#pragma once

// Synthetic data for tests: a learnable audio/text toy where each track is
// two tones named by two tags, and small annotated texts for the taggers.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tunetext/audio.hpp"
#include "tunetext/mined.hpp"
#include "tunetext/textminer.hpp"

namespace tunetext::toy {

inline constexpr std::size_t kGroupSize = 8;

/// 16 tag words; the first eight name low tones, the last eight high tones.
const std::vector<std::string>& tag_names();
double tag_frequency(std::size_t tag);

struct ToyOptions {
  int sample_rate = 8000;
  double seconds = 12.0;
  double noise = 0.02;
};

/// Tones for tags (a, b) with random phase and a little white noise.
AudioClip render(std::size_t a, std::size_t b, std::uint64_t seed, const ToyOptions& opt = {});

/// Every (low, high) tag pair once: 64 pairs.
std::vector<std::pair<std::size_t, std::size_t>> all_pairs();

std::string pair_label(std::size_t a, std::size_t b);

struct ToyPaths {
  std::filesystem::path dir;
  std::filesystem::path corpus;         // train + valid splits
  std::filesystem::path mined;          // clean aspects
  std::filesystem::path test_manifest;  // joint-label retrieval queries
  std::filesystem::path tag_manifest;   // single tags, for tagging
  std::filesystem::path annotations;    // tagger training data
  std::filesystem::path config;         // train settings sized for the toy
};

/// Writes the whole toy under `dir`.
ToyPaths write_toy(const std::filesystem::path& dir, std::uint64_t seed,
                   const ToyOptions& opt = {});

/// Copy of `mined` where `fraction` of all aspects are random wrong tags.
MinedMap inject_noise(const MinedMap& mined, double fraction, std::uint64_t seed);

/// Short annotated texts with aspect and sentence spans.
std::vector<textminer::AnnotatedText> annotated_texts(std::size_t count, std::uint64_t seed);

}  // namespace tunetext::toy
