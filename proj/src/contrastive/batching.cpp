#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tunetext/contrastive.hpp"

namespace tunetext::contrastive {

namespace {

std::string join_sampled(const std::vector<MinedText>& items, std::size_t limit,
                         const std::string& delimiter, nn::Rng& rng) {
  std::vector<std::size_t> idx(items.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::size_t k = std::min(limit, items.size());
  // Partial Fisher-Yates: the first k slots are a uniform draw without
  // replacement, in random order.
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(idx[i], idx[i + nn::uniform_index(rng, idx.size() - i)]);
  }
  std::string out;
  for (std::size_t i = 0; i < k; ++i) {
    if (i > 0) out += delimiter;
    out += items[idx[i]].text;
  }
  return out;
}

}  // namespace

std::string sample_text(const MinedDescription& desc, const SentenceSampleRule& rule,
                        const BatchSpec& spec, nn::Rng& rng) {
  if (desc.empty()) {
    throw std::invalid_argument("track '" + desc.track_id + "' has no aspects or sentences");
  }
  if (spec.max_aspects_per_text == 0) {
    throw std::invalid_argument("max_aspects_per_text must be >= 1");
  }
  bool use_aspects = desc.sentences.empty();
  if (!desc.aspects.empty() && !desc.sentences.empty()) {
    use_aspects = nn::uniform01(rng) < 0.5;
  }
  if (use_aspects) {
    return join_sampled(desc.aspects, spec.max_aspects_per_text,
                        spec.aspect_join_delimiter, rng);
  }
  if (rule.mode == SentenceMode::kRandomSubset) {
    return join_sampled(desc.sentences, spec.max_aspects_per_text,
                        spec.sentence_join_delimiter, rng);
  }
  const std::size_t n = 1 + nn::uniform_index(rng, desc.sentences.size());
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += spec.sentence_join_delimiter;
    out += desc.sentences[i].text;
  }
  return out;
}

AudioClip crop_audio(const AudioClip& clip, double length_s, nn::Rng& rng) {
  if (clip.sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
  const auto length = static_cast<std::size_t>(std::lround(length_s * clip.sample_rate));
  if (clip.samples.size() <= length) return fit_length(clip, length);
  const std::size_t start = nn::uniform_index(rng, clip.samples.size() - length + 1);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(start + length));
  return out;
}

}  // namespace tunetext::contrastive
