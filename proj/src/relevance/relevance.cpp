#include "tunetext/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "tunetext/json_lines.hpp"
#include "tunetext/kernels.hpp"

namespace tunetext::relevance {

std::vector<AudioClip> segment_audio(const AudioClip& clip, double block_s) {
  if (clip.empty()) throw AudioError("cannot segment an empty clip");
  if (clip.sample_rate <= 0) throw AudioError("sample rate must be positive");
  if (!(block_s > 0.0)) throw std::invalid_argument("block length must be positive");
  const auto block = static_cast<std::size_t>(std::lround(block_s * clip.sample_rate));
  if (block == 0) throw std::invalid_argument("block length is shorter than one sample");

  std::vector<AudioClip> out;
  const std::size_t n = clip.samples.size();
  if (n <= block) {
    out.push_back(fit_length(clip, block));
    return out;
  }
  std::size_t start = 0;
  for (; start + block <= n; start += block) {
    AudioClip b;
    b.sample_rate = clip.sample_rate;
    b.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(start + block));
    out.push_back(std::move(b));
  }
  const std::size_t rest = n - start;
  if (rest > 0 && 2 * rest >= block) {
    AudioClip b;
    b.sample_rate = clip.sample_rate;
    b.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(start),
                     clip.samples.end());
    b.samples.resize(block, 0.0);
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<encoders::Embedding> embed_blocks(const encoders::EmbeddingModel& model,
                                              const AudioClip& clip) {
  if (clip.sample_rate != model.sample_rate()) {
    throw AudioError("clip sample rate " + std::to_string(clip.sample_rate) +
                     " does not match model rate " + std::to_string(model.sample_rate()));
  }
  std::vector<encoders::Embedding> out;
  for (const auto& block : segment_audio(clip, model.input_seconds())) {
    out.push_back(model.embed_audio(block));
  }
  return out;
}

double mean_block_similarity(const std::vector<encoders::Embedding>& blocks,
                             const encoders::Embedding& text) {
  if (blocks.empty()) throw std::invalid_argument("no audio blocks to score");
  double sum = 0.0;
  for (const auto& b : blocks) sum += encoders::similarity(b, text);
  return sum / static_cast<double>(blocks.size());
}

RelevanceScore score_pair(const encoders::EmbeddingModel& model, std::string_view text,
                          const AudioClip& clip) {
  if (text.empty()) throw std::invalid_argument("cannot score an empty text");
  const auto blocks = embed_blocks(model, clip);
  RelevanceScore r;
  r.text = std::string(text);
  r.score = mean_block_similarity(blocks, model.embed_text(text));
  r.block_count = blocks.size();
  return r;
}

FilterResult filter_dataset(const encoders::EmbeddingModel& model, const MinedMap& mined,
                            const AudioResolver& audio, double threshold) {
  if (!audio) throw std::invalid_argument("an audio resolver is required");
  FilterResult result;
  result.report.threshold = threshold;
  for (const auto& [id, desc] : mined) {
    std::vector<encoders::Embedding> blocks;
    try {
      blocks = embed_blocks(model, audio(id));
    } catch (const std::exception& e) {
      spdlog::warn("relevance: track '{}' passed through unfiltered: {}", id, e.what());
      result.report.errors.push_back({id, e.what()});
      result.filtered.emplace(id, desc);
      continue;
    }
    MinedDescription out;
    out.track_id = desc.track_id.empty() ? id : desc.track_id;
    for (TextKind kind : {TextKind::kAspect, TextKind::kSentence}) {
      for (const auto& item : desc.items(kind)) {
        RelevanceScore r;
        r.track_id = id;
        r.kind = kind;
        r.text = item.text;
        r.block_count = blocks.size();
        r.score = mean_block_similarity(blocks, model.embed_text(item.text));
        if (r.score < threshold) {
          result.report.removed.push_back(std::move(r));
        } else {
          MinedText kept = item;
          kept.score = r.score;
          out.items(kind).push_back(std::move(kept));
          result.report.kept.push_back(std::move(r));
        }
      }
    }
    result.filtered.emplace(id, std::move(out));
  }
  return result;
}

void save_report(const std::filesystem::path& path, const FilterReport& report) {
  // Interleave kept and removed in track order so two runs diff line by line.
  std::vector<std::pair<const RelevanceScore*, bool>> rows;
  for (const auto& r : report.kept) rows.emplace_back(&r, true);
  for (const auto& r : report.removed) rows.emplace_back(&r, false);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.first->track_id < b.first->track_id;
  });
  std::vector<nlohmann::json> lines;
  for (const auto& [r, kept] : rows) {
    lines.push_back({{"track_id", r->track_id},
                     {"kind", std::string(to_string(r->kind))},
                     {"text", r->text},
                     {"score", r->score},
                     {"kept", kept}});
  }
  for (const auto& e : report.errors) {
    lines.push_back({{"track_id", e.track_id}, {"error", e.message}});
  }
  write_json_lines(path, lines);
}

}  // namespace tunetext::relevance
