#pragma once

// Cross-modal relevance scoring of mined texts against their own audio, and
// removal of texts that score below a threshold.

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tunetext/audio.hpp"
#include "tunetext/encoders.hpp"
#include "tunetext/mined.hpp"

namespace tunetext::relevance {

/// Non-overlapping blocks of `block_s` seconds from offset 0. A trailing
/// remainder of at least half a block is zero-padded into a final block;
/// a shorter one is dropped. Clips no longer than one block give one padded
/// block. Throws AudioError for an empty clip.
std::vector<AudioClip> segment_audio(const AudioClip& clip, double block_s = 10.0);

struct RelevanceScore {
  std::string track_id;
  TextKind kind = TextKind::kAspect;
  std::string text;
  double score = 0.0;
  std::size_t block_count = 0;

  bool operator==(const RelevanceScore&) const = default;
};

/// Block embeddings of a clip, cut with the model's input length.
std::vector<encoders::Embedding> embed_blocks(const encoders::EmbeddingModel& model,
                                              const AudioClip& clip);

/// Mean of the cosine between `text` and each block of `clip`. Throws
/// std::invalid_argument for empty text.
RelevanceScore score_pair(const encoders::EmbeddingModel& model, std::string_view text,
                          const AudioClip& clip);

/// Same, against precomputed block embeddings.
double mean_block_similarity(const std::vector<encoders::Embedding>& blocks,
                             const encoders::Embedding& text);

struct TrackError {
  std::string track_id;
  std::string message;

  bool operator==(const TrackError&) const = default;
};

struct FilterReport {
  std::vector<RelevanceScore> kept;
  std::vector<RelevanceScore> removed;
  std::vector<TrackError> errors;  // tracks passed through unfiltered
  double threshold = 0.0;
};

struct FilterResult {
  MinedMap filtered;
  FilterReport report;
};

/// Returns the clip for a track; may throw for unresolvable audio.
using AudioResolver = std::function<AudioClip(const std::string& track_id)>;

/// Scores every aspect and sentence; items with score < threshold are
/// removed, ties with the threshold kept. Kept items carry their score.
/// Tracks whose audio cannot be resolved are copied through and listed in
/// report.errors.
FilterResult filter_dataset(const encoders::EmbeddingModel& model, const MinedMap& mined,
                            const AudioResolver& audio, double threshold = 0.0);

/// One line per scored item: track_id, kind, text, score, kept. Errors are
/// written as lines with an "error" field.
void save_report(const std::filesystem::path& path, const FilterReport& report);

}  // namespace tunetext::relevance
