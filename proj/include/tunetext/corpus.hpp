#pragma once

// Text-music corpus data model: ingestion of pre-extracted records,
// JSON Lines persistence, split handling and descriptive statistics.

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tunetext/mined.hpp"

namespace tunetext::corpus {

enum class Split { kTrain, kValid, kTest };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct Section {
  std::string section_title;
  std::string section_text;

  bool operator==(const Section&) const = default;
};

struct Metadata {
  std::vector<std::string> genres;
  std::vector<std::string> instruments;

  bool operator==(const Metadata&) const = default;
};

struct CorpusRecord {
  std::string track_id;
  std::string audio_ref;
  std::string caption;
  std::string file_description;
  std::vector<Section> sections;
  Metadata metadata;
  Split split = Split::kTrain;

  bool operator==(const CorpusRecord&) const = default;
};

struct Corpus {
  std::string name;
  std::chrono::system_clock::time_point created_at{};
  std::vector<CorpusRecord> records;

  const CorpusRecord* find(std::string_view track_id) const;
  std::vector<const CorpusRecord*> in_split(Split split) const;

  /// Structural equality over name and records. created_at is not part of
  /// the persisted data and is ignored.
  bool operator==(const Corpus& other) const {
    return name == other.name && records == other.records;
  }
};

/// Section titles removed from article text during ingestion. Matching is
/// ASCII case-insensitive on the whole title.
class SectionExclusionList {
 public:
  SectionExclusionList() = default;
  explicit SectionExclusionList(const std::vector<std::string>& titles);

  /// {"Music video", "Chart performance", "Covers", "Remixes"}
  static SectionExclusionList defaults();

  bool excludes(std::string_view title) const;
  const std::set<std::string>& titles() const { return lowered_; }

 private:
  std::set<std::string> lowered_;
};

/// Uncurated record as produced by an upstream extractor.
struct RawRecord {
  std::string track_id;
  std::optional<std::string> audio_ref;
  std::string caption;
  std::string file_description;
  std::vector<Section> sections;
  Metadata metadata;
  std::optional<Split> split;
  // Supplied by the producer: the sample is linked to a music category.
  bool music_category = true;
};

struct DropEntry {
  std::string track_id;
  std::string reason;
};

struct IngestResult {
  Corpus corpus;
  std::vector<DropEntry> drops;
};

class DuplicateTrackIdError : public std::runtime_error {
 public:
  explicit DuplicateTrackIdError(std::vector<std::string> offenders);
  const std::vector<std::string>& offenders() const { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

/// Deterministic 80/10/10 split derived from a hash of the track id.
Split default_split(std::string_view track_id);

IngestResult ingest_records(const std::vector<RawRecord>& raw,
                            const SectionExclusionList& exclusions,
                            std::string corpus_name = "corpus");

RawRecord to_raw(const CorpusRecord& record);

/// Genres then instruments, exact duplicates removed, casing preserved.
std::vector<std::string> extract_metadata_aspects(const CorpusRecord& record);

void write_drop_log(const std::filesystem::path& path,
                    const std::vector<DropEntry>& drops);

// JSON Lines persistence ----------------------------------------------------

nlohmann::json record_to_json(const CorpusRecord& record);
CorpusRecord record_from_json(const nlohmann::json& doc);
RawRecord raw_record_from_json(const nlohmann::json& doc);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Throws ParseError naming the first malformed line. The corpus name is
/// the file stem.
Corpus load_corpus(const std::filesystem::path& path);
std::vector<RawRecord> load_raw_records(const std::filesystem::path& path);

/// Resolves `audio_ref` relative to `base_dir` unless it is absolute.
std::filesystem::path resolve_audio(const std::filesystem::path& base_dir,
                                    const std::string& audio_ref);

/// Returns `track_id<TAB>problem` entries for every record whose audio is
/// missing or unreadable; empty when the corpus validates.
std::vector<DropEntry> validate_audio(const Corpus& corpus,
                                      const std::filesystem::path& base_dir);

// Statistics ----------------------------------------------------------------

struct CorpusStats {
  std::size_t track_count = 0;
  std::optional<double> duration_mean_s;
  std::optional<double> duration_median_s;
  std::optional<double> aspects_per_track_mean;
  std::optional<double> aspects_per_track_median;
  std::optional<double> sentences_per_track_mean;
  std::optional<double> sentences_per_track_median;
  std::size_t vocabulary_size = 0;
  std::vector<std::pair<std::string, std::size_t>> top_aspects;
};

/// Lowercased whitespace tokens with punctuation stripped at token edges.
std::vector<std::string> vocabulary_tokens(std::string_view text);

/// Arithmetic mean of the two central order statistics for even sizes.
std::optional<double> median(std::vector<double> values);
std::optional<double> mean(const std::vector<double>& values);

using DurationFn = std::function<std::optional<double>(const CorpusRecord&)>;

/// Throws std::invalid_argument when a mined key is not in the corpus.
/// Durations are reported only when `duration_of` yields values.
CorpusStats compute_stats(const Corpus& corpus, const MinedMap& mined,
                          const DurationFn& duration_of = {},
                          std::size_t top_n = 10);

nlohmann::json stats_to_json(const CorpusStats& stats);

}  // namespace tunetext::corpus
