#include "tunetext/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "tunetext/audio.hpp"
#include "tunetext/json_lines.hpp"

namespace tunetext::corpus {

using nlohmann::json;

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> string_list(const json& doc, const char* key) {
  if (!doc.contains(key)) return {};
  const auto& v = doc.at(key);
  if (!v.is_array()) throw std::invalid_argument(std::string("'") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& s : v) out.push_back(s.get<std::string>());
  return out;
}

std::string optional_string(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return {};
  return doc.at(key).get<std::string>();
}

std::vector<Section> sections_from_json(const json& doc) {
  std::vector<Section> out;
  if (!doc.contains("sections")) return out;
  const auto& arr = doc.at("sections");
  if (!arr.is_array()) throw std::invalid_argument("'sections' must be a list");
  for (const auto& s : arr) {
    if (s.is_array() && s.size() == 2) {
      out.push_back({s[0].get<std::string>(), s[1].get<std::string>()});
    } else {
      out.push_back({s.at("section_title").get<std::string>(),
                     s.at("section_text").get<std::string>()});
    }
  }
  return out;
}

Metadata metadata_from_json(const json& doc) {
  Metadata m;
  if (!doc.contains("metadata") || doc.at("metadata").is_null()) return m;
  const auto& md = doc.at("metadata");
  m.genres = string_list(md, "genres");
  m.instruments = string_list(md, "instruments");
  return m;
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  throw std::invalid_argument("split must be one of train/valid/test, got '" +
                              std::string(s) + "'");
}

const CorpusRecord* Corpus::find(std::string_view track_id) const {
  for (const auto& r : records) {
    if (r.track_id == track_id) return &r;
  }
  return nullptr;
}

std::vector<const CorpusRecord*> Corpus::in_split(Split split) const {
  std::vector<const CorpusRecord*> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(&r);
  }
  return out;
}

SectionExclusionList::SectionExclusionList(const std::vector<std::string>& titles) {
  for (const auto& t : titles) lowered_.insert(ascii_lower(t));
}

SectionExclusionList SectionExclusionList::defaults() {
  return SectionExclusionList(
      {"Music video", "Chart performance", "Covers", "Remixes"});
}

bool SectionExclusionList::excludes(std::string_view title) const {
  return lowered_.contains(ascii_lower(title));
}

DuplicateTrackIdError::DuplicateTrackIdError(std::vector<std::string> offenders)
    : std::runtime_error([&] {
        std::string msg = "duplicate track_id(s):";
        for (const auto& o : offenders) msg += " " + o;
        return msg;
      }()),
      offenders_(std::move(offenders)) {}

Split default_split(std::string_view track_id) {
  const auto bucket = fnv1a(track_id) % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kValid : Split::kTest;
}

IngestResult ingest_records(const std::vector<RawRecord>& raw,
                            const SectionExclusionList& exclusions,
                            std::string corpus_name) {
  std::map<std::string, int> seen;
  for (const auto& r : raw) {
    if (!r.track_id.empty()) ++seen[r.track_id];
  }
  std::vector<std::string> offenders;
  for (const auto& [id, n] : seen) {
    if (n > 1) offenders.push_back(id);
  }
  if (!offenders.empty()) throw DuplicateTrackIdError(std::move(offenders));

  IngestResult result;
  result.corpus.name = std::move(corpus_name);
  result.corpus.created_at = std::chrono::system_clock::now();
  for (const auto& r : raw) {
    if (r.track_id.empty()) {
      result.drops.push_back({"", "missing track_id"});
      continue;
    }
    if (!r.audio_ref || r.audio_ref->empty()) {
      result.drops.push_back({r.track_id, "missing audio_ref"});
      continue;
    }
    if (!r.music_category) {
      result.drops.push_back({r.track_id, "not in a music category"});
      continue;
    }
    CorpusRecord rec;
    rec.track_id = r.track_id;
    rec.audio_ref = *r.audio_ref;
    rec.caption = r.caption;
    rec.file_description = r.file_description;
    rec.metadata = r.metadata;
    rec.split = r.split.value_or(default_split(r.track_id));
    for (const auto& s : r.sections) {
      if (!exclusions.excludes(s.section_title)) rec.sections.push_back(s);
    }
    result.corpus.records.push_back(std::move(rec));
  }
  for (const auto& d : result.drops) {
    spdlog::info("dropped record '{}': {}", d.track_id, d.reason);
  }
  return result;
}

RawRecord to_raw(const CorpusRecord& record) {
  RawRecord r;
  r.track_id = record.track_id;
  r.audio_ref = record.audio_ref;
  r.caption = record.caption;
  r.file_description = record.file_description;
  r.sections = record.sections;
  r.metadata = record.metadata;
  r.split = record.split;
  return r;
}

std::vector<std::string> extract_metadata_aspects(const CorpusRecord& record) {
  std::vector<std::string> out;
  auto add = [&](const std::string& s) {
    if (s.empty()) return;
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  for (const auto& g : record.metadata.genres) add(g);
  for (const auto& i : record.metadata.instruments) add(i);
  return out;
}

void write_drop_log(const std::filesystem::path& path,
                    const std::vector<DropEntry>& drops) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  for (const auto& d : drops) out << d.track_id << '\t' << d.reason << '\n';
}

json record_to_json(const CorpusRecord& record) {
  json sections = json::array();
  for (const auto& s : record.sections) {
    sections.push_back(
        {{"section_title", s.section_title}, {"section_text", s.section_text}});
  }
  json doc{{"track_id", record.track_id},
           {"audio_ref", record.audio_ref},
           {"caption", record.caption}};
  if (!record.file_description.empty()) {
    doc["file_description"] = record.file_description;
  }
  doc["sections"] = std::move(sections);
  doc["metadata"] = {{"genres", record.metadata.genres},
                     {"instruments", record.metadata.instruments}};
  doc["split"] = to_string(record.split);
  return doc;
}

CorpusRecord record_from_json(const json& doc) {
  if (!doc.contains("track_id") || !doc.at("track_id").is_string() ||
      doc.at("track_id").get<std::string>().empty()) {
    throw std::invalid_argument("missing track_id");
  }
  if (!doc.contains("audio_ref") || !doc.at("audio_ref").is_string()) {
    throw std::invalid_argument("missing audio_ref");
  }
  if (!doc.contains("split") || !doc.at("split").is_string()) {
    throw std::invalid_argument("missing split");
  }
  CorpusRecord rec;
  rec.track_id = doc.at("track_id").get<std::string>();
  rec.audio_ref = doc.at("audio_ref").get<std::string>();
  rec.caption = optional_string(doc, "caption");
  rec.file_description = optional_string(doc, "file_description");
  rec.sections = sections_from_json(doc);
  rec.metadata = metadata_from_json(doc);
  rec.split = split_from_string(doc.at("split").get<std::string>());
  return rec;
}

RawRecord raw_record_from_json(const json& doc) {
  RawRecord r;
  r.track_id = optional_string(doc, "track_id");
  if (doc.contains("audio_ref") && doc.at("audio_ref").is_string()) {
    r.audio_ref = doc.at("audio_ref").get<std::string>();
  }
  r.caption = optional_string(doc, "caption");
  r.file_description = optional_string(doc, "file_description");
  r.sections = sections_from_json(doc);
  r.metadata = metadata_from_json(doc);
  if (doc.contains("split") && doc.at("split").is_string()) {
    r.split = split_from_string(doc.at("split").get<std::string>());
  }
  if (doc.contains("music_category")) r.music_category = doc.at("music_category").get<bool>();
  return r;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::vector<json> rows;
  rows.reserve(corpus.records.size());
  for (const auto& r : corpus.records) rows.push_back(record_to_json(r));
  write_json_lines(path, rows);
}

Corpus load_corpus(const std::filesystem::path& path) {
  Corpus corpus;
  corpus.name = path.stem().string();
  std::error_code ec;
  const auto mtime = std::filesystem::last_write_time(path, ec);
  if (!ec) {
    corpus.created_at = std::chrono::time_point_cast<std::chrono::system_clock::duration>(
        std::chrono::file_clock::to_sys(mtime));
  }
  std::set<std::string> ids;
  for_each_json_line(path, [&](const json& doc, std::size_t line) {
    CorpusRecord rec = record_from_json(doc);
    if (!ids.insert(rec.track_id).second) {
      throw ParseError(path, line, "duplicate track_id '" + rec.track_id + "'");
    }
    corpus.records.push_back(std::move(rec));
  });
  return corpus;
}

std::vector<RawRecord> load_raw_records(const std::filesystem::path& path) {
  std::vector<RawRecord> out;
  for_each_json_line(path, [&](const json& doc, std::size_t) {
    out.push_back(raw_record_from_json(doc));
  });
  return out;
}

std::filesystem::path resolve_audio(const std::filesystem::path& base_dir,
                                    const std::string& audio_ref) {
  std::filesystem::path p(audio_ref);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<DropEntry> validate_audio(const Corpus& corpus,
                                      const std::filesystem::path& base_dir) {
  std::vector<DropEntry> problems;
  for (const auto& r : corpus.records) {
    try {
      (void)wav_duration_s(resolve_audio(base_dir, r.audio_ref));
    } catch (const std::exception& e) {
      problems.push_back({r.track_id, e.what()});
    }
  }
  return problems;
}

std::vector<std::string> vocabulary_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i;
    std::size_t e = j;
    while (b < e && std::ispunct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (e > b) out.push_back(ascii_lower(text.substr(b, e - b)));
    i = j;
  }
  return out;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::optional<double> mean(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

CorpusStats compute_stats(const Corpus& corpus, const MinedMap& mined,
                          const DurationFn& duration_of, std::size_t top_n) {
  for (const auto& [id, _] : mined) {
    if (corpus.find(id) == nullptr) {
      throw std::invalid_argument("mined track_id '" + id + "' is not in the corpus");
    }
  }
  CorpusStats stats;
  stats.track_count = corpus.records.size();

  std::vector<double> durations;
  std::vector<double> aspect_counts;
  std::vector<double> sentence_counts;
  std::set<std::string> vocab;
  std::map<std::string, std::size_t> aspect_freq;
  for (const auto& r : corpus.records) {
    if (duration_of) {
      if (auto d = duration_of(r)) durations.push_back(*d);
    }
    const auto it = mined.find(r.track_id);
    if (it == mined.end()) {
      aspect_counts.push_back(0);
      sentence_counts.push_back(0);
      continue;
    }
    const auto& desc = it->second;
    aspect_counts.push_back(static_cast<double>(desc.aspects.size()));
    sentence_counts.push_back(static_cast<double>(desc.sentences.size()));
    for (const auto& a : desc.aspects) {
      ++aspect_freq[a.text];
      for (auto& t : vocabulary_tokens(a.text)) vocab.insert(std::move(t));
    }
    for (const auto& s : desc.sentences) {
      for (auto& t : vocabulary_tokens(s.text)) vocab.insert(std::move(t));
    }
  }
  stats.duration_mean_s = mean(durations);
  stats.duration_median_s = median(durations);
  stats.aspects_per_track_mean = mean(aspect_counts);
  stats.aspects_per_track_median = median(aspect_counts);
  stats.sentences_per_track_mean = mean(sentence_counts);
  stats.sentences_per_track_median = median(sentence_counts);
  stats.vocabulary_size = vocab.size();

  stats.top_aspects.assign(aspect_freq.begin(), aspect_freq.end());
  std::stable_sort(stats.top_aspects.begin(), stats.top_aspects.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  if (stats.top_aspects.size() > top_n) stats.top_aspects.resize(top_n);
  return stats;
}

json stats_to_json(const CorpusStats& stats) {
  auto opt = [](const std::optional<double>& v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  json top = json::array();
  for (const auto& [aspect, count] : stats.top_aspects) {
    top.push_back({{"aspect", aspect}, {"count", count}});
  }
  return json{{"track_count", stats.track_count},
              {"duration_mean_s", opt(stats.duration_mean_s)},
              {"duration_median_s", opt(stats.duration_median_s)},
              {"aspects_per_track_mean", opt(stats.aspects_per_track_mean)},
              {"aspects_per_track_median", opt(stats.aspects_per_track_median)},
              {"sentences_per_track_mean", opt(stats.sentences_per_track_mean)},
              {"sentences_per_track_median", opt(stats.sentences_per_track_median)},
              {"vocabulary_size", stats.vocabulary_size},
              {"top_aspects", top}};
}

}  // namespace tunetext::corpus
