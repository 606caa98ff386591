#include "tunetext/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "tunetext/json_lines.hpp"
#include "tunetext/relevance.hpp"

namespace tunetext::eval {

using encoders::Embedding;

std::vector<EvalItem> load_manifest(const std::filesystem::path& path) {
  std::vector<EvalItem> items;
  std::set<std::string> seen;
  for_each_json_line(path, [&](const nlohmann::json& j, std::size_t line) {
    EvalItem it;
    it.track_id = j.at("track_id").get<std::string>();
    it.audio_ref = j.at("audio_ref").get<std::string>();
    if (it.track_id.empty()) throw ParseError(path, line, "empty track_id");
    if (j.contains("labels")) it.labels = j.at("labels").get<std::vector<std::string>>();
    if (j.contains("single_label") && !j.at("single_label").is_null()) {
      it.single_label = j.at("single_label").get<std::string>();
    }
    if (!seen.insert(it.track_id).second) {
      throw ParseError(path, line, "duplicate track_id '" + it.track_id + "'");
    }
    items.push_back(std::move(it));
  });
  return items;
}

void save_manifest(const std::filesystem::path& path, const std::vector<EvalItem>& items) {
  std::vector<nlohmann::json> rows;
  for (const auto& it : items) {
    nlohmann::json j{{"track_id", it.track_id}, {"audio_ref", it.audio_ref}, {"labels", it.labels}};
    if (it.single_label) j["single_label"] = *it.single_label;
    rows.push_back(std::move(j));
  }
  write_json_lines(path, rows);
}

std::filesystem::path resolve_ref(const std::filesystem::path& base, const std::string& ref) {
  std::filesystem::path p(ref);
  return p.is_absolute() ? p : base / p;
}

namespace {

Embedding block_mean(const std::vector<Embedding>& blocks) {
  if (blocks.size() == 1) return blocks.front();
  std::vector<double> sum(blocks.front().size(), 0.0);
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += b.values[i];
  }
  for (auto& v : sum) v /= static_cast<double>(blocks.size());
  return encoders::normalized(std::move(sum));
}

}  // namespace

Embedding embed_clip(const encoders::EmbeddingModel& model, const AudioClip& clip) {
  return block_mean(relevance::embed_blocks(model, clip));
}

std::vector<Embedding> embed_collection(const encoders::EmbeddingModel& model,
                                        const std::vector<AudioClip>& clips) {
  if (clips.empty()) throw std::invalid_argument("cannot embed an empty collection");
  std::vector<Embedding> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(embed_clip(model, c));
  return out;
}

QueryRelevanceIndex QueryRelevanceIndex::from_labels(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& tracks) {
  QueryRelevanceIndex idx;
  for (const auto& [id, labels] : tracks) {
    for (const auto& l : labels) {
      if (!l.empty()) idx.add(l, id);
    }
  }
  return idx;
}

QueryRelevanceIndex QueryRelevanceIndex::from_items(const std::vector<EvalItem>& items) {
  std::vector<std::pair<std::string, std::vector<std::string>>> tracks;
  for (const auto& it : items) tracks.emplace_back(it.track_id, it.labels);
  return from_labels(tracks);
}

void QueryRelevanceIndex::add(const std::string& query, const std::string& track_id) {
  queries_[query].insert(track_id);
}

std::vector<ScoredTrack> rank_tracks(const std::vector<std::string>& track_ids,
                                     const std::vector<Embedding>& audio,
                                     const Embedding& query) {
  if (track_ids.size() != audio.size()) {
    throw std::invalid_argument("track id and embedding counts differ");
  }
  std::vector<ScoredTrack> out;
  out.reserve(track_ids.size());
  for (std::size_t i = 0; i < track_ids.size(); ++i) {
    out.push_back({track_ids[i], encoders::similarity(audio[i], query)});
  }
  std::sort(out.begin(), out.end(), [](const ScoredTrack& a, const ScoredTrack& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.track_id < b.track_id;
  });
  return out;
}

namespace {

void check_ranking_args(const std::set<std::string>& relevant, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (relevant.empty()) throw std::invalid_argument("relevant set is empty");
}

}  // namespace

double recall_at_k(const std::vector<std::string>& ranking,
                   const std::set<std::string>& relevant, std::size_t k) {
  check_ranking_args(relevant, k);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
    if (relevant.count(ranking[r])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double average_precision_at_k(const std::vector<std::string>& ranking,
                              const std::set<std::string>& relevant, std::size_t k) {
  check_ranking_args(relevant, k);
  // extended precision so the result is the double nearest the exact
  // rational (e.g. 5/6, not one ulp below it)
  std::size_t hits = 0;
  long double sum = 0.0L;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
    if (relevant.count(ranking[r])) {
      ++hits;
      sum += static_cast<long double>(hits) / static_cast<long double>(r + 1);
    }
  }
  return static_cast<double>(sum / static_cast<long double>(std::min(relevant.size(), k)));
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * fraction);
  return buf;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json percent = nlohmann::json::object();
  for (const auto& [name, v] : values) {
    metrics[name] = v;
    percent[name] = format_percent(v);
  }
  nlohmann::json j{{"metrics", metrics}, {"percent", percent}, {"run", run}};
  if (query_count > 0) j["query_count"] = query_count;
  if (!skipped.empty()) j["skipped_labels"] = skipped;
  return j;
}

EmbeddedCollection embed_items(const encoders::EmbeddingModel& model,
                               const std::vector<std::string>& track_ids,
                               const std::vector<AudioClip>& clips) {
  if (track_ids.size() != clips.size()) {
    throw std::invalid_argument("track id and clip counts differ");
  }
  return {track_ids, embed_collection(model, clips)};
}

namespace {

// Relevant sets restricted to tracks present in the collection.
std::vector<std::pair<std::string, std::set<std::string>>> usable_queries(
    const EmbeddedCollection& collection, const QueryRelevanceIndex& index) {
  const std::set<std::string> present(collection.track_ids.begin(), collection.track_ids.end());
  if (present.size() != collection.track_ids.size()) {
    throw std::invalid_argument("collection contains duplicate track ids");
  }
  std::vector<std::pair<std::string, std::set<std::string>>> out;
  for (const auto& [q, rel] : index.queries()) {
    std::set<std::string> kept;
    for (const auto& id : rel) {
      if (present.count(id)) kept.insert(id);
    }
    if (!kept.empty()) out.emplace_back(q, std::move(kept));
  }
  return out;
}

std::vector<std::string> ids_of(const std::vector<ScoredTrack>& ranked) {
  std::vector<std::string> ids;
  ids.reserve(ranked.size());
  for (const auto& s : ranked) ids.push_back(s.track_id);
  return ids;
}

}  // namespace

MetricsReport evaluate_retrieval(const encoders::EmbeddingModel& model,
                                 const EmbeddedCollection& collection,
                                 const QueryRelevanceIndex& index,
                                 const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw std::invalid_argument("at least one cutoff k is required");
  for (auto k : ks) {
    if (k == 0) throw std::invalid_argument("k must be >= 1");
  }
  const auto queries = usable_queries(collection, index);
  if (queries.empty()) throw std::invalid_argument("no usable retrieval queries");

  std::vector<double> map_sum(ks.size(), 0.0), recall_sum(ks.size(), 0.0);
  for (const auto& [q, relevant] : queries) {
    const auto ranking =
        ids_of(rank_tracks(collection.track_ids, collection.audio, model.embed_text(q)));
    for (std::size_t i = 0; i < ks.size(); ++i) {
      map_sum[i] += average_precision_at_k(ranking, relevant, ks[i]);
      recall_sum[i] += recall_at_k(ranking, relevant, ks[i]);
    }
  }
  MetricsReport report;
  report.query_count = queries.size();
  const double n = static_cast<double>(queries.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::string k = std::to_string(ks[i]);
    report.values["mAP@" + k] = map_sum[i] / n;
    report.values["R@" + k] = recall_sum[i] / n;
  }
  report.run["ks"] = ks;
  return report;
}

std::vector<RankedResult> retrieve(const encoders::EmbeddingModel& model,
                                   const EmbeddedCollection& collection,
                                   const QueryRelevanceIndex& index, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  std::vector<RankedResult> out;
  for (const auto& [q, relevant] : usable_queries(collection, index)) {
    auto ranking =
        ids_of(rank_tracks(collection.track_ids, collection.audio, model.embed_text(q)));
    if (ranking.size() > k) ranking.resize(k);
    out.push_back({q, std::move(ranking), k});
  }
  return out;
}

RetrievalValidator::RetrievalValidator(const encoders::TowerModel& reference,
                                       std::vector<std::string> track_ids,
                                       const std::vector<AudioClip>& clips,
                                       QueryRelevanceIndex index, std::size_t k)
    : track_ids_(std::move(track_ids)), index_(std::move(index)), k_(k) {
  if (track_ids_.size() != clips.size()) {
    throw std::invalid_argument("track id and clip counts differ");
  }
  if (clips.empty()) throw std::invalid_argument("validation collection is empty");
  for (const auto& c : clips) {
    std::vector<encoders::FeatureSequence> feats;
    for (const auto& block : relevance::segment_audio(c, reference.input_seconds())) {
      feats.push_back(reference.featurize(block));
    }
    blocks_.push_back(std::move(feats));
  }
}

double RetrievalValidator::operator()(const encoders::TowerModel& model) const {
  EmbeddedCollection collection;
  collection.track_ids = track_ids_;
  for (const auto& feats : blocks_) {
    std::vector<Embedding> embs;
    for (const auto& f : feats) embs.push_back(model.forward_audio(f).embedding);
    collection.audio.push_back(block_mean(embs));
  }
  const auto report = evaluate_retrieval(model, collection, index_, {k_});
  return report.values.at("mAP@" + std::to_string(k_));
}

std::vector<double> TagPredictionMatrix::score_column(std::size_t j) const {
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = score(i, j);
  return out;
}

std::vector<int> TagPredictionMatrix::truth_column(std::size_t j) const {
  std::vector<int> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = truth_at(i, j);
  return out;
}

TagPredictionMatrix zero_shot_scores(const encoders::EmbeddingModel& model,
                                     const std::vector<Embedding>& audio,
                                     const std::vector<std::string>& labels) {
  if (labels.empty()) throw std::invalid_argument("label list is empty");
  std::vector<Embedding> text;
  for (const auto& l : labels) {
    if (l.empty()) throw std::invalid_argument("empty label string");
    text.push_back(model.embed_text(l));
  }
  TagPredictionMatrix m;
  m.rows = audio.size();
  m.cols = labels.size();
  m.labels = labels;
  m.scores.resize(m.rows * m.cols);
  m.truth.assign(m.rows * m.cols, 0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      m.scores[i * m.cols + j] = encoders::similarity(audio[i], text[j]);
    }
  }
  return m;
}

void set_truth(TagPredictionMatrix& m, const std::vector<std::vector<std::string>>& labels) {
  if (labels.size() != m.rows) throw std::invalid_argument("truth row count mismatch");
  std::fill(m.truth.begin(), m.truth.end(), 0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (const auto& l : labels[i]) {
      auto it = std::find(m.labels.begin(), m.labels.end(), l);
      if (it != m.labels.end()) {
        m.truth[i * m.cols + static_cast<std::size_t>(it - m.labels.begin())] = 1;
      }
    }
  }
}

namespace {

std::pair<std::size_t, std::size_t> class_counts(const std::vector<double>& scores,
                                                 const std::vector<int>& truth) {
  if (scores.size() != truth.size()) throw std::invalid_argument("score/truth size mismatch");
  std::size_t pos = 0;
  for (int t : truth) {
    if (t != 0 && t != 1) throw std::invalid_argument("truth entries must be 0 or 1");
    pos += static_cast<std::size_t>(t);
  }
  const std::size_t neg = truth.size() - pos;
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("ranking metric needs both positive and negative examples");
  }
  return {pos, neg};
}

std::vector<std::size_t> by_descending_score(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<int>& truth) {
  const auto [pos, neg] = class_counts(scores, truth);
  // Walk groups of tied scores from the top; each positive in a group beats
  // every negative below it and ties half of the negatives in its group.
  const auto order = by_descending_score(scores);
  double concordant = 0.0;
  std::size_t neg_below = neg;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t gp = 0, gn = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (truth[order[j]] ? gp : gn)++;
      ++j;
    }
    neg_below -= gn;
    concordant += static_cast<double>(gp) * (static_cast<double>(neg_below) + 0.5 * gn);
    i = j;
  }
  return concordant / (static_cast<double>(pos) * static_cast<double>(neg));
}

double pr_auc(const std::vector<double>& scores, const std::vector<int>& truth) {
  const auto [pos, neg] = class_counts(scores, truth);
  (void)neg;
  const auto order = by_descending_score(scores);
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t gp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      gp += static_cast<std::size_t>(truth[order[j]]);
      ++j;
    }
    tp += gp;
    seen += j - i;
    if (gp > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(gp) / static_cast<double>(pos);
    }
    i = j;
  }
  return ap;
}

double accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("prediction/truth size mismatch");
  if (predicted.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<std::size_t> argmax_rows(const TagPredictionMatrix& m) {
  if (m.cols == 0) throw std::invalid_argument("matrix has no labels");
  std::vector<std::size_t> out(m.rows, 0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 1; j < m.cols; ++j) {
      if (m.score(i, j) > m.score(i, out[i])) out[i] = j;
    }
  }
  return out;
}

TaggingMetrics evaluate_tagging(const TagPredictionMatrix& m) {
  TaggingMetrics out;
  double roc = 0.0, pr = 0.0;
  for (std::size_t j = 0; j < m.cols; ++j) {
    const auto s = m.score_column(j);
    const auto t = m.truth_column(j);
    const auto positives = std::count(t.begin(), t.end(), 1);
    if (positives == 0 || positives == static_cast<long>(t.size())) {
      spdlog::warn("tagging: label '{}' has a single class and is skipped", m.labels[j]);
      out.skipped.push_back(m.labels[j]);
      continue;
    }
    roc += roc_auc(s, t);
    pr += pr_auc(s, t);
    out.used.push_back(m.labels[j]);
  }
  if (out.used.empty()) throw std::invalid_argument("every label has a single class");
  out.roc_auc = roc / static_cast<double>(out.used.size());
  out.pr_auc = pr / static_cast<double>(out.used.size());
  return out;
}

}  // namespace tunetext::eval
