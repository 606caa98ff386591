#pragma once

// Tag-based retrieval evaluation, zero-shot tagging and classification, and
// the ranking metrics behind them.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunetext/audio.hpp"
#include "tunetext/encoders.hpp"

namespace tunetext::eval {

/// One line of an evaluation manifest.
struct EvalItem {
  std::string track_id;
  std::string audio_ref;
  std::vector<std::string> labels;
  std::optional<std::string> single_label;

  bool operator==(const EvalItem&) const = default;
};

/// Reads a JSON Lines manifest. Duplicate track ids are a ParseError.
std::vector<EvalItem> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<EvalItem>& items);

/// Resolves audio_ref against `base` when relative.
std::filesystem::path resolve_ref(const std::filesystem::path& base, const std::string& ref);

/// Clips up to one input length are padded and embedded once; longer clips
/// are cut into blocks whose embeddings are averaged and re-normalised.
encoders::Embedding embed_clip(const encoders::EmbeddingModel& model, const AudioClip& clip);

/// Throws std::invalid_argument for an empty collection.
std::vector<encoders::Embedding> embed_collection(const encoders::EmbeddingModel& model,
                                                  const std::vector<AudioClip>& clips);

/// query string -> tracks carrying that exact label (case-sensitive).
class QueryRelevanceIndex {
 public:
  QueryRelevanceIndex() = default;

  /// Builds from (track_id, labels) pairs; queries come out sorted.
  static QueryRelevanceIndex from_labels(
      const std::vector<std::pair<std::string, std::vector<std::string>>>& tracks);
  static QueryRelevanceIndex from_items(const std::vector<EvalItem>& items);

  /// Adds one relevance judgement.
  void add(const std::string& query, const std::string& track_id);

  const std::map<std::string, std::set<std::string>>& queries() const { return queries_; }
  std::size_t size() const { return queries_.size(); }
  bool empty() const { return queries_.empty(); }

 private:
  std::map<std::string, std::set<std::string>> queries_;
};

struct ScoredTrack {
  std::string track_id;
  double score = 0.0;
};

/// Every track ordered by descending score, ties by ascending track_id.
std::vector<ScoredTrack> rank_tracks(const std::vector<std::string>& track_ids,
                                     const std::vector<encoders::Embedding>& audio,
                                     const encoders::Embedding& query);

struct RankedResult {
  std::string query;
  std::vector<std::string> ranking;
  std::size_t k = 0;
};

/// |relevant in top k| / |relevant|. Requires k >= 1 and a non-empty
/// relevant set.
double recall_at_k(const std::vector<std::string>& ranking,
                   const std::set<std::string>& relevant, std::size_t k);

/// Sum of precision@r over relevant positions r <= k, divided by
/// min(|relevant|, k).
double average_precision_at_k(const std::vector<std::string>& ranking,
                              const std::set<std::string>& relevant, std::size_t k);

struct MetricsReport {
  std::map<std::string, double> values;  // e.g. "mAP@10", "R@1", "ROC-AUC"
  nlohmann::json run;                    // model, dataset, seed, ks, ...
  std::vector<std::string> skipped;      // labels excluded from macro averages
  std::size_t query_count = 0;

  /// Values as fractions plus a "percent" block rendered with one decimal.
  nlohmann::json to_json() const;
};

std::string format_percent(double fraction);

/// Audio side of a retrieval evaluation, already embedded.
struct EmbeddedCollection {
  std::vector<std::string> track_ids;
  std::vector<encoders::Embedding> audio;
};

EmbeddedCollection embed_items(const encoders::EmbeddingModel& model,
                               const std::vector<std::string>& track_ids,
                               const std::vector<AudioClip>& clips);

/// Macro-averaged mAP@k and R@k over every query of `index`. Queries whose
/// relevant tracks are missing from the collection are restricted to the
/// present ones, and dropped when none remain. Throws std::invalid_argument
/// when no query is usable.
MetricsReport evaluate_retrieval(const encoders::EmbeddingModel& model,
                                 const EmbeddedCollection& collection,
                                 const QueryRelevanceIndex& index,
                                 const std::vector<std::size_t>& ks = {1, 5, 10});

/// Per-query rankings cut at k, in query order.
std::vector<RankedResult> retrieve(const encoders::EmbeddingModel& model,
                                   const EmbeddedCollection& collection,
                                   const QueryRelevanceIndex& index, std::size_t k);

/// mAP@10 of a tower model over fixed clips; features are computed once and
/// reused across calls. Produces the same number as evaluate_retrieval.
class RetrievalValidator {
 public:
  RetrievalValidator(const encoders::TowerModel& reference, std::vector<std::string> track_ids,
                     const std::vector<AudioClip>& clips, QueryRelevanceIndex index,
                     std::size_t k = 10);

  double operator()(const encoders::TowerModel& model) const;

 private:
  std::vector<std::string> track_ids_;
  std::vector<std::vector<encoders::FeatureSequence>> blocks_;
  QueryRelevanceIndex index_;
  std::size_t k_;
};

struct TagPredictionMatrix {
  std::size_t rows = 0;  // tracks
  std::size_t cols = 0;  // labels
  std::vector<std::string> labels;
  std::vector<double> scores;
  std::vector<int> truth;

  double score(std::size_t i, std::size_t j) const { return scores[i * cols + j]; }
  int truth_at(std::size_t i, std::size_t j) const { return truth[i * cols + j]; }
  std::vector<double> score_column(std::size_t j) const;
  std::vector<int> truth_column(std::size_t j) const;
};

/// scores[i][j] = similarity(audio_i, embed_text(labels[j])); labels are
/// used verbatim. Truth is left zero. Throws for an empty label list or an
/// empty label.
TagPredictionMatrix zero_shot_scores(const encoders::EmbeddingModel& model,
                                     const std::vector<encoders::Embedding>& audio,
                                     const std::vector<std::string>& labels);

/// Fills truth from per-track label lists.
void set_truth(TagPredictionMatrix& m, const std::vector<std::vector<std::string>>& labels);

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Throws std::invalid_argument on a single-class column.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& truth);

/// Average precision over distinct score thresholds. Same preconditions.
double pr_auc(const std::vector<double>& scores, const std::vector<int>& truth);

/// Fraction of positions where predicted == truth. Throws on size mismatch
/// or empty input.
double accuracy(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth);

/// Row-wise argmax; the lowest column wins ties.
std::vector<std::size_t> argmax_rows(const TagPredictionMatrix& m);

struct TaggingMetrics {
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  std::vector<std::string> used;
  std::vector<std::string> skipped;
};

/// Macro averages over labels; single-class labels are skipped with a
/// warning. Throws std::invalid_argument when every label is skipped.
TaggingMetrics evaluate_tagging(const TagPredictionMatrix& m);

}  // namespace tunetext::eval
