#pragma once

// NT-Xent objective, batch construction (text sampling, random crops) and
// the training loop with plateau learning-rate decay, early stopping and
// reversion to the best checkpoint.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunetext/audio.hpp"
#include "tunetext/encoders.hpp"
#include "tunetext/mined.hpp"
#include "tunetext/nn.hpp"

namespace tunetext::contrastive {

/// s(i, j): similarity between audio i and text j, row-major.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

enum class LossDirection { kAudioToText, kSymmetric };

struct LossConfig {
  double temperature = 0.07;
  LossDirection direction = LossDirection::kAudioToText;
};

/// Mean over anchors of -log softmax(s_i / tau)_i. Rows are audio anchors;
/// symmetric mode averages the row and column forms. Throws
/// std::invalid_argument for non-square input or tau <= 0.
double nt_xent_loss(const SimilarityMatrix& s, const LossConfig& cfg);

struct LossAndGrad {
  double loss = 0.0;
  SimilarityMatrix grad;  // dLoss / ds
};

LossAndGrad nt_xent_loss_and_grad(const SimilarityMatrix& s, const LossConfig& cfg);

struct BatchSpec {
  std::size_t batch_size = 64;
  std::size_t max_aspects_per_text = 5;
  std::string aspect_join_delimiter = ", ";
  std::string sentence_join_delimiter = " ";
};

enum class SentenceMode { kRandomSubset, kConsecutivePrefix };

struct SentenceSampleRule {
  SentenceMode mode = SentenceMode::kRandomSubset;
};

/// Coin flip between aspects and sentences when both exist. Aspects: up to
/// max_aspects_per_text drawn without replacement and joined. Sentences:
/// the same draw (random subset) or the first n of S with n uniform in
/// [1, S] (consecutive prefix). Throws std::invalid_argument when the
/// description is empty.
std::string sample_text(const MinedDescription& desc, const SentenceSampleRule& rule,
                        const BatchSpec& spec, nn::Rng& rng);

/// Uniformly placed window of exactly `length_s` seconds; shorter clips are
/// zero-padded at the end.
AudioClip crop_audio(const AudioClip& clip, double length_s, nn::Rng& rng);

struct TrainSchedule {
  double initial_lr = 1e-4;
  double lr_decay_factor = 10.0;
  std::size_t lr_patience_epochs = 5;
  std::size_t early_stop_patience_epochs = 10;
  std::size_t max_epochs = 200;

  void validate() const;
};

/// Epoch-level controller: strict improvement resets both counters; the LR
/// is divided after lr_patience non-improving epochs (counter then resets);
/// training stops after early_stop_patience non-improving epochs.
class PlateauController {
 public:
  explicit PlateauController(const TrainSchedule& schedule);

  struct Decision {
    bool improved = false;
    bool lr_decayed = false;
    bool stop = false;
  };

  Decision observe(double score);

  double learning_rate() const { return lr_; }
  std::size_t epoch() const { return epoch_; }
  std::optional<std::size_t> best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }

 private:
  TrainSchedule schedule_;
  double lr_;
  std::size_t epoch_ = 0;
  std::optional<std::size_t> best_epoch_;
  double best_score_ = -INFINITY;
  std::size_t since_best_ = 0;
  std::size_t since_lr_change_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_map10 = 0.0;
  double lr = 0.0;  // learning rate used during this epoch
  bool improved = false;
  bool lr_decayed = false;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;
  double best_score = 0.0;
  bool early_stopped = false;
};

void save_history(const std::filesystem::path& path, const TrainingHistory& history);

struct TrainingItem {
  std::string track_id;
  AudioClip audio;
  MinedDescription description;
};

struct TrainOptions {
  BatchSpec batch;
  LossConfig loss;
  TrainSchedule schedule;
  SentenceSampleRule sentences;
  std::uint64_t seed = 0;
};

/// Scores a model snapshot on validation data (mAP@10 in the pipeline).
using Validator = std::function<double(const encoders::TowerModel&)>;

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, TrainingHistory partial)
      : std::runtime_error(what), history_(std::move(partial)) {}
  const TrainingHistory& history() const { return history_; }

 private:
  TrainingHistory history_;
};

struct TrainResult {
  encoders::TowerModel model;
  TrainingHistory history;
};

/// Batch loss over paired features and token ids; fills parameter
/// gradients of `model` (which are zeroed first).
double batch_loss_and_gradients(encoders::TowerModel& model,
                                const std::vector<encoders::FeatureSequence>& audio,
                                const std::vector<std::vector<std::size_t>>& texts,
                                const LossConfig& cfg,
                                SimilarityMatrix* grad_out = nullptr);

/// Trains until early stopping or max_epochs and returns the weights of the
/// best-scoring epoch. Validation failures throw TrainingAborted carrying
/// the history so far.
TrainResult train(encoders::TowerModel model, const std::vector<TrainingItem>& train_set,
                  const Validator& validator, const TrainOptions& options);

}  // namespace tunetext::contrastive
