#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "tunetext/contrastive.hpp"
#include "tunetext/json_lines.hpp"
#include "tunetext/kernels.hpp"

namespace tunetext::contrastive {

void TrainSchedule::validate() const {
  if (!(initial_lr > 0.0)) throw std::invalid_argument("initial_lr must be positive");
  if (!(lr_decay_factor > 1.0)) throw std::invalid_argument("lr_decay_factor must be > 1");
  if (lr_patience_epochs == 0 || early_stop_patience_epochs == 0) {
    throw std::invalid_argument("patience values must be positive");
  }
  if (max_epochs == 0) throw std::invalid_argument("max_epochs must be positive");
}

PlateauController::PlateauController(const TrainSchedule& schedule)
    : schedule_(schedule), lr_(schedule.initial_lr) {
  schedule_.validate();
}

PlateauController::Decision PlateauController::observe(double score) {
  Decision d;
  ++epoch_;
  if (score > best_score_) {
    best_score_ = score;
    best_epoch_ = epoch_;
    since_best_ = 0;
    since_lr_change_ = 0;
    d.improved = true;
    return d;
  }
  ++since_best_;
  ++since_lr_change_;
  if (since_best_ >= schedule_.early_stop_patience_epochs) {
    d.stop = true;
    return d;
  }
  if (since_lr_change_ >= schedule_.lr_patience_epochs) {
    lr_ /= schedule_.lr_decay_factor;
    since_lr_change_ = 0;
    d.lr_decayed = true;
  }
  return d;
}

void save_history(const std::filesystem::path& path, const TrainingHistory& history) {
  std::vector<nlohmann::json> rows;
  for (const auto& e : history.epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"loss", e.loss},
                    {"val_map10", e.val_map10},
                    {"lr", e.lr},
                    {"improved", e.improved},
                    {"lr_decayed", e.lr_decayed}});
  }
  write_json_lines(path, rows);
}

double batch_loss_and_gradients(encoders::TowerModel& model,
                                const std::vector<encoders::FeatureSequence>& audio,
                                const std::vector<std::vector<std::size_t>>& texts,
                                const LossConfig& cfg, SimilarityMatrix* grad_out) {
  if (audio.size() != texts.size() || audio.empty()) {
    throw std::invalid_argument("batch needs equally many audio and text items");
  }
  const std::size_t n = audio.size();
  model.zero_grad();
  std::vector<encoders::AudioForward> af;
  std::vector<encoders::TextForward> tf;
  af.reserve(n);
  tf.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    af.push_back(model.forward_audio(audio[i]));
    tf.push_back(model.forward_tokens(texts[i]));
  }
  SimilarityMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s.at(i, j) = kernels::dot(af[i].embedding.values, tf[j].embedding.values);
    }
  }
  const LossAndGrad lg = nt_xent_loss_and_grad(s, cfg);
  const std::size_t e = model.config().embedding_dim;
  std::vector<double> d(e);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(d.begin(), d.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) kernels::axpy(lg.grad.at(i, j), tf[j].embedding.values, d);
    model.backward_audio(af[i], d);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(d.begin(), d.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(lg.grad.at(i, j), af[i].embedding.values, d);
    model.backward_text(tf[j], d);
  }
  if (grad_out) *grad_out = lg.grad;
  return lg.loss;
}

TrainResult train(encoders::TowerModel model, const std::vector<TrainingItem>& train_set,
                  const Validator& validator, const TrainOptions& options) {
  if (train_set.size() < 2) {
    throw std::invalid_argument("training needs at least two tracks");
  }
  if (options.batch.batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (!(options.loss.temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  if (!validator) throw std::invalid_argument("a validator is required");

  nn::Rng rng(options.seed);
  PlateauController controller(options.schedule);
  nn::Adam adam;
  auto params = model.parameters();
  encoders::TowerModel best = model;
  TrainingHistory history;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= options.schedule.max_epochs; ++epoch) {
    const double lr = controller.learning_rate();
    nn::shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch.batch_size);
      if (end - begin < 2) break;  // a single pair carries no contrastive signal
      std::vector<encoders::FeatureSequence> audio;
      std::vector<std::vector<std::size_t>> texts;
      for (std::size_t k = begin; k < end; ++k) {
        const auto& item = train_set[order[k]];
        const std::string text =
            sample_text(item.description, options.sentences, options.batch, rng);
        auto ids = model.token_ids(text);
        if (ids.empty()) {
          throw std::invalid_argument("sampled text for '" + item.track_id + "' has no tokens");
        }
        texts.push_back(std::move(ids));
        audio.push_back(model.featurize(crop_audio(item.audio, model.input_seconds(), rng)));
      }
      loss_sum += batch_loss_and_gradients(model, audio, texts, options.loss);
      adam.step(params, lr);
      ++batches;
    }

    double score = 0.0;
    try {
      score = validator(model);
    } catch (const std::exception& e) {
      throw TrainingAborted(std::string("validation failed at epoch ") +
                                std::to_string(epoch) + ": " + e.what(),
                            history);
    }
    if (!std::isfinite(score)) {
      throw TrainingAborted("validation returned a non-finite score at epoch " +
                                std::to_string(epoch),
                            history);
    }
    const auto decision = controller.observe(score);
    history.epochs.push_back({epoch, batches ? loss_sum / static_cast<double>(batches) : 0.0,
                              score, lr, decision.improved, decision.lr_decayed});
    spdlog::debug("epoch {} loss {:.5f} val mAP@10 {:.4f} lr {:g}", epoch,
                  history.epochs.back().loss, score, lr);
    if (decision.improved) best = model;
    if (decision.stop) {
      history.early_stopped = true;
      break;
    }
  }
  history.best_epoch = controller.best_epoch();
  history.best_score = controller.best_score();
  return {std::move(best), std::move(history)};
}

}  // namespace tunetext::contrastive
