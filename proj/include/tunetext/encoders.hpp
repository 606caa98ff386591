#pragma once

// Two-tower model: an audio tower (frame encoder with a CLS summary slot)
// and a text tower (token encoder with mean pooling), each followed by a
// two-layer adapter into a shared unit-norm embedding space.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tunetext/audio.hpp"
#include "tunetext/features.hpp"
#include "tunetext/nn.hpp"

namespace tunetext::encoders {

inline constexpr std::size_t kEmbeddingDim = 128;

struct Embedding {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const Embedding&) const = default;
};

/// Scales `v` to unit Euclidean norm. Throws on a zero vector.
Embedding normalized(std::vector<double> v);

/// Dot product of two unit vectors, clamped to [-1, 1].
double similarity(const Embedding& a, const Embedding& b);

/// Anything that maps audio and text into the shared space. Implementations
/// must be safe to call concurrently.
class EmbeddingModel {
 public:
  virtual ~EmbeddingModel() = default;
  /// `clip` must be exactly input_seconds() long at sample_rate().
  virtual Embedding embed_audio(const AudioClip& clip) const = 0;
  virtual Embedding embed_text(std::string_view text) const = 0;
  virtual double input_seconds() const = 0;
  virtual int sample_rate() const = 0;

  std::size_t input_samples() const;
};

/// Zero-pads (or truncates) a clip to the model input length.
AudioClip pad_to_input(const AudioClip& clip, const EmbeddingModel& model);

enum class TextEncoderKind {
  kBag,     // per-token layer; order-insensitive after mean pooling
  kWindow,  // per-token layer over (previous, current, next) embeddings
};

struct TowerConfig {
  FeatureConfig features;
  double input_seconds = 10.0;
  std::size_t frame_stride = 10;  // frames averaged before the audio encoder
  double feature_scale = 0.1;
  std::size_t audio_dim = 64;
  TextEncoderKind text_encoder = TextEncoderKind::kBag;
  std::size_t text_dim = 64;
  std::size_t oov_buckets = 32;
  std::size_t embedding_dim = kEmbeddingDim;

  nlohmann::json to_json() const;
  static TowerConfig from_json(const nlohmann::json& j);
};

struct AudioForward {
  FeatureSequence pooled;       // T' x F after striding and scaling
  std::vector<double> hidden;   // T' x audio_dim, post-ReLU
  std::vector<double> attention;  // T'
  std::vector<double> cls;      // audio_dim
  std::vector<double> adapter_hidden;
  std::vector<double> adapter_out;
  double norm = 0.0;
  Embedding embedding;
};

struct TextForward {
  std::vector<std::size_t> ids;
  std::vector<double> inputs;   // n x (context * text_dim)
  std::vector<double> hidden;   // n x text_dim, post-ReLU
  std::vector<double> pooled;   // text_dim
  std::vector<double> adapter_hidden;
  std::vector<double> adapter_out;
  double norm = 0.0;
  Embedding embedding;
};

class TowerModel : public EmbeddingModel {
 public:
  TowerModel(TowerConfig config, std::vector<std::string> vocabulary,
             std::uint64_t seed);

  Embedding embed_audio(const AudioClip& clip) const override;
  Embedding embed_text(std::string_view text) const override;
  double input_seconds() const override { return config_.input_seconds; }
  int sample_rate() const override { return config_.features.sample_rate; }

  /// Throws AudioError unless the clip is exactly the input length.
  Embedding encode_audio(const AudioClip& clip) const { return embed_audio(clip); }
  /// Throws std::invalid_argument when the text has no tokens.
  Embedding encode_text(std::string_view text) const { return embed_text(text); }

  const Featurizer& featurizer() const { return featurizer_; }
  FeatureSequence featurize(const AudioClip& clip) const;

  /// Encoder output sequence; element 0 is the CLS summary.
  std::vector<std::vector<double>> audio_sequence(const FeatureSequence& features) const;

  AudioForward forward_audio(const FeatureSequence& features) const;
  TextForward forward_text(std::string_view text) const;
  TextForward forward_tokens(std::vector<std::size_t> ids) const;
  std::vector<std::size_t> token_ids(std::string_view text) const;

  /// Accumulate parameter gradients given dLoss/dEmbedding.
  void backward_audio(const AudioForward& fwd, std::span<const double> d_embedding);
  void backward_text(const TextForward& fwd, std::span<const double> d_embedding);

  std::vector<nn::Tensor*> parameters();
  std::vector<const nn::Tensor*> parameters() const;
  std::vector<nn::Tensor*> adapter_parameters();
  void zero_grad();

  const TowerConfig& config() const { return config_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::uint64_t seed() const { return seed_; }

  void save(const std::filesystem::path& path) const;
  static TowerModel load(const std::filesystem::path& path);

  /// Parameters and configuration equal, bit for bit.
  bool same_parameters(const TowerModel& other) const;

 private:
  struct AdapterTensors {
    nn::Tensor w1, b1, w2, b2;
  };

  void adapter_forward(const AdapterTensors& a, std::span<const double> x,
                       std::vector<double>& hidden, std::vector<double>& out,
                       double& norm, Embedding& emb) const;
  void adapter_backward(AdapterTensors& a, std::span<const double> x,
                        const std::vector<double>& hidden, double norm,
                        const Embedding& emb, std::span<const double> d_embedding,
                        std::vector<double>& dx);
  std::size_t text_context() const;

  TowerConfig config_;
  std::vector<std::string> vocab_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::uint64_t seed_;
  Featurizer featurizer_;

  nn::Tensor frame_w_, frame_b_, cls_;
  AdapterTensors audio_adapter_;
  nn::Tensor text_embed_, text_w_, text_b_;
  AdapterTensors text_adapter_;
};

/// Lowercased tokens of `texts`, sorted and deduplicated; the text tower's
/// vocabulary.
std::vector<std::string> build_vocabulary(const std::vector<std::string>& texts);

}  // namespace tunetext::encoders
