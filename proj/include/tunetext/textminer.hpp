#pragma once

// Span mining: rule-based tokenization, binary token taggers for aspects
// and sentences, and decoding of per-token probabilities into character
// spans.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tunetext/corpus.hpp"
#include "tunetext/mined.hpp"
#include "tunetext/nn.hpp"

namespace tunetext::textminer {

struct Token {
  std::string surface;
  std::size_t start = 0;  // byte offset into the source text
  std::size_t end = 0;    // exclusive

  bool operator==(const Token&) const = default;
};

using TokenSequence = std::vector<Token>;

/// Splits on whitespace; every ASCII punctuation character is a token of
/// its own, everything else groups into maximal runs.
TokenSequence tokenize(std::string_view text);

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive

  bool operator==(const CharSpan&) const = default;
  auto operator<=>(const CharSpan&) const = default;
};

struct AnnotatedSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  TextKind kind = TextKind::kAspect;

  bool operator==(const AnnotatedSpan&) const = default;
};

struct AnnotatedText {
  std::string text;
  std::vector<AnnotatedSpan> spans;

  bool operator==(const AnnotatedText&) const = default;
};

/// Throws std::invalid_argument when offsets are out of range or two spans
/// of the same kind overlap.
void validate(const AnnotatedText& item);

std::vector<AnnotatedText> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path,
                      const std::vector<AnnotatedText>& items);

/// 1 where the token's character range overlaps a gold span of `kind`.
/// Throws std::out_of_range for tokens outside the text.
std::vector<int> spans_to_labels(const AnnotatedText& item, TextKind kind,
                                 const TokenSequence& tokens);

/// Maximal runs of tokens with probability >= threshold, as inclusive token
/// index pairs. Runs shorter than `min_tokens` are discarded.
std::vector<std::pair<std::size_t, std::size_t>> decode_token_runs(
    std::span<const double> probabilities, double threshold,
    std::size_t min_tokens = 1);

std::vector<CharSpan> decode_spans(std::span<const double> probabilities,
                                   const TokenSequence& tokens,
                                   double threshold, std::size_t min_tokens = 1);

/// Aspects may be a single token; sentences need at least three.
std::size_t min_tokens_for(TextKind kind);

/// Gold spans of `kind` snapped outward to token boundaries.
std::vector<CharSpan> gold_token_spans(const AnnotatedText& item, TextKind kind,
                                       const TokenSequence& tokens);

/// Exact-match span F1; 1.0 when both sets are empty.
double span_f1(const std::vector<CharSpan>& predicted,
               const std::vector<CharSpan>& gold);

/// Per-token "inside span" probabilities for one kind.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual TextKind kind() const = 0;
  virtual std::vector<double> predict(const TokenSequence& tokens) const = 0;
};

struct TaggerConfig {
  std::size_t embed_dim = 24;
  std::size_t hidden_dim = 48;
  std::size_t window = 2;  // context tokens on each side
  std::size_t epochs = 200;
  double learning_rate = 0.01;
  double valid_fraction = 0.0;  // 0 validates on the training data
  double threshold = 0.5;

  nlohmann::json to_json() const;
  static TaggerConfig from_json(const nlohmann::json& j);
};

/// Embedding layer, windowed context encoder (one ReLU layer over the
/// concatenated neighbour embeddings) and a per-token sigmoid.
class TaggerModel : public Tagger {
 public:
  TaggerModel(TextKind kind, TaggerConfig config,
              std::vector<std::string> vocabulary, std::uint64_t seed);

  TextKind kind() const override { return kind_; }
  std::vector<double> predict(const TokenSequence& tokens) const override;

  /// Mean binary cross-entropy over tokens; accumulates parameter
  /// gradients.
  double accumulate_gradients(const TokenSequence& tokens,
                              const std::vector<int>& labels);

  std::vector<nn::Tensor*> parameters();
  std::vector<const nn::Tensor*> parameters() const;
  const TaggerConfig& config() const { return config_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::uint64_t seed() const { return seed_; }

  void save(const std::filesystem::path& path) const;
  static TaggerModel load(const std::filesystem::path& path);

  bool operator==(const TaggerModel& o) const;

 private:
  std::size_t token_id(const std::string& surface) const;
  std::vector<std::size_t> ids(const TokenSequence& tokens) const;
  void window_input(const std::vector<std::size_t>& ids, std::size_t t,
                    std::vector<double>& x) const;

  TextKind kind_;
  TaggerConfig config_;
  std::vector<std::string> vocab_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::uint64_t seed_;
  nn::Tensor embed_;
  nn::Tensor hidden_w_;
  nn::Tensor hidden_b_;
  nn::Tensor out_w_;
  nn::Tensor out_b_;
};

struct TaggerTrainingLog {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_valid_f1;
  std::size_t best_epoch = 0;  // 1-based
};

/// Trains a tagger and returns the parameters of the epoch with the best
/// validation token F1 (strict improvement). Throws std::invalid_argument on
/// empty data or when no token carries a positive label.
TaggerModel train_tagger(const std::vector<AnnotatedText>& data, TextKind kind,
                         const TaggerConfig& config, std::uint64_t seed,
                         TaggerTrainingLog* log = nullptr);

/// Micro-averaged span F1 over a data set using the tagger's decoded spans.
double evaluate_span_f1(const Tagger& tagger,
                        const std::vector<AnnotatedText>& data,
                        double threshold);

struct MiningConfig {
  double threshold = 0.5;
};

/// Runs both taggers over caption, file description and the (already
/// filtered) article sections of every record, then appends metadata
/// aspects. Exact duplicates are dropped, first occurrence wins.
MinedMap mine_descriptions(const corpus::Corpus& corpus, const Tagger& aspects,
                           const Tagger& sentences, const MiningConfig& config);

}  // namespace tunetext::textminer
