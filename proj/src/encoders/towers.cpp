#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

#include "tunetext/encoders.hpp"
#include "tunetext/kernels.hpp"
#include "tunetext/textminer.hpp"

namespace tunetext::encoders {

namespace {

std::string lower(std::string_view s) {
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

std::string_view to_string(TextEncoderKind k) {
  return k == TextEncoderKind::kBag ? "bag" : "window";
}

TextEncoderKind text_encoder_from_string(std::string_view s) {
  if (s == "bag") return TextEncoderKind::kBag;
  if (s == "window") return TextEncoderKind::kWindow;
  throw std::invalid_argument("unknown text encoder '" + std::string(s) + "'");
}

}  // namespace

Embedding normalized(std::vector<double> v) {
  const double norm = nn::l2_norm(v);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::domain_error("cannot normalize a zero or non-finite vector");
  }
  for (auto& x : v) x /= norm;
  return Embedding{std::move(v)};
}

double similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding size mismatch");
  return std::clamp(kernels::dot(a.values, b.values), -1.0, 1.0);
}

std::size_t EmbeddingModel::input_samples() const {
  return static_cast<std::size_t>(std::lround(input_seconds() * sample_rate()));
}

AudioClip pad_to_input(const AudioClip& clip, const EmbeddingModel& model) {
  if (clip.sample_rate != model.sample_rate()) {
    throw AudioError("clip sample rate does not match the model");
  }
  return fit_length(clip, model.input_samples());
}

nlohmann::json TowerConfig::to_json() const {
  return {{"features", features.to_json()},
          {"input_seconds", input_seconds},
          {"frame_stride", frame_stride},
          {"feature_scale", feature_scale},
          {"audio_dim", audio_dim},
          {"text_encoder", to_string(text_encoder)},
          {"text_dim", text_dim},
          {"oov_buckets", oov_buckets},
          {"embedding_dim", embedding_dim}};
}

TowerConfig TowerConfig::from_json(const nlohmann::json& j) {
  TowerConfig c;
  if (j.contains("features")) c.features = FeatureConfig::from_json(j.at("features"));
  c.input_seconds = j.value("input_seconds", c.input_seconds);
  c.frame_stride = j.value("frame_stride", c.frame_stride);
  c.feature_scale = j.value("feature_scale", c.feature_scale);
  c.audio_dim = j.value("audio_dim", c.audio_dim);
  if (j.contains("text_encoder")) {
    c.text_encoder = text_encoder_from_string(j.at("text_encoder").get<std::string>());
  }
  c.text_dim = j.value("text_dim", c.text_dim);
  c.oov_buckets = j.value("oov_buckets", c.oov_buckets);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  return c;
}

std::vector<std::string> build_vocabulary(const std::vector<std::string>& texts) {
  std::set<std::string> words;
  for (const auto& t : texts) {
    for (const auto& tok : textminer::tokenize(t)) words.insert(lower(tok.surface));
  }
  return {words.begin(), words.end()};
}

TowerModel::TowerModel(TowerConfig config, std::vector<std::string> vocabulary,
                       std::uint64_t seed)
    : config_(std::move(config)),
      vocab_(std::move(vocabulary)),
      seed_(seed),
      featurizer_(config_.features) {
  if (config_.frame_stride == 0) throw std::invalid_argument("frame_stride must be >= 1");
  if (config_.input_seconds <= 0.0) throw std::invalid_argument("input_seconds must be positive");
  if (config_.oov_buckets == 0) throw std::invalid_argument("oov_buckets must be >= 1");
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], i);

  const std::size_t e = config_.embedding_dim;
  const std::size_t bands = config_.features.n_bands;
  frame_w_ = nn::Tensor("audio.frame.w", {config_.audio_dim, bands});
  frame_b_ = nn::Tensor("audio.frame.b", {config_.audio_dim});
  cls_ = nn::Tensor("audio.cls", {config_.audio_dim});
  audio_adapter_ = {nn::Tensor("audio.adapter.w1", {e, config_.audio_dim}),
                    nn::Tensor("audio.adapter.b1", {e}),
                    nn::Tensor("audio.adapter.w2", {e, e}),
                    nn::Tensor("audio.adapter.b2", {e})};
  text_embed_ = nn::Tensor("text.embed", {vocab_.size() + config_.oov_buckets, config_.text_dim});
  text_w_ = nn::Tensor("text.encoder.w", {config_.text_dim, text_context() * config_.text_dim});
  text_b_ = nn::Tensor("text.encoder.b", {config_.text_dim});
  text_adapter_ = {nn::Tensor("text.adapter.w1", {e, config_.text_dim}),
                   nn::Tensor("text.adapter.b1", {e}),
                   nn::Tensor("text.adapter.w2", {e, e}),
                   nn::Tensor("text.adapter.b2", {e})};

  nn::Rng rng(seed);
  nn::init_glorot(frame_w_, rng);
  nn::init_normal(cls_, rng, 0.1);
  nn::init_glorot(audio_adapter_.w1, rng);
  nn::init_glorot(audio_adapter_.w2, rng);
  nn::init_normal(text_embed_, rng, 0.5);
  nn::init_glorot(text_w_, rng);
  nn::init_glorot(text_adapter_.w1, rng);
  nn::init_glorot(text_adapter_.w2, rng);
}

std::size_t TowerModel::text_context() const {
  return config_.text_encoder == TextEncoderKind::kWindow ? 3 : 1;
}

FeatureSequence TowerModel::featurize(const AudioClip& clip) const {
  return featurizer_(clip);
}

Embedding TowerModel::embed_audio(const AudioClip& clip) const {
  if (clip.sample_rate != sample_rate()) {
    throw AudioError("clip sample rate " + std::to_string(clip.sample_rate) +
                     " Hz does not match the model's " + std::to_string(sample_rate()) + " Hz");
  }
  if (clip.samples.size() != input_samples()) {
    throw AudioError("audio input must be exactly " + std::to_string(input_seconds()) +
                     " s (" + std::to_string(input_samples()) + " samples), got " +
                     std::to_string(clip.samples.size()));
  }
  return forward_audio(featurizer_(clip)).embedding;
}

Embedding TowerModel::embed_text(std::string_view text) const {
  return forward_text(text).embedding;
}

std::vector<std::size_t> TowerModel::token_ids(std::string_view text) const {
  std::vector<std::size_t> ids;
  for (const auto& tok : textminer::tokenize(text)) {
    const std::string key = lower(tok.surface);
    auto it = index_.find(key);
    ids.push_back(it != index_.end()
                      ? it->second
                      : vocab_.size() + fnv1a(key) % config_.oov_buckets);
  }
  return ids;
}

void TowerModel::adapter_forward(const AdapterTensors& a, std::span<const double> x,
                                 std::vector<double>& hidden, std::vector<double>& out,
                                 double& norm, Embedding& emb) const {
  const std::size_t e = config_.embedding_dim;
  hidden.assign(e, 0.0);
  out.assign(e, 0.0);
  nn::linear_forward(a.w1, a.b1, x, hidden);
  nn::relu_inplace(hidden);
  nn::linear_forward(a.w2, a.b2, hidden, out);
  norm = nn::l2_norm(out);
  emb = normalized(out);
}

void TowerModel::adapter_backward(AdapterTensors& a, std::span<const double> x,
                                  const std::vector<double>& hidden, double norm,
                                  const Embedding& emb,
                                  std::span<const double> d_embedding,
                                  std::vector<double>& dx) {
  const std::size_t e = config_.embedding_dim;
  // z = y / |y|  =>  dy = (dz - z (z . dz)) / |y|
  const double proj = kernels::dot(emb.values, d_embedding);
  std::vector<double> dy(e);
  for (std::size_t i = 0; i < e; ++i) {
    dy[i] = (d_embedding[i] - emb.values[i] * proj) / norm;
  }
  std::vector<double> dh(e, 0.0);
  nn::linear_backward(a.w2, a.b2, hidden, dy, dh);
  nn::relu_backward(hidden, dh);
  dx.assign(x.size(), 0.0);
  nn::linear_backward(a.w1, a.b1, x, dh, dx);
}

AudioForward TowerModel::forward_audio(const FeatureSequence& features) const {
  if (features.frames == 0 || features.bands != config_.features.n_bands) {
    throw std::invalid_argument("feature shape does not match the audio encoder");
  }
  AudioForward f;
  const std::size_t stride = config_.frame_stride;
  const std::size_t bands = features.bands;
  const std::size_t tp = (features.frames + stride - 1) / stride;
  f.pooled.frames = tp;
  f.pooled.bands = bands;
  f.pooled.values.assign(tp * bands, 0.0);
  for (std::size_t p = 0; p < tp; ++p) {
    const std::size_t begin = p * stride;
    const std::size_t end = std::min(features.frames, begin + stride);
    const double w = config_.feature_scale / static_cast<double>(end - begin);
    std::span<double> dst(f.pooled.values.data() + p * bands, bands);
    for (std::size_t t = begin; t < end; ++t) kernels::axpy(w, features.frame(t), dst);
  }

  const std::size_t d = config_.audio_dim;
  f.hidden.assign(tp * d, 0.0);
  for (std::size_t p = 0; p < tp; ++p) {
    std::span<double> h(f.hidden.data() + p * d, d);
    nn::linear_forward(frame_w_, frame_b_, f.pooled.frame(p), h);
    nn::relu_inplace(h);
  }

  // CLS slot attends over the frame sequence.
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  f.attention.resize(tp);
  double max_score = -INFINITY;
  for (std::size_t p = 0; p < tp; ++p) {
    f.attention[p] = kernels::dot(cls_.value, {f.hidden.data() + p * d, d}) * inv_sqrt_d;
    max_score = std::max(max_score, f.attention[p]);
  }
  double z = 0.0;
  for (auto& a : f.attention) {
    a = std::exp(a - max_score);
    z += a;
  }
  for (auto& a : f.attention) a /= z;
  f.cls = cls_.value;
  for (std::size_t p = 0; p < tp; ++p) {
    kernels::axpy(f.attention[p], {f.hidden.data() + p * d, d}, f.cls);
  }

  adapter_forward(audio_adapter_, f.cls, f.adapter_hidden, f.adapter_out, f.norm,
                  f.embedding);
  return f;
}

std::vector<std::vector<double>> TowerModel::audio_sequence(
    const FeatureSequence& features) const {
  const AudioForward f = forward_audio(features);
  const std::size_t d = config_.audio_dim;
  std::vector<std::vector<double>> seq;
  seq.push_back(f.cls);
  for (std::size_t p = 0; p < f.pooled.frames; ++p) {
    seq.emplace_back(f.hidden.begin() + static_cast<std::ptrdiff_t>(p * d),
                     f.hidden.begin() + static_cast<std::ptrdiff_t>((p + 1) * d));
  }
  return seq;
}

void TowerModel::backward_audio(const AudioForward& f,
                                std::span<const double> d_embedding) {
  std::vector<double> d_cls;
  adapter_backward(audio_adapter_, f.cls, f.adapter_hidden, f.norm, f.embedding,
                   d_embedding, d_cls);

  const std::size_t d = config_.audio_dim;
  const std::size_t tp = f.pooled.frames;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  kernels::axpy(1.0, d_cls, cls_.grad);

  // cls_out = c + sum_p a_p h_p, a = softmax(c . h_p / sqrt(d))
  std::vector<double> d_att(tp);
  double weighted = 0.0;
  for (std::size_t p = 0; p < tp; ++p) {
    d_att[p] = kernels::dot(d_cls, {f.hidden.data() + p * d, d});
    weighted += f.attention[p] * d_att[p];
  }
  std::vector<double> dh(d);
  for (std::size_t p = 0; p < tp; ++p) {
    std::span<const double> h(f.hidden.data() + p * d, d);
    const double d_score = f.attention[p] * (d_att[p] - weighted) * inv_sqrt_d;
    std::fill(dh.begin(), dh.end(), 0.0);
    kernels::axpy(f.attention[p], d_cls, dh);
    kernels::axpy(d_score, cls_.value, dh);
    kernels::axpy(d_score, h, cls_.grad);
    nn::relu_backward(h, dh);
    nn::linear_backward(frame_w_, frame_b_, f.pooled.frame(p), dh, {});
  }
}

TextForward TowerModel::forward_text(std::string_view text) const {
  auto ids = token_ids(text);
  if (ids.empty()) throw std::invalid_argument("text has no tokens");
  return forward_tokens(std::move(ids));
}

TextForward TowerModel::forward_tokens(std::vector<std::size_t> ids) const {
  if (ids.empty()) throw std::invalid_argument("text has no tokens");
  TextForward f;
  f.ids = std::move(ids);
  const std::size_t n = f.ids.size();
  const std::size_t d = config_.text_dim;
  const std::size_t ctx = text_context();
  f.inputs.assign(n * ctx * d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < ctx; ++c) {
      // Window slots are (t-1, t, t+1); out-of-range neighbours stay zero.
      const std::ptrdiff_t pos = ctx == 1 ? static_cast<std::ptrdiff_t>(t)
                                          : static_cast<std::ptrdiff_t>(t + c) - 1;
      if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(n)) continue;
      auto row = text_embed_.row(f.ids[static_cast<std::size_t>(pos)]);
      std::copy(row.begin(), row.end(),
                f.inputs.begin() + static_cast<std::ptrdiff_t>((t * ctx + c) * d));
    }
  }
  f.hidden.assign(n * d, 0.0);
  f.pooled.assign(d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::span<double> h(f.hidden.data() + t * d, d);
    nn::linear_forward(text_w_, text_b_, {f.inputs.data() + t * ctx * d, ctx * d}, h);
    nn::relu_inplace(h);
    kernels::axpy(inv_n, h, f.pooled);
  }
  adapter_forward(text_adapter_, f.pooled, f.adapter_hidden, f.adapter_out, f.norm,
                  f.embedding);
  return f;
}

void TowerModel::backward_text(const TextForward& f,
                               std::span<const double> d_embedding) {
  std::vector<double> d_pooled;
  adapter_backward(text_adapter_, f.pooled, f.adapter_hidden, f.norm, f.embedding,
                   d_embedding, d_pooled);
  const std::size_t n = f.ids.size();
  const std::size_t d = config_.text_dim;
  const std::size_t ctx = text_context();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> dh(d);
  std::vector<double> dx(ctx * d);
  for (std::size_t t = 0; t < n; ++t) {
    std::span<const double> h(f.hidden.data() + t * d, d);
    for (std::size_t i = 0; i < d; ++i) dh[i] = d_pooled[i] * inv_n;
    nn::relu_backward(h, dh);
    std::fill(dx.begin(), dx.end(), 0.0);
    nn::linear_backward(text_w_, text_b_, {f.inputs.data() + t * ctx * d, ctx * d}, dh, dx);
    for (std::size_t c = 0; c < ctx; ++c) {
      const std::ptrdiff_t pos = ctx == 1 ? static_cast<std::ptrdiff_t>(t)
                                          : static_cast<std::ptrdiff_t>(t + c) - 1;
      if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(n)) continue;
      kernels::axpy(1.0, std::span<const double>(dx).subspan(c * d, d),
                    text_embed_.grad_row(f.ids[static_cast<std::size_t>(pos)]));
    }
  }
}

std::vector<nn::Tensor*> TowerModel::parameters() {
  return {&frame_w_,          &frame_b_,          &cls_,
          &audio_adapter_.w1, &audio_adapter_.b1, &audio_adapter_.w2,
          &audio_adapter_.b2, &text_embed_,       &text_w_,
          &text_b_,           &text_adapter_.w1,  &text_adapter_.b1,
          &text_adapter_.w2,  &text_adapter_.b2};
}

std::vector<const nn::Tensor*> TowerModel::parameters() const {
  auto* self = const_cast<TowerModel*>(this);
  auto params = self->parameters();
  return {params.begin(), params.end()};
}

std::vector<nn::Tensor*> TowerModel::adapter_parameters() {
  return {&audio_adapter_.w1, &audio_adapter_.b1, &audio_adapter_.w2,
          &audio_adapter_.b2, &text_adapter_.w1,  &text_adapter_.b1,
          &text_adapter_.w2,  &text_adapter_.b2};
}

void TowerModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

void TowerModel::save(const std::filesystem::path& path) const {
  nlohmann::json cfg{{"tower", config_.to_json()}, {"vocabulary", vocab_}, {"seed", seed_}};
  nn::save_checkpoint(path, "tower", cfg, parameters());
}

TowerModel TowerModel::load(const std::filesystem::path& path) {
  auto ckpt = nn::load_checkpoint(path);
  if (ckpt.kind != "tower") {
    throw std::runtime_error(path.string() + ": checkpoint is a '" + ckpt.kind +
                             "', expected a tower model");
  }
  TowerModel model(TowerConfig::from_json(ckpt.config.at("tower")),
                   ckpt.config.at("vocabulary").get<std::vector<std::string>>(),
                   ckpt.config.at("seed").get<std::uint64_t>());
  nn::assign_tensors(ckpt.tensors, model.parameters());
  return model;
}

bool TowerModel::same_parameters(const TowerModel& other) const {
  if (vocab_ != other.vocab_ || config_.to_json() != other.config_.to_json()) return false;
  const auto a = parameters();
  const auto b = other.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(*a[i] == *b[i])) return false;
  }
  return true;
}

}  // namespace tunetext::encoders
