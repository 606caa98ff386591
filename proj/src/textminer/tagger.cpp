#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

#include "tunetext/kernels.hpp"
#include "tunetext/textminer.hpp"

namespace tunetext::textminer {

namespace {

constexpr std::size_t kUnk = 0;
constexpr std::size_t kPad = 1;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

nlohmann::json TaggerConfig::to_json() const {
  return {{"embed_dim", embed_dim},       {"hidden_dim", hidden_dim},
          {"window", window},             {"epochs", epochs},
          {"learning_rate", learning_rate}, {"valid_fraction", valid_fraction},
          {"threshold", threshold}};
}

TaggerConfig TaggerConfig::from_json(const nlohmann::json& j) {
  TaggerConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.window = j.value("window", c.window);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.valid_fraction = j.value("valid_fraction", c.valid_fraction);
  c.threshold = j.value("threshold", c.threshold);
  return c;
}

TaggerModel::TaggerModel(TextKind kind, TaggerConfig config,
                         std::vector<std::string> vocabulary, std::uint64_t seed)
    : kind_(kind), config_(config), vocab_(std::move(vocabulary)), seed_(seed) {
  if (vocab_.size() < 2 || vocab_[kUnk] != "<unk>" || vocab_[kPad] != "<pad>") {
    vocab_.insert(vocab_.begin(), {"<unk>", "<pad>"});
  }
  for (std::size_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], i);

  const std::size_t in_dim = (2 * config_.window + 1) * config_.embed_dim;
  embed_ = nn::Tensor("tagger.embed", {vocab_.size(), config_.embed_dim});
  hidden_w_ = nn::Tensor("tagger.hidden.w", {config_.hidden_dim, in_dim});
  hidden_b_ = nn::Tensor("tagger.hidden.b", {config_.hidden_dim});
  out_w_ = nn::Tensor("tagger.out.w", {1, config_.hidden_dim});
  out_b_ = nn::Tensor("tagger.out.b", {1});

  nn::Rng rng(seed);
  nn::init_normal(embed_, rng, 0.5);
  nn::init_glorot(hidden_w_, rng);
  nn::init_glorot(out_w_, rng);
}

std::size_t TaggerModel::token_id(const std::string& surface) const {
  auto it = index_.find(lower(surface));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> TaggerModel::ids(const TokenSequence& tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(token_id(t.surface));
  return out;
}

void TaggerModel::window_input(const std::vector<std::size_t>& token_ids,
                               std::size_t t, std::vector<double>& x) const {
  const std::size_t d = config_.embed_dim;
  const auto w = static_cast<std::ptrdiff_t>(config_.window);
  x.resize((2 * config_.window + 1) * d);
  std::size_t slot = 0;
  for (std::ptrdiff_t o = -w; o <= w; ++o, ++slot) {
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t) + o;
    const std::size_t id =
        (pos < 0 || pos >= static_cast<std::ptrdiff_t>(token_ids.size()))
            ? kPad
            : token_ids[static_cast<std::size_t>(pos)];
    auto row = embed_.row(id);
    std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(slot * d));
  }
}

std::vector<double> TaggerModel::predict(const TokenSequence& tokens) const {
  const auto token_ids = ids(tokens);
  std::vector<double> probs(tokens.size());
  std::vector<double> x;
  std::vector<double> h(config_.hidden_dim);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    window_input(token_ids, t, x);
    nn::linear_forward(hidden_w_, hidden_b_, x, h);
    nn::relu_inplace(h);
    probs[t] = sigmoid(kernels::dot(out_w_.value, h) + out_b_.value[0]);
  }
  return probs;
}

double TaggerModel::accumulate_gradients(const TokenSequence& tokens,
                                         const std::vector<int>& labels) {
  if (tokens.empty()) return 0.0;
  const auto token_ids = ids(tokens);
  const double inv_n = 1.0 / static_cast<double>(tokens.size());
  const std::size_t d = config_.embed_dim;
  const auto w = static_cast<std::ptrdiff_t>(config_.window);
  std::vector<double> x;
  std::vector<double> h(config_.hidden_dim);
  std::vector<double> dh(config_.hidden_dim);
  std::vector<double> dx;
  double loss = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    window_input(token_ids, t, x);
    nn::linear_forward(hidden_w_, hidden_b_, x, h);
    nn::relu_inplace(h);
    const double z = kernels::dot(out_w_.value, h) + out_b_.value[0];
    const double p = sigmoid(z);
    const double y = labels[t];
    // log(1 + e^{-|z|}) form keeps the loss finite for saturated logits.
    loss += (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)))) * inv_n;

    const double dz = (p - y) * inv_n;
    out_b_.grad[0] += dz;
    kernels::axpy(dz, h, out_w_.grad);
    std::fill(dh.begin(), dh.end(), 0.0);
    kernels::axpy(dz, out_w_.value, dh);
    nn::relu_backward(h, dh);
    dx.assign(x.size(), 0.0);
    nn::linear_backward(hidden_w_, hidden_b_, x, dh, dx);
    std::size_t slot = 0;
    for (std::ptrdiff_t o = -w; o <= w; ++o, ++slot) {
      const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t) + o;
      const std::size_t id =
          (pos < 0 || pos >= static_cast<std::ptrdiff_t>(token_ids.size()))
              ? kPad
              : token_ids[static_cast<std::size_t>(pos)];
      kernels::axpy(1.0, std::span<const double>(dx).subspan(slot * d, d),
                    embed_.grad_row(id));
    }
  }
  return loss;
}

std::vector<nn::Tensor*> TaggerModel::parameters() {
  return {&embed_, &hidden_w_, &hidden_b_, &out_w_, &out_b_};
}

std::vector<const nn::Tensor*> TaggerModel::parameters() const {
  return {&embed_, &hidden_w_, &hidden_b_, &out_w_, &out_b_};
}

void TaggerModel::save(const std::filesystem::path& path) const {
  nlohmann::json cfg{{"kind", to_string(kind_)},
                     {"tagger", config_.to_json()},
                     {"vocabulary", vocab_},
                     {"seed", seed_}};
  nn::save_checkpoint(path, "tagger", cfg, parameters());
}

TaggerModel TaggerModel::load(const std::filesystem::path& path) {
  auto ckpt = nn::load_checkpoint(path);
  if (ckpt.kind != "tagger") {
    throw std::runtime_error(path.string() + ": checkpoint is a '" + ckpt.kind +
                             "', expected a tagger");
  }
  TaggerModel model(text_kind_from_string(ckpt.config.at("kind").get<std::string>()),
                    TaggerConfig::from_json(ckpt.config.at("tagger")),
                    ckpt.config.at("vocabulary").get<std::vector<std::string>>(),
                    ckpt.config.at("seed").get<std::uint64_t>());
  nn::assign_tensors(ckpt.tensors, model.parameters());
  return model;
}

bool TaggerModel::operator==(const TaggerModel& o) const {
  return kind_ == o.kind_ && vocab_ == o.vocab_ && embed_ == o.embed_ &&
         hidden_w_ == o.hidden_w_ && hidden_b_ == o.hidden_b_ &&
         out_w_ == o.out_w_ && out_b_ == o.out_b_;
}

namespace {

struct Prepared {
  TokenSequence tokens;
  std::vector<int> labels;
};

double token_f1(const TaggerModel& model, const std::vector<Prepared>& items,
                double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& item : items) {
    const auto probs = model.predict(item.tokens);
    for (std::size_t t = 0; t < probs.size(); ++t) {
      const bool pred = probs[t] >= threshold;
      const bool gold = item.labels[t] == 1;
      tp += pred && gold;
      fp += pred && !gold;
      fn += !pred && gold;
    }
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

}  // namespace

TaggerModel train_tagger(const std::vector<AnnotatedText>& data, TextKind kind,
                         const TaggerConfig& config, std::uint64_t seed,
                         TaggerTrainingLog* log) {
  if (data.empty()) throw std::invalid_argument("tagger training data is empty");
  if (config.valid_fraction < 0.0 || config.valid_fraction >= 1.0) {
    throw std::invalid_argument("valid_fraction must be in [0, 1)");
  }
  nn::Rng rng(seed);

  std::vector<Prepared> prepared;
  std::size_t positives = 0;
  for (const auto& item : data) {
    validate(item);
    Prepared p;
    p.tokens = tokenize(item.text);
    p.labels = spans_to_labels(item, kind, p.tokens);
    for (int l : p.labels) positives += static_cast<std::size_t>(l);
    prepared.push_back(std::move(p));
  }
  if (positives == 0) {
    throw std::invalid_argument("no token carries a positive " +
                                std::string(to_string(kind)) + " label");
  }

  std::vector<std::size_t> order(prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Prepared> train;
  std::vector<Prepared> valid;
  const auto n_valid = static_cast<std::size_t>(
      std::floor(config.valid_fraction * static_cast<double>(prepared.size())));
  if (n_valid > 0) {
    nn::shuffle(order, rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < n_valid ? valid : train).push_back(prepared[order[i]]);
    }
  } else {
    train = prepared;
    valid = prepared;
  }

  std::set<std::string> words;
  for (const auto& p : train) {
    for (const auto& t : p.tokens) words.insert(lower(t.surface));
  }
  TaggerModel model(kind, config, {words.begin(), words.end()}, seed);
  TaggerModel best = model;
  double best_f1 = -1.0;

  nn::Adam adam;
  auto params = model.parameters();
  std::vector<std::size_t> item_order(train.size());
  for (std::size_t i = 0; i < item_order.size(); ++i) item_order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    nn::shuffle(item_order, rng);
    double epoch_loss = 0.0;
    for (std::size_t idx : item_order) {
      for (auto* p : params) p->zero_grad();
      epoch_loss += model.accumulate_gradients(train[idx].tokens, train[idx].labels);
      adam.step(params, config.learning_rate);
    }
    const double f1 = token_f1(model, valid, config.threshold);
    if (log) {
      log->epoch_loss.push_back(epoch_loss / static_cast<double>(train.size()));
      log->epoch_valid_f1.push_back(f1);
    }
    if (f1 > best_f1) {
      best_f1 = f1;
      best = model;
      if (log) log->best_epoch = epoch;
    }
    if (best_f1 >= 1.0) break;  // cannot be beaten
  }
  return best;
}

double evaluate_span_f1(const Tagger& tagger,
                        const std::vector<AnnotatedText>& data,
                        double threshold) {
  std::size_t tp = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
  for (const auto& item : data) {
    const auto tokens = tokenize(item.text);
    const auto probs = tagger.predict(tokens);
    auto pred = decode_spans(probs, tokens, threshold, min_tokens_for(tagger.kind()));
    const auto gold = gold_token_spans(item, tagger.kind(), tokens);
    std::set<CharSpan> gold_set(gold.begin(), gold.end());
    for (const auto& p : pred) tp += gold_set.contains(p);
    n_pred += pred.size();
    n_gold += gold.size();
  }
  if (n_pred + n_gold == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(n_pred + n_gold);
}

MinedMap mine_descriptions(const corpus::Corpus& corpus, const Tagger& aspects,
                           const Tagger& sentences, const MiningConfig& config) {
  if (aspects.kind() != TextKind::kAspect || sentences.kind() != TextKind::kSentence) {
    throw std::invalid_argument("taggers passed in the wrong order or kind");
  }
  MinedMap out;
  for (const auto& record : corpus.records) {
    MinedDescription desc;
    desc.track_id = record.track_id;

    std::vector<std::pair<std::string_view, Provenance>> sources;
    sources.emplace_back(record.caption, Provenance::kCaption);
    sources.emplace_back(record.file_description, Provenance::kFileDescription);
    for (const auto& s : record.sections) {
      sources.emplace_back(s.section_text, Provenance::kArticle);
    }
    for (const auto& [text, source] : sources) {
      if (text.empty()) continue;
      const auto tokens = tokenize(text);
      if (tokens.empty()) continue;
      for (const Tagger* tagger : {&aspects, &sentences}) {
        const auto probs = tagger->predict(tokens);
        for (const auto& span : decode_spans(probs, tokens, config.threshold,
                                             min_tokens_for(tagger->kind()))) {
          append_unique(desc.items(tagger->kind()),
                        {std::string(text.substr(span.start, span.end - span.start)),
                         source,
                         std::nullopt});
        }
      }
    }
    for (auto& a : corpus::extract_metadata_aspects(record)) {
      append_unique(desc.aspects, {std::move(a), Provenance::kMetadata, std::nullopt});
    }
    out.emplace(record.track_id, std::move(desc));
  }
  return out;
}

}  // namespace tunetext::textminer
