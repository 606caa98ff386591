#include "toy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tunetext/corpus.hpp"
#include "tunetext/evalharness.hpp"
#include "tunetext/json_lines.hpp"
#include "tunetext/nn.hpp"

namespace tunetext::toy {

namespace fs = std::filesystem;

const std::vector<std::string>& tag_names() {
  static const std::vector<std::string> names{
      "amber", "basalt", "cedar", "dune",   "ember",   "fjord", "granite", "harbor",
      "iris",  "jade",   "kestrel", "lumen", "meadow", "nimbus", "opal",   "prism"};
  return names;
}

double tag_frequency(std::size_t tag) {
  static const double freqs[] = {250,  330,  420,  520,  640,  780,  940,  1120,
                                 1400, 1650, 1950, 2250, 2550, 2850, 3150, 3450};
  if (tag >= 16) throw std::out_of_range("tag index");
  return freqs[tag];
}

AudioClip render(std::size_t a, std::size_t b, std::uint64_t seed, const ToyOptions& opt) {
  nn::Rng rng(seed);
  AudioClip clip;
  clip.sample_rate = opt.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(opt.seconds * opt.sample_rate));
  clip.samples.resize(n);
  const double pa = 2 * std::numbers::pi * nn::uniform01(rng);
  const double pb = 2 * std::numbers::pi * nn::uniform01(rng);
  const double wa = 2 * std::numbers::pi * tag_frequency(a) / opt.sample_rate;
  const double wb = 2 * std::numbers::pi * tag_frequency(b) / opt.sample_rate;
  for (std::size_t t = 0; t < n; ++t) {
    const double x = static_cast<double>(t);
    clip.samples[t] = 0.4 * std::sin(wa * x + pa) + 0.4 * std::sin(wb * x + pb) +
                      opt.noise * nn::normal(rng);
  }
  return clip;
}

std::vector<std::pair<std::size_t, std::size_t>> all_pairs() {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < kGroupSize; ++a) {
    for (std::size_t b = kGroupSize; b < 2 * kGroupSize; ++b) out.emplace_back(a, b);
  }
  return out;
}

std::string pair_label(std::size_t a, std::size_t b) {
  return tag_names()[a] + ", " + tag_names()[b];
}

namespace {

std::string track_id(const std::string& split, std::size_t a, std::size_t b) {
  return split + "-" + tag_names()[a] + "-" + tag_names()[b];
}

std::uint64_t clip_seed(std::uint64_t seed, std::uint64_t split, std::size_t a, std::size_t b) {
  return seed * 1000003ULL + split * 10007ULL + a * 101ULL + b;
}

}  // namespace

ToyPaths write_toy(const fs::path& dir, std::uint64_t seed, const ToyOptions& opt) {
  ToyPaths p;
  p.dir = dir;
  p.corpus = dir / "corpus.jsonl";
  p.mined = dir / "mined.jsonl";
  p.test_manifest = dir / "test.jsonl";
  p.tag_manifest = dir / "tags.jsonl";
  p.annotations = dir / "annotations.jsonl";
  p.config = dir / "train_config.json";
  fs::create_directories(dir / "audio");

  corpus::Corpus c;
  c.name = "corpus";
  MinedMap mined;
  std::vector<eval::EvalItem> test, tags;
  const char* splits[] = {"train", "valid", "test"};
  for (std::uint64_t s = 0; s < 3; ++s) {
    for (auto [a, b] : all_pairs()) {
      const std::string id = track_id(splits[s], a, b);
      const std::string ref = "audio/" + id + ".wav";
      write_wav(dir / ref, render(a, b, clip_seed(seed, s, a, b), opt));
      const auto& na = tag_names()[a];
      const auto& nb = tag_names()[b];
      if (s < 2) {
        corpus::CorpusRecord r;
        r.track_id = id;
        r.audio_ref = ref;
        r.caption = "Genres : " + na + " , " + nb + " .";
        r.sections.push_back({"Composition", "The song features " + na + " over a " + nb +
                                                 " groove . Released in 19" +
                                                 std::to_string(50 + a * 4 + b % 4) + " ."});
        r.split = s == 0 ? corpus::Split::kTrain : corpus::Split::kValid;
        c.records.push_back(std::move(r));
        MinedDescription d;
        d.track_id = id;
        d.aspects = {{na, Provenance::kCaption, std::nullopt},
                     {nb, Provenance::kCaption, std::nullopt}};
        mined.emplace(id, std::move(d));
      } else {
        test.push_back({id, ref, {pair_label(a, b)}, std::nullopt});
        tags.push_back({id, ref, {na, nb}, na});
      }
    }
  }
  corpus::save_corpus(c, p.corpus);
  save_mined(p.mined, mined);
  eval::save_manifest(p.test_manifest, test);
  eval::save_manifest(p.tag_manifest, tags);
  textminer::save_annotations(p.annotations, annotated_texts(20, seed));
  write_json_file(p.config, {{"tower", {{"features", {{"sample_rate", opt.sample_rate}}}}},
                             {"training",
                              {{"batch_size", 16}, {"initial_lr", 1e-3}, {"max_epochs", 120}}}});
  return p;
}

MinedMap inject_noise(const MinedMap& mined, double fraction, std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) throw std::invalid_argument("noise fraction");
  MinedMap out = mined;
  std::size_t clean = 0;
  for (const auto& [id, d] : mined) clean += d.aspects.size();
  const auto count =
      static_cast<std::size_t>(std::lround(fraction / (1.0 - fraction) * static_cast<double>(clean)));
  std::vector<std::string> ids;
  for (const auto& [id, d] : out) ids.push_back(id);
  nn::Rng rng(seed);
  const auto& names = tag_names();
  for (std::size_t i = 0; i < count;) {
    auto& d = out.at(ids[nn::uniform_index(rng, ids.size())]);
    const auto& tag = names[nn::uniform_index(rng, names.size())];
    if (append_unique(d.aspects, {tag, Provenance::kCaption, std::nullopt})) ++i;
  }
  return out;
}

std::vector<textminer::AnnotatedText> annotated_texts(std::size_t count, std::uint64_t seed) {
  std::vector<std::string> pool = tag_names();
  for (const char* extra : {"cool jazz", "bebop", "dream pop", "piano", "synth bass",
                            "roots reggae", "drum solo", "ambient"}) {
    pool.emplace_back(extra);
  }
  const std::vector<std::string> names{"Miles", "Ella", "Nina", "Otis", "Joni"};
  nn::Rng rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[nn::uniform_index(rng, v.size())]; };

  std::vector<textminer::AnnotatedText> out;
  for (std::size_t i = 0; i < count; ++i) {
    textminer::AnnotatedText item;
    auto add_aspect = [&](const std::string& a) {
      item.spans.push_back({item.text.size(), item.text.size() + a.size(), TextKind::kAspect});
      item.text += a;
    };
    const std::size_t layout = i % 3;
    if (layout != 1) {
      item.text += "Genres : ";
      add_aspect(pick(pool));
      item.text += " , ";
      add_aspect(pick(pool));
      item.text += " . ";
    }
    if (layout != 2) {
      const std::size_t start = item.text.size();
      item.text += "The song features ";
      add_aspect(pick(pool));
      item.text += " over a ";
      add_aspect(pick(pool));
      item.text += " groove";
      item.spans.push_back({start, item.text.size(), TextKind::kSentence});
      item.text += " . ";
    }
    item.text += "Released in 19" + std::to_string(50 + nn::uniform_index(rng, 40)) + " by " +
                 pick(names) + " .";
    textminer::validate(item);
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace tunetext::toy
