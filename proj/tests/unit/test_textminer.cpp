#include <doctest.h>

#include "support/tempdir.hpp"
#include "support/toy.hpp"
#include "tunetext/corpus.hpp"
#include "tunetext/textminer.hpp"

using namespace tunetext;
using namespace tunetext::textminer;
using testing::TempDir;

namespace {

/// Emits 1 for tokens overlapping any of the given character ranges of the
/// text it was built for, 0 elsewhere.
class OracleTagger : public Tagger {
 public:
  OracleTagger(TextKind kind, std::vector<AnnotatedText> known) : kind_(kind), known_(std::move(known)) {}
  TextKind kind() const override { return kind_; }
  std::vector<double> predict(const TokenSequence& tokens) const override {
    std::vector<double> out(tokens.size(), 0.0);
    for (const auto& item : known_) {
      const auto t = tokenize(item.text);
      if (t.size() != tokens.size()) continue;
      bool same = true;
      for (std::size_t i = 0; i < t.size(); ++i) same = same && t[i] == tokens[i];
      if (!same) continue;
      const auto labels = spans_to_labels(item, kind_, tokens);
      for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i];
    }
    return out;
  }

 private:
  TextKind kind_;
  std::vector<AnnotatedText> known_;
};

std::vector<std::string> surfaces(const TokenSequence& t) {
  std::vector<std::string> out;
  for (const auto& tok : t) out.push_back(tok.surface);
  return out;
}

}  // namespace

TEST_CASE("tokenize splits whitespace and punctuation with exact offsets") {
  const auto t = tokenize("cool-jazz saxophone");
  CHECK(surfaces(t) == std::vector<std::string>{"cool", "-", "jazz", "saxophone"});
  CHECK(t[0].start == 0);
  CHECK(t[0].end == 4);
  CHECK(t[1].start == 4);
  CHECK(t[2].start == 5);
  CHECK(t[3].start == 10);
  CHECK(t[3].end == 19);
  CHECK(tokenize("").empty());
  const auto p = tokenize("piano");
  REQUIRE(p.size() == 1);
  CHECK(p[0].start == 0);
  CHECK(p[0].end == 5);
}

TEST_CASE("token surfaces are exact substrings in increasing order") {
  const std::string text = "  It's a  (slow) ballad...\tby\nthe band!";
  const auto t = tokenize(text);
  std::size_t prev_end = 0;
  for (const auto& tok : t) {
    CHECK(tok.start >= prev_end);
    CHECK(tok.end > tok.start);
    CHECK(text.substr(tok.start, tok.end - tok.start) == tok.surface);
    prev_end = tok.end;
  }
  CHECK(surfaces(tokenize("ballad...")) == std::vector<std::string>{"ballad", ".", ".", "."});
}

TEST_CASE("spans_to_labels marks overlapping tokens") {
  AnnotatedText item{"cool-jazz saxophone", {{0, 9, TextKind::kAspect}}};
  const auto t = tokenize(item.text);
  CHECK(spans_to_labels(item, TextKind::kAspect, t) == std::vector<int>{1, 1, 1, 0});
  CHECK(spans_to_labels(item, TextKind::kSentence, t) == std::vector<int>{0, 0, 0, 0});
  AnnotatedText whole{"cool-jazz saxophone", {{0, 19, TextKind::kSentence}}};
  CHECK(spans_to_labels(whole, TextKind::kSentence, t) == std::vector<int>{1, 1, 1, 1});
  TokenSequence bad{{"x", 30, 31}};
  CHECK_THROWS_AS(spans_to_labels(item, TextKind::kAspect, bad), std::out_of_range);
}

TEST_CASE("annotation validation") {
  CHECK_NOTHROW(validate({"abc def", {{0, 3, TextKind::kAspect}, {0, 7, TextKind::kSentence}}}));
  CHECK_THROWS_AS(validate({"abc", {{2, 2, TextKind::kAspect}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate({"abc", {{0, 9, TextKind::kAspect}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate({"abc def", {{0, 4, TextKind::kAspect}, {3, 7, TextKind::kAspect}}}),
                  std::invalid_argument);
}

TEST_CASE("decode examples") {
  const std::vector<double> p{0, 1, 1, 0, 1};
  using Runs = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(decode_token_runs(p, 0.5) == Runs{{1, 2}, {4, 4}});
  CHECK(decode_token_runs(std::vector<double>{0.1, 0.2}, 0.5).empty());
  CHECK(decode_token_runs(std::vector<double>{0.9, 0.5, 0.7}, 0.5) == Runs{{0, 2}});
  CHECK(decode_token_runs(p, 0.5, 2) == Runs{{1, 2}});

  const auto tokens = tokenize("a slow piano ballad");
  const auto spans = decode_spans(std::vector<double>{0, 1, 1, 0}, tokens, 0.5);
  REQUIRE(spans.size() == 1);
  CHECK(spans[0] == CharSpan{2, 12});
  CHECK(min_tokens_for(TextKind::kSentence) == 3);
  CHECK(min_tokens_for(TextKind::kAspect) == 1);
}

TEST_CASE("decode then relabel reproduces a 0/1 token mask") {
  const std::string text = "one two three four five six seven";
  const auto tokens = tokenize(text);
  for (unsigned mask = 0; mask < (1u << tokens.size()); ++mask) {
    std::vector<double> p(tokens.size());
    std::vector<int> want(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) want[i] = static_cast<int>(p[i] = (mask >> i) & 1u);
    AnnotatedText item{text, {}};
    for (const auto& s : decode_spans(p, tokens, 0.5)) item.spans.push_back({s.start, s.end, TextKind::kAspect});
    CHECK(spans_to_labels(item, TextKind::kAspect, tokens) == want);
  }
}

TEST_CASE("span F1") {
  CHECK(span_f1({}, {}) == 1.0);
  CHECK(span_f1({{0, 3}}, {}) == 0.0);
  CHECK(span_f1({{0, 3}, {4, 6}}, {{0, 3}}) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("tagger training: errors, determinism and persistence") {
  CHECK_THROWS_AS(train_tagger({}, TextKind::kAspect, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(train_tagger({{"nothing here", {}}}, TextKind::kAspect, {}, 1), std::invalid_argument);

  const auto data = toy::annotated_texts(8, 5);
  TaggerConfig cfg;
  cfg.epochs = 15;
  const auto a = train_tagger(data, TextKind::kAspect, cfg, 42);
  const auto b = train_tagger(data, TextKind::kAspect, cfg, 42);
  CHECK(a == b);

  const auto probs = a.predict(tokenize(data[0].text));
  CHECK(probs.size() == tokenize(data[0].text).size());
  for (double p : probs) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }

  TempDir dir("tagger");
  a.save(dir / "a.ckpt");
  const auto back = TaggerModel::load(dir / "a.ckpt");
  CHECK(back == a);
  CHECK(back.predict(tokenize("unseen words , here")) == a.predict(tokenize("unseen words , here")));
}

TEST_CASE("annotation files round trip") {
  TempDir dir("ann");
  const auto data = toy::annotated_texts(5, 9);
  save_annotations(dir / "a.jsonl", data);
  CHECK(load_annotations(dir / "a.jsonl") == data);
}

TEST_CASE("mining with ideal taggers") {
  const std::string caption = "A loose groove that blends muted trumpet and brushed drums with tape hiss";
  const auto pos = [&](const std::string& s) { return caption.find(s); };
  AnnotatedText gold{caption,
                     {{pos("muted trumpet"), pos("muted trumpet") + 13, TextKind::kAspect},
                      {pos("brushed drums"), pos("brushed drums") + 13, TextKind::kAspect},
                      {pos("loose groove"), caption.size(), TextKind::kSentence}}};
  corpus::Corpus c;
  corpus::CorpusRecord r;
  r.track_id = "fig";
  r.audio_ref = "x.wav";
  r.caption = caption;
  r.metadata.instruments = {"muted trumpet", "organ"};
  c.records.push_back(r);
  corpus::CorpusRecord empty;
  empty.track_id = "empty";
  empty.audio_ref = "y.wav";
  c.records.push_back(empty);

  const OracleTagger aspects(TextKind::kAspect, {gold});
  const OracleTagger sentences(TextKind::kSentence, {gold});
  const auto mined = mine_descriptions(c, aspects, sentences, {});
  const auto& d = mined.at("fig");
  CHECK(d.aspect_strings() == std::vector<std::string>{"muted trumpet", "brushed drums", "organ"});
  CHECK(d.sentence_strings() ==
        std::vector<std::string>{"loose groove that blends muted trumpet and brushed drums with tape hiss"});
  CHECK(d.aspects[0].source == Provenance::kCaption);
  CHECK(d.aspects[2].source == Provenance::kMetadata);
  for (const auto& a : d.aspects) {
    if (a.source == Provenance::kCaption) CHECK(caption.find(a.text) != std::string::npos);
  }
  CHECK(mined.at("empty").empty());
  CHECK_THROWS_AS(mine_descriptions(c, sentences, aspects, {}), std::invalid_argument);
}
