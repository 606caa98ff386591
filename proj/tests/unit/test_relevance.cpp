#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "support/stub_model.hpp"
#include "support/tempdir.hpp"
#include "tunetext/json_lines.hpp"
#include "tunetext/relevance.hpp"
#include <set>

using namespace tunetext;
using namespace tunetext::relevance;
using testing::constant_clip;
using testing::planar;
using testing::StubModel;

namespace {

/// Audio direction is the first sample value (an angle); text directions
/// come from a table.
StubModel angle_model(std::map<std::string, double> text_angles) {
  return StubModel([](const AudioClip& c) { return planar(c.samples.front()); },
                   [table = std::move(text_angles)](std::string_view t) {
                     return planar(table.at(std::string(t)));
                   });
}

MinedDescription desc(const std::string& id, std::vector<std::string> aspects,
                      std::vector<std::string> sentences = {}) {
  MinedDescription d;
  d.track_id = id;
  for (auto& a : aspects) d.aspects.push_back({a, Provenance::kCaption, {}});
  for (auto& s : sentences) d.sentences.push_back({s, Provenance::kArticle, {}});
  return d;
}

std::multiset<std::string> texts_of(const MinedMap& m) {
  std::multiset<std::string> out;
  for (const auto& [id, d] : m) {
    for (const auto& a : d.aspects) out.insert(id + "/a/" + a.text);
    for (const auto& s : d.sentences) out.insert(id + "/s/" + s.text);
  }
  return out;
}

}  // namespace

TEST_CASE("segmentation rule") {
  const int rate = 100;
  CHECK(segment_audio(constant_clip(10, 1, rate)).size() == 1);
  const auto b29 = segment_audio(constant_clip(29, 1, rate));
  REQUIRE(b29.size() == 3);
  for (const auto& b : b29) CHECK(b.samples.size() == 1000);
  CHECK(b29[2].samples[899] == 1.0);
  CHECK(b29[2].samples[900] == 0.0);
  CHECK(segment_audio(constant_clip(23, 1, rate)).size() == 2);
  CHECK(segment_audio(constant_clip(25, 1, rate)).size() == 3);
  CHECK(segment_audio(constant_clip(24.99, 1, rate)).size() == 2);
  const auto shortc = segment_audio(constant_clip(3, 1, rate));
  REQUIRE(shortc.size() == 1);
  CHECK(shortc[0].samples.size() == 1000);
  CHECK_THROWS_AS(segment_audio(AudioClip{}), AudioError);
}

TEST_CASE("blocks are consecutive and non-overlapping") {
  AudioClip c;
  c.sample_rate = 100;
  for (int i = 0; i < 3700; ++i) c.samples.push_back(i);
  const auto blocks = segment_audio(c);
  REQUIRE(blocks.size() == 4);
  for (std::size_t b = 0; b < 3; ++b) CHECK(blocks[b].samples.front() == 1000.0 * static_cast<double>(b));
  CHECK(blocks[3].samples.front() == 3000.0);
  CHECK(blocks[3].samples[699] == 3699.0);
}

TEST_CASE("score_pair averages block cosines") {
  const auto m = angle_model({{"t", 0.0}});
  const auto single = score_pair(m, "t", constant_clip(10, 0.3));
  CHECK(single.block_count == 1);
  CHECK(single.score == encoders::similarity(m.embed_audio(constant_clip(10, 0.3)), m.embed_text("t")));

  AudioClip two = constant_clip(10, 0.4);
  const auto second = constant_clip(10, 1.2);
  two.samples.insert(two.samples.end(), second.samples.begin(), second.samples.end());
  const auto r = score_pair(m, "t", two);
  CHECK(r.block_count == 2);
  CHECK(r.score == doctest::Approx((std::cos(0.4) + std::cos(1.2)) / 2));

  const auto same = angle_model({{"x", 0.7}});
  AudioClip same_clip = constant_clip(25, 0.7);
  CHECK(score_pair(same, "x", same_clip).score == doctest::Approx(1.0));
  CHECK_THROWS_AS(score_pair(m, "", two), std::invalid_argument);
}

TEST_CASE("filtering partitions by score sign and keeps zero") {
  const double half_pi = std::acos(0.0);
  const auto m = angle_model({{"match", 0.0}, {"orthogonal", half_pi}, {"opposite", 2 * half_pi},
                              {"near", 0.5}, {"a long sentence here", 0.2}});
  const MinedMap mined{{"t1", desc("t1", {"match", "opposite", "orthogonal"}, {"a long sentence here"})},
                       {"t2", desc("t2", {"near"})}};
  const auto res = filter_dataset(m, mined, [&](const std::string&) { return constant_clip(10, 0.0); });

  const auto& t1 = res.filtered.at("t1");
  CHECK(t1.aspect_strings() == std::vector<std::string>{"match", "orthogonal"});
  CHECK(t1.sentence_strings() == std::vector<std::string>{"a long sentence here"});
  REQUIRE(res.report.removed.size() == 1);
  CHECK(res.report.removed[0].text == "opposite");
  CHECK(res.report.kept.size() == 4);
  for (const auto& r : res.report.kept) CHECK(r.score >= 0.0);
  CHECK(t1.aspects[0].score.has_value());

  // kept + removed reconstructs the input exactly
  std::multiset<std::string> parts;
  for (const auto& r : res.report.kept) parts.insert(r.track_id + (r.kind == TextKind::kAspect ? "/a/" : "/s/") + r.text);
  for (const auto& r : res.report.removed) parts.insert(r.track_id + (r.kind == TextKind::kAspect ? "/a/" : "/s/") + r.text);
  CHECK(parts == texts_of(mined));

  // idempotent
  const auto twice = filter_dataset(m, res.filtered, [&](const std::string&) { return constant_clip(10, 0.0); });
  CHECK(twice.filtered == res.filtered);
  CHECK(twice.report.removed.empty());
}

TEST_CASE("all-negative scores empty the description but keep the track") {
  const auto m = angle_model({{"a", 2.1}, {"b", 2.1}});
  const auto res = filter_dataset(m, {{"t", desc("t", {"a", "b"})}},
                                  [](const std::string&) { return constant_clip(10, 0.0); });
  REQUIRE(res.filtered.count("t"));
  CHECK(res.filtered.at("t").empty());
  CHECK(res.report.removed.size() == 2);
  for (const auto& r : res.report.removed) CHECK(r.score == doctest::Approx(std::cos(2.1)));
}

TEST_CASE("raising the threshold never grows the kept set") {
  std::map<std::string, double> angles;
  std::vector<std::string> aspects;
  for (int i = 0; i < 20; ++i) {
    const auto name = "x" + std::to_string(i);
    angles[name] = 0.16 * i;
    aspects.push_back(name);
  }
  const auto m = angle_model(angles);
  const MinedMap mined{{"t", desc("t", aspects)}};
  auto audio = [](const std::string&) { return constant_clip(10, 0.0); };
  std::size_t prev = 1000;
  for (double thr : {-1.0, -0.5, 0.0, 0.3, 0.6, 0.9, 1.0}) {
    const auto n = filter_dataset(m, mined, audio, thr).report.kept.size();
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("unresolvable audio passes the track through, flagged") {
  const auto m = angle_model({{"a", 0.0}, {"b", 3.0}});
  const MinedMap mined{{"ok", desc("ok", {"a", "b"})}, {"lost", desc("lost", {"a", "b"})}};
  const auto res = filter_dataset(m, mined, [](const std::string& id) {
    if (id == "lost") throw AudioError("no such file");
    return constant_clip(10, 0.0);
  });
  CHECK(res.filtered.at("lost") == mined.at("lost"));
  REQUIRE(res.report.errors.size() == 1);
  CHECK(res.report.errors[0].track_id == "lost");
  CHECK(res.filtered.at("ok").aspect_strings() == std::vector<std::string>{"a"});
}

TEST_CASE("filter report lines") {
  testing::TempDir dir("rel");
  const auto m = angle_model({{"a", 0.0}, {"b", 3.0}});
  const auto res = filter_dataset(m, {{"t", desc("t", {"a", "b"})}},
                                  [](const std::string&) { return constant_clip(10, 0.0); });
  save_report(dir / "r.jsonl", res.report);
  std::vector<nlohmann::json> rows;
  for_each_json_line(dir / "r.jsonl", [&](const nlohmann::json& j, std::size_t) { rows.push_back(j); });
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    for (const char* key : {"track_id", "kind", "text", "score", "kept"}) CHECK(r.contains(key));
  }
  CHECK(rows[0]["kind"] == "aspect");
}

TEST_CASE("a score of exactly zero is kept") {
  const StubModel m([](const AudioClip&) { return planar(0.0); },
                    [](std::string_view) {
                      std::vector<double> v(encoders::kEmbeddingDim, 0.0);
                      v[2] = 1.0;
                      return encoders::Embedding{v};
                    });
  const auto res = filter_dataset(m, {{"t", desc("t", {"z"})}},
                                  [](const std::string&) { return constant_clip(10, 0.0); });
  REQUIRE(res.report.kept.size() == 1);
  CHECK(res.report.kept[0].score == 0.0);
}
