#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support/gradcheck.hpp"
#include "support/stub_model.hpp"
#include "support/tempdir.hpp"
#include "tunetext/evalharness.hpp"
#include "tunetext/json_lines.hpp"

using namespace tunetext;
using namespace tunetext::eval;
using testing::constant_clip;
using testing::planar;
using testing::StubModel;

namespace {

StubModel angle_model(std::map<std::string, double> text_angles) {
  return StubModel([](const AudioClip& c) { return planar(c.samples.front()); },
                   [table = std::move(text_angles)](std::string_view t) {
                     return planar(table.at(std::string(t)));
                   });
}

}  // namespace

TEST_CASE("recall@k examples") {
  const std::vector<std::string> ranking{"a", "x", "b", "y", "c", "d"};
  const std::set<std::string> rel{"a", "b", "c", "d"};
  CHECK(recall_at_k(ranking, rel, 3) == 0.5);
  CHECK(recall_at_k(ranking, rel, 6) == 1.0);
  CHECK(recall_at_k(ranking, {"z"}, 6) == 0.0);
  CHECK(recall_at_k(ranking, rel, 100) == 1.0);
  CHECK_THROWS_AS(recall_at_k(ranking, {}, 3), std::invalid_argument);
  CHECK_THROWS_AS(recall_at_k(ranking, rel, 0), std::invalid_argument);
}

TEST_CASE("average precision@k examples") {
  const std::vector<std::string> ranking{"r1", "n", "r2"};
  CHECK(average_precision_at_k(ranking, {"r1", "r2"}, 3) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(average_precision_at_k({"a", "b", "c"}, {"a", "b"}, 3) == 1.0);
  CHECK(average_precision_at_k({"a", "b", "c"}, {"a", "b", "c", "d", "e"}, 3) == 1.0);
  CHECK(average_precision_at_k({"x", "y"}, {"a"}, 2) == 0.0);
}

TEST_CASE("ROC-AUC and PR-AUC") {
  CHECK(roc_auc({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}) == 0.75);
  CHECK(roc_auc({0.9, 0.8, 0.1}, {1, 1, 0}) == 1.0);
  CHECK(pr_auc({0.9, 0.8, 0.1}, {1, 1, 0}) == 1.0);
  CHECK(roc_auc({0.5, 0.5}, {1, 0}) == 0.5);
  CHECK(pr_auc({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(pr_auc({0.5, 0.5, 0.5, 0.1}, {1, 0, 0, 1}) == doctest::Approx(0.5 * (1.0 / 3.0) + 0.5 * 0.5));
  CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(pr_auc({0.1, 0.2}, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(roc_auc({0.1}, {1, 0}), std::invalid_argument);
}

TEST_CASE("metrics are invariant under monotone transforms and positive scaling") {
  nn::Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + nn::uniform_index(rng, 20);
    std::vector<double> s(n);
    std::vector<int> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(10 * nn::uniform01(rng)) / 10;
      t[i] = static_cast<int>(nn::uniform_index(rng, 2));
    }
    t[0] = 1;
    t[1] = 0;
    std::vector<double> cubed(n), scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
      cubed[i] = std::exp(3 * s[i]) - 7;
      scaled[i] = 2.5 * s[i];
    }
    CHECK(roc_auc(s, t) == roc_auc(cubed, t));
    CHECK(pr_auc(s, t) == pr_auc(cubed, t));
    CHECK(roc_auc(s, t) == roc_auc(scaled, t));
    CHECK(pr_auc(s, t) == pr_auc(scaled, t));
  }
}

TEST_CASE("accuracy and argmax") {
  CHECK(accuracy({0, 1, 2}, {0, 1, 2}) == 1.0);
  CHECK(accuracy({0, 1, 2, 2}, {0, 1, 1, 0}) == 0.5);
  CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy({1}, {1, 2}), std::invalid_argument);
  TagPredictionMatrix m;
  m.rows = 2;
  m.cols = 3;
  m.labels = {"a", "b", "c"};
  m.scores = {0.1, 0.5, 0.5, 0.9, -1.0, 0.2};
  m.truth.assign(6, 0);
  CHECK(argmax_rows(m) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("ranking ties break by track id") {
  const std::vector<std::string> ids{"c", "a", "b"};
  const std::vector<encoders::Embedding> audio{planar(0.0), planar(0.0), planar(1.0)};
  const auto r = rank_tracks(ids, audio, planar(0.0));
  CHECK(r[0].track_id == "a");
  CHECK(r[1].track_id == "c");
  CHECK(r[2].track_id == "b");
}

TEST_CASE("embed_collection pads short clips and averages blocks of long ones") {
  const auto m = angle_model({});
  const auto e10 = embed_collection(m, {constant_clip(10, 0.3)});
  CHECK(e10[0] == planar(0.3));
  AudioClip twenty = constant_clip(10, 0.2);
  const auto second = constant_clip(10, 1.0);
  twenty.samples.insert(twenty.samples.end(), second.samples.begin(), second.samples.end());
  const auto e20 = embed_collection(m, {twenty})[0];
  std::vector<double> mean(encoders::kEmbeddingDim, 0.0);
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = 0.5 * (planar(0.2).values[i] + planar(1.0).values[i]);
  const auto want = encoders::normalized(mean);
  for (std::size_t i = 0; i < 2; ++i) CHECK(e20.values[i] == doctest::Approx(want.values[i]).epsilon(1e-14));
  CHECK(embed_collection(m, {constant_clip(4, 0.5)})[0] == planar(0.5));
  const auto same = embed_collection(m, {constant_clip(10, 0.5), constant_clip(10, 0.5)});
  CHECK(same[0] == same[1]);
  CHECK_THROWS_AS(embed_collection(m, {}), std::invalid_argument);
}

TEST_CASE("relevance index matches labels verbatim") {
  const auto idx = QueryRelevanceIndex::from_labels({{"t1", {"Jazz", "piano"}}, {"t2", {"jazz"}}, {"t3", {"piano", ""}}});
  REQUIRE(idx.size() == 3);
  CHECK(idx.queries().at("Jazz") == std::set<std::string>{"t1"});
  CHECK(idx.queries().at("jazz") == std::set<std::string>{"t2"});
  CHECK(idx.queries().at("piano") == std::set<std::string>{"t1", "t3"});
}

TEST_CASE("separable retrieval scores perfectly; cutoffs are reported") {
  std::map<std::string, double> angles;
  EmbeddedCollection col;
  std::vector<std::pair<std::string, std::vector<std::string>>> labels;
  for (int i = 0; i < 12; ++i) {
    const std::string id = "t" + std::to_string(i), tag = "tag" + std::to_string(i);
    angles[tag] = 0.5 * i;
    col.track_ids.push_back(id);
    col.audio.push_back(planar(0.5 * i));
    labels.push_back({id, {tag}});
  }
  const auto m = angle_model(angles);
  const auto idx = QueryRelevanceIndex::from_labels(labels);
  const auto rep = evaluate_retrieval(m, col, idx);
  CHECK(rep.values.at("mAP@10") == 1.0);
  CHECK(rep.values.at("R@1") == 1.0);
  CHECK(rep.values.count("R@5"));
  CHECK(rep.values.count("R@10"));
  CHECK(rep.query_count == 12);
  const auto j = rep.to_json();
  CHECK(j["percent"]["R@1"] == "100.0");
  CHECK(evaluate_retrieval(m, col, idx).to_json() == j);

  auto missing = QueryRelevanceIndex::from_labels({{"nobody", {"tag1"}}});
  CHECK_THROWS_AS(evaluate_retrieval(m, col, missing), std::invalid_argument);
  const auto results = retrieve(m, col, idx, 3);
  CHECK(results.size() == 12);
  CHECK(results[0].ranking.size() == 3);
}

TEST_CASE("random embeddings give recall near k/N") {
  nn::Rng rng(17);
  const std::size_t n = 40;
  double r1 = 0, r5 = 0;
  const int reps = 30;
  for (int rep = 0; rep < reps; ++rep) {
    EmbeddedCollection col;
    std::map<std::string, encoders::Embedding> text;
    std::vector<std::pair<std::string, std::vector<std::string>>> labels;
    auto rand_emb = [&] {
      std::vector<double> v(encoders::kEmbeddingDim);
      for (auto& x : v) x = nn::normal(rng);
      return encoders::normalized(v);
    };
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "t" + std::to_string(i), q = "q" + std::to_string(i);
      col.track_ids.push_back(id);
      col.audio.push_back(rand_emb());
      text[q] = rand_emb();
      labels.push_back({id, {q}});
    }
    const StubModel m([](const AudioClip&) { return planar(0); },
                      [&](std::string_view t) { return text.at(std::string(t)); });
    const auto rep_metrics = evaluate_retrieval(m, col, QueryRelevanceIndex::from_labels(labels), {1, 5});
    r1 += rep_metrics.values.at("R@1");
    r5 += rep_metrics.values.at("R@5");
  }
  // Each average covers 1200 queries; bounds are about 3.3 standard errors.
  CHECK(std::abs(r1 / reps - 1.0 / n) < 0.015);
  CHECK(std::abs(r5 / reps - 5.0 / n) < 0.035);
}

TEST_CASE("zero-shot matrix and tagging macro average") {
  const auto m = angle_model({{"up", 0.0}, {"side", 1.5}});
  const std::vector<encoders::Embedding> audio{planar(0.0), planar(1.5), planar(0.1)};
  auto zs = zero_shot_scores(m, audio, {"up", "side"});
  CHECK(zs.rows == 3);
  CHECK(zs.cols == 2);
  CHECK(zs.score(0, 0) == doctest::Approx(1.0));
  CHECK(zs.score(1, 0) == doctest::Approx(std::cos(1.5)));
  CHECK(zs.score(2, 1) == doctest::Approx(std::cos(1.4)));
  set_truth(zs, {{"up"}, {"side"}, {"up"}});
  const auto t = evaluate_tagging(zs);
  CHECK(t.roc_auc == 1.0);
  CHECK(t.pr_auc == 1.0);
  CHECK(t.skipped.empty());

  set_truth(zs, {{"up"}, {"up"}, {"up"}});
  CHECK_THROWS_AS(evaluate_tagging(zs), std::invalid_argument);
  set_truth(zs, {{"up"}, {"side"}, {"up", "side"}});
  const auto partial = evaluate_tagging(zs);
  CHECK(partial.used.size() == 2);

  CHECK_THROWS_AS(zero_shot_scores(m, audio, {}), std::invalid_argument);
  CHECK_THROWS_AS(zero_shot_scores(m, audio, {"up", ""}), std::invalid_argument);
}

TEST_CASE("manifest round trip and duplicate rejection") {
  testing::TempDir dir("manifest");
  const std::vector<EvalItem> items{{"a", "a.wav", {"jazz", "piano"}, "jazz"}, {"b", "/abs/b.wav", {}, std::nullopt}};
  save_manifest(dir / "m.jsonl", items);
  CHECK(load_manifest(dir / "m.jsonl") == items);
  CHECK(resolve_ref(dir.path(), "a.wav") == dir / "a.wav");
  CHECK(resolve_ref(dir.path(), "/abs/b.wav") == std::filesystem::path("/abs/b.wav"));
  save_manifest(dir / "dup.jsonl", {items[0], items[0]});
  CHECK_THROWS_AS(load_manifest(dir / "dup.jsonl"), ParseError);
}

TEST_CASE("cached-feature validator agrees with the generic path") {
  const encoders::TowerModel model(testing::tiny_tower(), encoders::build_vocabulary({"warm", "cold", "slow"}), 2);
  nn::Rng rng(3);
  std::vector<std::string> ids{"t0", "t1", "t2", "t3"};
  std::vector<AudioClip> clips;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    AudioClip c;
    c.sample_rate = model.sample_rate();
    c.samples.resize(i % 2 ? 900 : 300);
    for (auto& x : c.samples) x = nn::normal(rng);
    clips.push_back(c);
  }
  const auto idx = QueryRelevanceIndex::from_labels({{"t0", {"warm"}}, {"t1", {"cold", "warm"}}, {"t3", {"slow"}}});
  const RetrievalValidator v(model, ids, clips, idx);
  const auto generic = evaluate_retrieval(model, embed_items(model, ids, clips), idx, {10});
  CHECK(v(model) == generic.values.at("mAP@10"));
}
