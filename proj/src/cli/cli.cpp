#include "tunetext/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tunetext/corpus.hpp"
#include "tunetext/evalharness.hpp"
#include "tunetext/json_lines.hpp"
#include "tunetext/relevance.hpp"

namespace tunetext::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string direction_name(contrastive::LossDirection d) {
  return d == contrastive::LossDirection::kSymmetric ? "symmetric" : "audio_to_text";
}

contrastive::LossDirection direction_from(const std::string& s) {
  if (s == "audio_to_text") return contrastive::LossDirection::kAudioToText;
  if (s == "symmetric") return contrastive::LossDirection::kSymmetric;
  throw UsageError("unknown loss direction '" + s + "'");
}

std::string sentence_mode_name(contrastive::SentenceMode m) {
  return m == contrastive::SentenceMode::kConsecutivePrefix ? "consecutive_prefix"
                                                             : "random_subset";
}

contrastive::SentenceMode sentence_mode_from(const std::string& s) {
  if (s == "random_subset") return contrastive::SentenceMode::kRandomSubset;
  if (s == "consecutive_prefix") return contrastive::SentenceMode::kConsecutivePrefix;
  throw UsageError("unknown sentence mode '" + s + "'");
}

json training_to_json(const TrainingSection& t) {
  return {{"batch_size", t.batch.batch_size},
          {"max_aspects_per_text", t.batch.max_aspects_per_text},
          {"aspect_join_delimiter", t.batch.aspect_join_delimiter},
          {"sentence_join_delimiter", t.batch.sentence_join_delimiter},
          {"temperature", t.loss.temperature},
          {"direction", direction_name(t.loss.direction)},
          {"initial_lr", t.schedule.initial_lr},
          {"lr_decay_factor", t.schedule.lr_decay_factor},
          {"lr_patience_epochs", t.schedule.lr_patience_epochs},
          {"early_stop_patience_epochs", t.schedule.early_stop_patience_epochs},
          {"max_epochs", t.schedule.max_epochs},
          {"sentence_mode", sentence_mode_name(t.sentences.mode)}};
}

TrainingSection training_from_json(const json& j) {
  TrainingSection t;
  t.batch.batch_size = j.value("batch_size", t.batch.batch_size);
  t.batch.max_aspects_per_text = j.value("max_aspects_per_text", t.batch.max_aspects_per_text);
  t.batch.aspect_join_delimiter = j.value("aspect_join_delimiter", t.batch.aspect_join_delimiter);
  t.batch.sentence_join_delimiter =
      j.value("sentence_join_delimiter", t.batch.sentence_join_delimiter);
  t.loss.temperature = j.value("temperature", t.loss.temperature);
  if (j.contains("direction")) t.loss.direction = direction_from(j.at("direction"));
  t.schedule.initial_lr = j.value("initial_lr", t.schedule.initial_lr);
  t.schedule.lr_decay_factor = j.value("lr_decay_factor", t.schedule.lr_decay_factor);
  t.schedule.lr_patience_epochs = j.value("lr_patience_epochs", t.schedule.lr_patience_epochs);
  t.schedule.early_stop_patience_epochs =
      j.value("early_stop_patience_epochs", t.schedule.early_stop_patience_epochs);
  t.schedule.max_epochs = j.value("max_epochs", t.schedule.max_epochs);
  if (j.contains("sentence_mode")) t.sentences.mode = sentence_mode_from(j.at("sentence_mode"));
  return t;
}

void put_path(json& j, const char* key, const std::optional<fs::path>& p) {
  if (p) j[key] = p->generic_string();
}

void get_path(const json& j, const char* key, std::optional<fs::path>& p) {
  if (j.contains(key) && !j.at(key).is_null()) p = fs::path(j.at(key).get<std::string>());
}

fs::path require_input(const std::optional<fs::path>& p, const std::string& flag) {
  if (!p) throw UsageError("missing required input --" + flag);
  if (!fs::exists(*p)) throw UsageError("--" + flag + " path does not exist: " + p->string());
  return *p;
}

void prepare_out(const RunConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.out);
  write_json_file(cfg.out / "config.json", cfg.to_json(command));
}

void validate_training(const TrainingSection& t) {
  if (!(t.loss.temperature > 0.0)) throw UsageError("temperature must be positive");
  if (t.batch.batch_size < 2) throw UsageError("batch_size must be at least 2");
  if (t.batch.max_aspects_per_text == 0) throw UsageError("max_aspects_per_text must be >= 1");
  try {
    t.schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

AudioClip load_track_audio(const corpus::Corpus& c, const fs::path& base,
                           const std::string& track_id) {
  const auto* rec = c.find(track_id);
  if (!rec) throw std::runtime_error("track '" + track_id + "' is not in the corpus");
  return read_wav(corpus::resolve_audio(base, rec->audio_ref));
}

}  // namespace

json RunConfig::to_json(const std::string& command) const {
  json j;
  if (!command.empty()) j["command"] = command;
  j["seed"] = seed;
  j["out"] = out.generic_string();
  json in = json::object();
  put_path(in, "corpus", inputs.corpus);
  put_path(in, "mined", inputs.mined);
  put_path(in, "annotations", inputs.annotations);
  put_path(in, "aspect_tagger", inputs.aspect_tagger);
  put_path(in, "sentence_tagger", inputs.sentence_tagger);
  put_path(in, "checkpoint", inputs.checkpoint);
  put_path(in, "manifest", inputs.manifest);
  j["inputs"] = in;
  const bool all = command.empty();
  if (all || command == "mine") {
    j["tagger"] = tagger.to_json();
    j["mining"] = {{"threshold", mining.threshold}};
  }
  if (all || command == "train") {
    j["tower"] = tower.to_json();
    j["training"] = training_to_json(training);
  }
  if (all || command == "filter") j["filter"] = {{"threshold", filter_threshold}};
  if (all || command == "eval") j["eval"] = {{"task", eval.task}, {"ks", eval.ks}};
  if (all || command == "query") j["query"] = {{"text", query.text}, {"k", query.k}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  try {
    if (!j.is_object()) throw UsageError("configuration must be a JSON object");
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("inputs")) {
      const auto& in = j.at("inputs");
      get_path(in, "corpus", c.inputs.corpus);
      get_path(in, "mined", c.inputs.mined);
      get_path(in, "annotations", c.inputs.annotations);
      get_path(in, "aspect_tagger", c.inputs.aspect_tagger);
      get_path(in, "sentence_tagger", c.inputs.sentence_tagger);
      get_path(in, "checkpoint", c.inputs.checkpoint);
      get_path(in, "manifest", c.inputs.manifest);
    }
    if (j.contains("tagger")) c.tagger = textminer::TaggerConfig::from_json(j.at("tagger"));
    if (j.contains("mining")) {
      c.mining.threshold = j.at("mining").value("threshold", c.mining.threshold);
    }
    if (j.contains("tower")) c.tower = encoders::TowerConfig::from_json(j.at("tower"));
    if (j.contains("training")) c.training = training_from_json(j.at("training"));
    if (j.contains("filter")) {
      c.filter_threshold = j.at("filter").value("threshold", c.filter_threshold);
    }
    if (j.contains("eval")) {
      c.eval.task = j.at("eval").value("task", c.eval.task);
      c.eval.ks = j.at("eval").value("ks", c.eval.ks);
    }
    if (j.contains("query")) {
      c.query.text = j.at("query").value("text", c.query.text);
      c.query.k = j.at("query").value("k", c.query.k);
    }
    return c;
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
}

int cmd_mine(const RunConfig& cfg) {
  const fs::path corpus_path = require_input(cfg.inputs.corpus, "corpus");
  const bool from_annotations = cfg.inputs.annotations.has_value();
  if (!from_annotations && !(cfg.inputs.aspect_tagger && cfg.inputs.sentence_tagger)) {
    throw UsageError("mine needs --annotations or both --aspect-tagger and --sentence-tagger");
  }
  if (from_annotations) {
    require_input(cfg.inputs.annotations, "annotations");
  } else {
    require_input(cfg.inputs.aspect_tagger, "aspect-tagger");
    require_input(cfg.inputs.sentence_tagger, "sentence-tagger");
  }
  prepare_out(cfg, "mine");

  const auto corpus = corpus::load_corpus(corpus_path);
  std::optional<textminer::TaggerModel> aspect, sentence;
  if (from_annotations) {
    const auto data = textminer::load_annotations(*cfg.inputs.annotations);
    aspect = textminer::train_tagger(data, TextKind::kAspect, cfg.tagger, cfg.seed);
    sentence = textminer::train_tagger(data, TextKind::kSentence, cfg.tagger, cfg.seed);
    aspect->save(cfg.out / "aspect_tagger.ckpt");
    sentence->save(cfg.out / "sentence_tagger.ckpt");
    spdlog::info("mine: trained taggers on {} annotated texts", data.size());
  } else {
    aspect = textminer::TaggerModel::load(*cfg.inputs.aspect_tagger);
    sentence = textminer::TaggerModel::load(*cfg.inputs.sentence_tagger);
    if (aspect->kind() != TextKind::kAspect || sentence->kind() != TextKind::kSentence) {
      throw UsageError("tagger checkpoints are of the wrong kind");
    }
  }

  const auto mined = textminer::mine_descriptions(corpus, *aspect, *sentence, cfg.mining);
  save_mined(cfg.out / "mined.jsonl", mined);

  const fs::path base = corpus_path.parent_path();
  const auto stats = corpus::compute_stats(
      corpus, mined, [&](const corpus::CorpusRecord& r) -> std::optional<double> {
        try {
          return wav_duration_s(corpus::resolve_audio(base, r.audio_ref));
        } catch (const std::exception&) {
          return std::nullopt;
        }
      });
  write_json_file(cfg.out / "stats.json", corpus::stats_to_json(stats));
  spdlog::info("mine: {} tracks with descriptions", mined.size());
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  const fs::path corpus_path = require_input(cfg.inputs.corpus, "corpus");
  const fs::path mined_path = require_input(cfg.inputs.mined, "mined");
  validate_training(cfg.training);
  prepare_out(cfg, "train");

  const auto corpus = corpus::load_corpus(corpus_path);
  const auto mined = load_mined(mined_path);
  const fs::path base = corpus_path.parent_path();

  std::vector<contrastive::TrainingItem> items;
  std::vector<std::string> texts;
  for (const auto* r : corpus.in_split(corpus::Split::kTrain)) {
    auto it = mined.find(r->track_id);
    if (it == mined.end() || it->second.empty()) {
      spdlog::debug("train: '{}' has no mined texts, skipped", r->track_id);
      continue;
    }
    for (const auto& s : it->second.aspect_strings()) texts.push_back(s);
    for (const auto& s : it->second.sentence_strings()) texts.push_back(s);
    items.push_back({r->track_id, read_wav(corpus::resolve_audio(base, r->audio_ref)),
                     it->second});
  }
  if (items.size() < 2) throw std::runtime_error("fewer than two trainable tracks");

  std::vector<std::string> valid_ids;
  std::vector<AudioClip> valid_clips;
  std::vector<std::pair<std::string, std::vector<std::string>>> valid_labels;
  for (const auto* r : corpus.in_split(corpus::Split::kValid)) {
    auto it = mined.find(r->track_id);
    valid_ids.push_back(r->track_id);
    valid_clips.push_back(read_wav(corpus::resolve_audio(base, r->audio_ref)));
    valid_labels.emplace_back(r->track_id, it == mined.end() ? std::vector<std::string>{}
                                                             : it->second.aspect_strings());
  }
  auto index = eval::QueryRelevanceIndex::from_labels(valid_labels);
  if (index.empty()) throw std::runtime_error("validation split has no labelled tracks");

  encoders::TowerModel model(cfg.tower, encoders::build_vocabulary(texts), cfg.seed);
  const eval::RetrievalValidator validator(model, valid_ids, valid_clips, std::move(index));

  contrastive::TrainOptions opts;
  opts.batch = cfg.training.batch;
  opts.loss = cfg.training.loss;
  opts.schedule = cfg.training.schedule;
  opts.sentences = cfg.training.sentences;
  opts.seed = cfg.seed;

  try {
    auto result = contrastive::train(
        std::move(model), items,
        [&](const encoders::TowerModel& m) { return validator(m); }, opts);
    result.model.save(cfg.out / "model.ckpt");
    contrastive::save_history(cfg.out / "history.jsonl", result.history);
    write_json_file(cfg.out / "training.json",
                    {{"train_tracks", items.size()},
                     {"valid_tracks", valid_ids.size()},
                     {"epochs", result.history.epochs.size()},
                     {"best_epoch", result.history.best_epoch.value_or(0)},
                     {"best_val_map10", result.history.best_score},
                     {"early_stopped", result.history.early_stopped}});
    spdlog::info("train: best epoch {} with validation mAP@10 {:.4f}",
                 result.history.best_epoch.value_or(0), result.history.best_score);
  } catch (const contrastive::TrainingAborted& e) {
    contrastive::save_history(cfg.out / "history.jsonl", e.history());
    throw;
  }
  return kExitOk;
}

int cmd_filter(const RunConfig& cfg) {
  const fs::path ckpt = require_input(cfg.inputs.checkpoint, "checkpoint");
  const fs::path corpus_path = require_input(cfg.inputs.corpus, "corpus");
  const fs::path mined_path = require_input(cfg.inputs.mined, "mined");
  prepare_out(cfg, "filter");

  const auto model = encoders::TowerModel::load(ckpt);
  const auto corpus = corpus::load_corpus(corpus_path);
  const auto mined = load_mined(mined_path);
  const fs::path base = corpus_path.parent_path();

  const auto result = relevance::filter_dataset(
      model, mined, [&](const std::string& id) { return load_track_audio(corpus, base, id); },
      cfg.filter_threshold);
  save_mined(cfg.out / "filtered.jsonl", result.filtered);
  relevance::save_report(cfg.out / "filter_report.jsonl", result.report);
  spdlog::info("filter: kept {}, removed {}, {} tracks passed through", result.report.kept.size(),
               result.report.removed.size(), result.report.errors.size());
  return kExitOk;
}

namespace {

struct LoadedCollection {
  std::vector<eval::EvalItem> items;
  eval::EmbeddedCollection embedded;
};

LoadedCollection load_collection(const encoders::EmbeddingModel& model,
                                 const fs::path& manifest) {
  LoadedCollection out;
  out.items = eval::load_manifest(manifest);
  if (out.items.empty()) throw std::runtime_error("manifest is empty");
  std::vector<std::string> ids;
  std::vector<AudioClip> clips;
  for (const auto& it : out.items) {
    ids.push_back(it.track_id);
    clips.push_back(read_wav(eval::resolve_ref(manifest.parent_path(), it.audio_ref)));
  }
  out.embedded = eval::embed_items(model, ids, clips);
  return out;
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

int cmd_eval(const RunConfig& cfg) {
  const auto& task = cfg.eval.task;
  if (task != "retrieval" && task != "tagging" && task != "classification") {
    throw UsageError("unknown task '" + task + "' (expected retrieval, tagging or classification)");
  }
  if (cfg.eval.ks.empty() ||
      std::any_of(cfg.eval.ks.begin(), cfg.eval.ks.end(), [](std::size_t k) { return k == 0; })) {
    throw UsageError("--ks needs positive cutoffs");
  }
  const fs::path ckpt = require_input(cfg.inputs.checkpoint, "checkpoint");
  const fs::path manifest = require_input(cfg.inputs.manifest, "manifest");
  prepare_out(cfg, "eval");

  const auto model = encoders::TowerModel::load(ckpt);
  const auto col = load_collection(model, manifest);

  eval::MetricsReport report;
  if (task == "retrieval") {
    report = eval::evaluate_retrieval(model, col.embedded,
                                      eval::QueryRelevanceIndex::from_items(col.items),
                                      cfg.eval.ks);
  } else if (task == "tagging") {
    std::vector<std::string> all;
    std::vector<std::vector<std::string>> truth;
    for (const auto& it : col.items) {
      all.insert(all.end(), it.labels.begin(), it.labels.end());
      truth.push_back(it.labels);
    }
    auto m = eval::zero_shot_scores(model, col.embedded.audio, sorted_unique(all));
    eval::set_truth(m, truth);
    const auto t = eval::evaluate_tagging(m);
    report.values["ROC-AUC"] = t.roc_auc;
    report.values["PR-AUC"] = t.pr_auc;
    report.skipped = t.skipped;
  } else {
    std::vector<std::string> all;
    for (const auto& it : col.items) {
      if (!it.single_label) {
        throw std::runtime_error("track '" + it.track_id + "' has no single_label");
      }
      all.push_back(*it.single_label);
    }
    const auto labels = sorted_unique(all);
    const auto m = eval::zero_shot_scores(model, col.embedded.audio, labels);
    std::vector<std::size_t> truth;
    for (const auto& l : all) {
      truth.push_back(static_cast<std::size_t>(
          std::lower_bound(labels.begin(), labels.end(), l) - labels.begin()));
    }
    report.values["accuracy"] = eval::accuracy(eval::argmax_rows(m), truth);
  }
  report.run["task"] = task;
  report.run["model"] = ckpt.filename().string();
  report.run["dataset"] = manifest.stem().string();
  report.run["seed"] = cfg.seed;
  report.run["ks"] = cfg.eval.ks;
  report.run["tracks"] = col.items.size();
  write_json_file(cfg.out / "metrics.json", report.to_json());
  for (const auto& [name, v] : report.values) {
    std::cout << name << "\t" << eval::format_percent(v) << "\n";
  }
  return kExitOk;
}

int cmd_query(const RunConfig& cfg) {
  if (cfg.query.text.empty()) throw UsageError("--query must not be empty");
  if (cfg.query.k == 0) throw UsageError("--k must be >= 1");
  const fs::path ckpt = require_input(cfg.inputs.checkpoint, "checkpoint");
  const fs::path manifest = require_input(cfg.inputs.manifest, "manifest");
  prepare_out(cfg, "query");

  const auto model = encoders::TowerModel::load(ckpt);
  const auto col = load_collection(model, manifest);
  auto ranked = eval::rank_tracks(col.embedded.track_ids, col.embedded.audio,
                                  model.embed_text(cfg.query.text));
  if (ranked.size() > cfg.query.k) ranked.resize(cfg.query.k);

  std::ofstream tsv(cfg.out / "query.tsv");
  if (!tsv) throw std::runtime_error("cannot write " + (cfg.out / "query.tsv").string());
  tsv << "rank\ttrack_id\tscore\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    char score[32];
    std::snprintf(score, sizeof score, "%.6f", ranked[i].score);
    tsv << i + 1 << "\t" << ranked[i].track_id << "\t" << score << "\n";
    std::cout << i + 1 << "\t" << ranked[i].track_id << "\t" << score << "\n";
  }
  return kExitOk;
}

namespace {

void setup_logging(bool verbose, bool quiet) {
  auto logger = spdlog::get("tunetext");
  if (!logger) logger = spdlog::stderr_color_mt("tunetext");
  spdlog::set_default_logger(logger);
  spdlog::set_level(quiet ? spdlog::level::warn
                          : verbose ? spdlog::level::debug : spdlog::level::info);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Mine, train, filter and evaluate music-text embedding models", "tunetext"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool verbose = false, quiet = false;
  auto* o_config = app.add_option("--config", config_path, "JSON configuration file");
  auto* o_seed = app.add_option("--seed", seed, "Random seed");
  auto* o_out = app.add_option("--out", out_dir, "Output directory");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  std::string corpus, mined, annotations, aspect_tagger, sentence_tagger, checkpoint, manifest;
  std::string task, query_text, direction;
  double mining_threshold = 0.5, filter_threshold = 0.0, tau = 0.0, lr = 0.0;
  std::size_t batch_size = 0, max_epochs = 0, k = 0;
  std::vector<std::size_t> ks;

  auto* mine = app.add_subcommand("mine", "Extract aspects and sentences from a corpus");
  auto* train = app.add_subcommand("train", "Train the two-tower model");
  auto* filter = app.add_subcommand("filter", "Drop mined texts that do not match their audio");
  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
  auto* query = app.add_subcommand("query", "Rank a manifest's tracks for a free-text query");
  for (auto* sub : {mine, train, filter, evalc, query}) sub->fallthrough();

  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
  auto path_opt = [&](CLI::App* sub, const std::string& flag, std::string& var,
                      std::optional<fs::path> Inputs::*member, const std::string& help) {
    auto* o = sub->add_option("--" + flag, var, help);
    overrides.emplace_back(o, [&var, member](RunConfig& c) { c.inputs.*member = fs::path(var); });
  };
  path_opt(mine, "corpus", corpus, &Inputs::corpus, "Corpus JSON Lines file");
  path_opt(mine, "annotations", annotations, &Inputs::annotations, "Span annotations to train taggers");
  path_opt(mine, "aspect-tagger", aspect_tagger, &Inputs::aspect_tagger, "Aspect tagger checkpoint");
  path_opt(mine, "sentence-tagger", sentence_tagger, &Inputs::sentence_tagger,
           "Sentence tagger checkpoint");
  overrides.emplace_back(mine->add_option("--threshold", mining_threshold, "Token probability threshold"),
                         [&](RunConfig& c) { c.mining.threshold = mining_threshold; });

  path_opt(train, "corpus", corpus, &Inputs::corpus, "Corpus JSON Lines file");
  path_opt(train, "mined", mined, &Inputs::mined, "Mined descriptions");
  overrides.emplace_back(train->add_option("--tau", tau, "Softmax temperature"),
                         [&](RunConfig& c) { c.training.loss.temperature = tau; });
  overrides.emplace_back(train->add_option("--batch-size", batch_size, "Batch size"),
                         [&](RunConfig& c) { c.training.batch.batch_size = batch_size; });
  overrides.emplace_back(train->add_option("--lr", lr, "Initial learning rate"),
                         [&](RunConfig& c) { c.training.schedule.initial_lr = lr; });
  overrides.emplace_back(train->add_option("--max-epochs", max_epochs, "Epoch budget"),
                         [&](RunConfig& c) { c.training.schedule.max_epochs = max_epochs; });
  overrides.emplace_back(
      train->add_option("--direction", direction, "audio_to_text or symmetric"),
      [&](RunConfig& c) { c.training.loss.direction = direction_from(direction); });

  path_opt(filter, "checkpoint", checkpoint, &Inputs::checkpoint, "Model checkpoint");
  path_opt(filter, "corpus", corpus, &Inputs::corpus, "Corpus JSON Lines file");
  path_opt(filter, "mined", mined, &Inputs::mined, "Mined descriptions");
  overrides.emplace_back(filter->add_option("--threshold", filter_threshold, "Minimum kept score"),
                         [&](RunConfig& c) { c.filter_threshold = filter_threshold; });

  path_opt(evalc, "checkpoint", checkpoint, &Inputs::checkpoint, "Model checkpoint");
  path_opt(evalc, "manifest", manifest, &Inputs::manifest, "Evaluation manifest");
  overrides.emplace_back(evalc->add_option("--task", task, "retrieval, tagging or classification"),
                         [&](RunConfig& c) { c.eval.task = task; });
  overrides.emplace_back(evalc->add_option("--ks", ks, "Retrieval cutoffs")->delimiter(','),
                         [&](RunConfig& c) { c.eval.ks = ks; });

  path_opt(query, "checkpoint", checkpoint, &Inputs::checkpoint, "Model checkpoint");
  path_opt(query, "manifest", manifest, &Inputs::manifest, "Collection manifest");
  overrides.emplace_back(query->add_option("--query", query_text, "Query text"),
                         [&](RunConfig& c) { c.query.text = query_text; });
  overrides.emplace_back(query->add_option("--k", k, "Number of results"),
                         [&](RunConfig& c) { c.query.k = k; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "tunetext: " << e.what() << "\n";
    return kExitUsage;
  }
  setup_logging(verbose, quiet);

  try {
    RunConfig cfg;
    if (o_config->count()) {
      json doc;
      try {
        doc = read_json_file(config_path);
      } catch (const std::exception& e) {
        throw UsageError("cannot read --config: " + std::string(e.what()));
      }
      cfg = RunConfig::from_json(doc);
    }
    if (o_seed->count()) cfg.seed = seed;
    if (o_out->count()) cfg.out = out_dir;
    for (const auto& [opt, apply] : overrides) {
      if (opt->count()) apply(cfg);
    }

    if (mine->parsed()) return cmd_mine(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (filter->parsed()) return cmd_filter(cfg);
    if (evalc->parsed()) return cmd_eval(cfg);
    return cmd_query(cfg);
  } catch (const UsageError& e) {
    std::cerr << "tunetext: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "tunetext: error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("tunetext");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tunetext::cli
