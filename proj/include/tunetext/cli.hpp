#pragma once

// The `tunetext` command line: mine, train, filter, eval and query.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunetext/contrastive.hpp"
#include "tunetext/encoders.hpp"
#include "tunetext/textminer.hpp"

namespace tunetext::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, bad configuration or missing inputs.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Inputs {
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> mined;
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> aspect_tagger;
  std::optional<std::filesystem::path> sentence_tagger;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> manifest;
};

struct TrainingSection {
  contrastive::BatchSpec batch;
  contrastive::LossConfig loss;
  contrastive::TrainSchedule schedule;
  contrastive::SentenceSampleRule sentences;
};

struct EvalSection {
  std::string task = "retrieval";
  std::vector<std::size_t> ks{1, 5, 10};
};

struct QuerySection {
  std::string text;
  std::size_t k = 10;
};

/// Everything a run needs. Loaded from a JSON file, overridden by flags and
/// written back as `config.json` next to the outputs.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  Inputs inputs;
  textminer::TaggerConfig tagger;
  textminer::MiningConfig mining;
  encoders::TowerConfig tower;
  TrainingSection training;
  double filter_threshold = 0.0;
  EvalSection eval;
  QuerySection query;

  /// Sections relevant to `command` only ("" for all).
  nlohmann::json to_json(const std::string& command = "") const;
  /// Missing keys keep their defaults; malformed values throw UsageError.
  static RunConfig from_json(const nlohmann::json& j);
};

int cmd_mine(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_filter(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_query(const RunConfig& cfg);

/// Parses arguments (argv[0] is the program name), dispatches and maps
/// exceptions to exit codes.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace tunetext::cli
