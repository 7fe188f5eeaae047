#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuzzyppo/ppo.hpp"
#include "fuzzyppo/trainer.hpp"

namespace fuzzyppo {

// Invalid configuration; `field()` names the offending TrainConfig key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline const std::vector<std::uint64_t> kDefaultSeeds = {9, 42, 109, 131};

// ---- configuration -------------------------------------------------------

// Every TrainConfig field as `key=value`, one per line, in a fixed order.
std::string config_to_text(const TrainConfig& config);

// Sets one field from its text form. Throws ConfigError for unknown keys or
// unparsable values.
void set_config_field(TrainConfig& config, const std::string& key, const std::string& value);

// Parses `key=value` lines on top of `base`. Blank lines and lines starting
// with '#' are ignored. The result is validated.
TrainConfig parse_config_text(const std::string& text, TrainConfig base = {});
TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base = {});

// Runs validate() and rethrows its failures as ConfigError.
void validate_config(const TrainConfig& config);

// ---- run layout ----------------------------------------------------------

// "clip10", "clip0.5", ...
std::string variant_name(const TrainConfig& config);
// <root>/<variant>/<seed>
std::filesystem::path run_directory(const std::filesystem::path& root, const TrainConfig& config);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

std::string train_log_header();
std::string train_log_row(const UpdateRecord& record);
std::string eval_log_header(std::size_t episodes);
std::string eval_log_row(const EvalRecord& record);

// Parses an eval_log.csv. Throws std::runtime_error naming the file and
// line on any malformed row.
std::vector<EvalRecord> read_eval_log(const std::filesystem::path& path);

// ---- runs ----------------------------------------------------------------

struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path manifest;
  std::filesystem::path train_log;
  std::filesystem::path eval_log;
  std::filesystem::path checkpoint_latest;
  std::filesystem::path checkpoint_final;
};

RunPaths run_paths(const std::filesystem::path& dir);

struct RunOutcome {
  RunPaths paths;
  TrainLog log;
};

// Creates the run directory and writes manifest.json (status "running")
// before training. Logs stream row by row; checkpoints are saved at each
// evaluation and at the end. On failure everything written so far stays on
// disk, the manifest records the error and the exception propagates.
RunOutcome run_experiment(const TrainConfig& config, const std::filesystem::path& out_root);

struct SeedSummary {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_mean_return = 0.0;
  std::optional<std::size_t> first_update_at_500;
  double auc = 0.0;  // trapezoidal area under mean_return vs update_idx
};

SeedSummary summarize_evals(std::uint64_t seed, const std::vector<EvalRecord>& evals);

struct SweepResult {
  std::vector<SeedSummary> seeds;
  std::filesystem::path summary_path;
  bool ok() const;
};

// Trains every seed (up to `jobs` at a time) under <out_root>/<variant>/ and
// writes <out_root>/<variant>/summary.json.
SweepResult run_sweep(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out_root, unsigned jobs);

std::string summary_to_json(const TrainConfig& base, const std::vector<SeedSummary>& seeds);

const char* version_string();

}  // namespace fuzzyppo
