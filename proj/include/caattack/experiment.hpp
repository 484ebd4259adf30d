#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "caattack/attack.hpp"
#include "caattack/dataset.hpp"
#include "caattack/eval.hpp"

namespace caatk {

// Exit codes shared by the CLI.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_data = 3, exit_runtime = 4 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A failure inside run_experiment, tagged with the stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, int exit_code)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

// Every knob of one experiment. JSON keys are the field names; CLI flags are
// the same names in kebab-case.
struct ExperimentConfig {
  std::string dataset;
  std::string dataset_format = "text";
  double labeled_fraction = 0.10;
  std::uint64_t split_seed = 0;

  std::string attack = "meta";  // meta | dice | none
  std::string base_loss = "nll";
  bool ca_enabled = false;
  double alpha1 = 4.5;
  double beta1 = 1.0;
  double alpha2 = 1.0;
  double beta2 = 1.0;
  double cw_kappa = 0.0;
  double budget_fraction = 0.05;
  std::size_t retrain_every = 1;
  bool forbid_singletons = true;
  bool degree_test = false;
  double degree_test_threshold = 0.004;
  double dice_delete_probability = 0.5;
  std::uint64_t attack_seed = 0;

  double surrogate_lr = 0.1;
  int surrogate_epochs = 200;
  double surrogate_weight_decay = 5e-4;

  std::size_t victim_hidden = 16;
  double victim_lr = 0.01;
  int victim_epochs = 200;
  double victim_weight_decay = 5e-4;
  double victim_dropout = 0.5;

  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string output = "report.json";

  // Throws ConfigError.
  void validate() const;

  LossSpec loss_spec() const;
  AttackConfig attack_config(std::size_t budget) const;
  VictimHyper victim_hyper() const;
  DatasetOptions dataset_options() const;

  // Output path with CAATTACK_OUTPUT_DIR applied to relative paths.
  std::filesystem::path resolved_output() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Unknown keys are rejected; missing keys keep their defaults.
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);

// floor(fraction * edges)
std::size_t budget_for(double budget_fraction, std::size_t edge_count);

nlohmann::json report_to_json(const EvalReport& r);
nlohmann::json flips_to_json(std::span<const Flip> flips);
std::vector<Flip> flips_from_json(const nlohmann::json& j);

// One "i j op" line per flip.
std::string flips_to_text(std::span<const Flip> flips);

// Applies flips in order; throws std::invalid_argument if an op disagrees
// with the current adjacency.
Graph apply_flips(const Graph& g, std::span<const Flip> flips);

struct AttackOutcome {
  Graph clean;
  AttackResult result;
  std::size_t budget = 0;
};

// load -> attack. Errors come back as StageError.
AttackOutcome run_attack_stage(const ExperimentConfig& cfg);

// load -> attack -> evaluate -> write `resolved_output()` and its flips file
// (same stem, ".flips.txt"). Errors come back as StageError.
EvalReport run_experiment(const ExperimentConfig& cfg);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace caatk
