#include "caattack/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace caatk {

using nlohmann::json;

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (dataset.empty()) fail("dataset path is required");
  if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0)) fail("labeled_fraction must lie in (0, 1)");
  if (!(budget_fraction >= 0.0 && budget_fraction <= 1.0)) fail("budget_fraction must lie in [0, 1]");
  if (attack != "meta" && attack != "dice" && attack != "none")
    fail("attack must be meta, dice or none (got '" + attack + "')");
  if (retrain_every < 1) fail("retrain_every must be at least 1");
  if (seeds.empty()) fail("seeds must not be empty");
  if (surrogate_epochs < 0 || victim_epochs < 0) fail("epochs must be non-negative");
  if (!(surrogate_lr > 0.0 && victim_lr > 0.0)) fail("learning rates must be positive");
  if (victim_hidden == 0) fail("victim_hidden must be positive");
  if (!(victim_dropout >= 0.0 && victim_dropout < 1.0)) fail("victim_dropout must lie in [0, 1)");
  if (output.empty()) fail("output path is required");
  try {
    parse_base_loss(base_loss);
    CAWeightParams{alpha1, beta1, alpha2, beta2}.validate();
    loss_spec().validate();
    attack_config(0).validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

LossSpec ExperimentConfig::loss_spec() const {
  LossSpec s;
  s.base = parse_base_loss(base_loss);
  s.cw_kappa = cw_kappa;
  if (ca_enabled) s.ca = CAWeightParams{alpha1, beta1, alpha2, beta2};
  return s;
}

AttackConfig ExperimentConfig::attack_config(std::size_t budget) const {
  AttackConfig a;
  a.budget = budget;
  a.loss = loss_spec();
  a.retrain_every = retrain_every;
  a.surrogate = {surrogate_lr, surrogate_epochs, surrogate_weight_decay, attack_seed};
  a.constraints = {forbid_singletons, degree_test, degree_test_threshold};
  a.seed = attack_seed;
  a.dice_delete_probability = dice_delete_probability;
  return a;
}

VictimHyper ExperimentConfig::victim_hyper() const {
  return {victim_hidden, victim_lr, victim_epochs, victim_weight_decay, victim_dropout, 0};
}

DatasetOptions ExperimentConfig::dataset_options() const {
  return {dataset_format, labeled_fraction, split_seed, true};
}

std::filesystem::path ExperimentConfig::resolved_output() const {
  std::filesystem::path p(output);
  if (const char* dir = std::getenv("CAATTACK_OUTPUT_DIR"); dir && *dir && p.is_relative())
    return std::filesystem::path(dir) / p;
  return p;
}

namespace {

template <typename T>
std::function<void(const json&)> setter(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

std::map<std::string, std::function<void(const json&)>> setters(ExperimentConfig& c) {
  return {
      {"dataset", setter(c.dataset)},
      {"dataset_format", setter(c.dataset_format)},
      {"labeled_fraction", setter(c.labeled_fraction)},
      {"split_seed", setter(c.split_seed)},
      {"attack", setter(c.attack)},
      {"base_loss", setter(c.base_loss)},
      {"ca_enabled", setter(c.ca_enabled)},
      {"alpha1", setter(c.alpha1)},
      {"beta1", setter(c.beta1)},
      {"alpha2", setter(c.alpha2)},
      {"beta2", setter(c.beta2)},
      {"cw_kappa", setter(c.cw_kappa)},
      {"budget_fraction", setter(c.budget_fraction)},
      {"retrain_every", setter(c.retrain_every)},
      {"forbid_singletons", setter(c.forbid_singletons)},
      {"degree_test", setter(c.degree_test)},
      {"degree_test_threshold", setter(c.degree_test_threshold)},
      {"dice_delete_probability", setter(c.dice_delete_probability)},
      {"attack_seed", setter(c.attack_seed)},
      {"surrogate_lr", setter(c.surrogate_lr)},
      {"surrogate_epochs", setter(c.surrogate_epochs)},
      {"surrogate_weight_decay", setter(c.surrogate_weight_decay)},
      {"victim_hidden", setter(c.victim_hidden)},
      {"victim_lr", setter(c.victim_lr)},
      {"victim_epochs", setter(c.victim_epochs)},
      {"victim_weight_decay", setter(c.victim_weight_decay)},
      {"victim_dropout", setter(c.victim_dropout)},
      {"seeds", setter(c.seeds)},
      {"output", setter(c.output)},
  };
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"dataset", c.dataset},
           {"dataset_format", c.dataset_format},
           {"labeled_fraction", c.labeled_fraction},
           {"split_seed", c.split_seed},
           {"attack", c.attack},
           {"base_loss", c.base_loss},
           {"ca_enabled", c.ca_enabled},
           {"alpha1", c.alpha1},
           {"beta1", c.beta1},
           {"alpha2", c.alpha2},
           {"beta2", c.beta2},
           {"cw_kappa", c.cw_kappa},
           {"budget_fraction", c.budget_fraction},
           {"retrain_every", c.retrain_every},
           {"forbid_singletons", c.forbid_singletons},
           {"degree_test", c.degree_test},
           {"degree_test_threshold", c.degree_test_threshold},
           {"dice_delete_probability", c.dice_delete_probability},
           {"attack_seed", c.attack_seed},
           {"surrogate_lr", c.surrogate_lr},
           {"surrogate_epochs", c.surrogate_epochs},
           {"surrogate_weight_decay", c.surrogate_weight_decay},
           {"victim_hidden", c.victim_hidden},
           {"victim_lr", c.victim_lr},
           {"victim_epochs", c.victim_epochs},
           {"victim_weight_decay", c.victim_weight_decay},
           {"victim_dropout", c.victim_dropout},
           {"seeds", c.seeds},
           {"output", c.output}};
}

void from_json(const json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  auto table = setters(c);
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  from_json(j, c);
  return c;
}

std::size_t budget_for(double budget_fraction, std::size_t edge_count) {
  return static_cast<std::size_t>(std::floor(budget_fraction * static_cast<double>(edge_count)));
}

json flips_to_json(std::span<const Flip> flips) {
  json arr = json::array();
  for (const auto& f : flips) arr.push_back({{"i", f.i}, {"j", f.j}, {"op", to_string(f.op)}});
  return arr;
}

std::vector<Flip> flips_from_json(const json& j) {
  std::vector<Flip> out;
  for (const auto& e : j) {
    const auto op = e.at("op").get<std::string>();
    if (op != "add" && op != "remove") throw std::invalid_argument("flip op must be add or remove");
    out.push_back({e.at("i").get<std::size_t>(), e.at("j").get<std::size_t>(),
                   op == "add" ? FlipOp::add : FlipOp::remove});
  }
  return out;
}

std::string flips_to_text(std::span<const Flip> flips) {
  std::ostringstream out;
  for (const auto& f : flips) out << f.i << ' ' << f.j << ' ' << to_string(f.op) << '\n';
  return out.str();
}

Graph apply_flips(const Graph& g, std::span<const Flip> flips) {
  Graph current = g;
  for (const auto& f : flips) {
    if (f.i >= g.n_nodes() || f.j >= g.n_nodes() || f.i == f.j)
      throw std::invalid_argument("flip outside the graph");
    if (current.has_edge(f.i, f.j) != (f.op == FlipOp::remove))
      throw std::invalid_argument("flip (" + std::to_string(f.i) + ", " + std::to_string(f.j) +
                                  ") does not match the current adjacency");
    current = flip_edge(current, f.i, f.j);
  }
  return current;
}

json report_to_json(const EvalReport& r) {
  return json{{"dataset", r.dataset},
              {"attack", r.attack},
              {"loss", r.loss},
              {"budget", r.budget},
              {"budget_fraction", r.budget_fraction},
              {"flips", flips_to_json(r.flips)},
              {"exhausted", r.exhausted},
              {"seeds", r.seeds},
              {"per_seed_accuracy", r.per_seed_accuracy},
              {"mean", r.mean},
              {"ci95", r.ci95_halfwidth},
              {"degenerate_ci", r.degenerate_ci},
              {"wall_clock_seconds", r.wall_clock_seconds},
              {"config", r.config}};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

AttackOutcome run_attack_stage(const ExperimentConfig& cfg) {
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw StageError("config", e.what(), exit_config);
  }
  Graph clean = [&] {
    try {
      return load_dataset(cfg.dataset, cfg.dataset_options());
    } catch (const DataError& e) {
      throw StageError("load", e.what(), exit_data);
    } catch (const std::exception& e) {
      throw StageError("load", e.what(), exit_data);
    }
  }();
  const std::size_t budget = budget_for(cfg.budget_fraction, clean.edge_count());
  try {
    const AttackConfig acfg = cfg.attack_config(budget);
    AttackResult result = cfg.attack == "meta"   ? meta_attack(clean, acfg)
                          : cfg.attack == "dice" ? dice_attack(clean, acfg)
                                                 : AttackResult{{}, clean, {}, false};
    return {std::move(clean), std::move(result), budget};
  } catch (const std::exception& e) {
    throw StageError("attack", e.what(), exit_runtime);
  }
}

EvalReport run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  AttackOutcome outcome = run_attack_stage(cfg);
  EvalReport report;
  try {
    report = evaluate(outcome.clean, outcome.result.poisoned, cfg.victim_hyper(), cfg.seeds);
  } catch (const std::exception& e) {
    throw StageError("evaluate", e.what(), exit_runtime);
  }
  report.dataset = cfg.dataset;
  report.attack = cfg.attack;
  report.loss = cfg.loss_spec().name();
  report.budget_fraction = cfg.budget_fraction;
  report.budget = outcome.budget;
  report.flips = outcome.result.flips;
  report.exhausted = outcome.result.exhausted;
  report.config = cfg;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  try {
    const auto out = cfg.resolved_output();
    write_text_file(out, report_to_json(report).dump(2) + "\n");
    auto flips_path = out;
    flips_path.replace_extension(".flips.txt");
    write_text_file(flips_path, flips_to_text(report.flips));
  } catch (const std::exception& e) {
    throw StageError("write", e.what(), exit_runtime);
  }
  return report;
}

}  // namespace caatk
