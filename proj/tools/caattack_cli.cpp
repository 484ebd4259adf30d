// caattack: command-line driver for the graph poisoning attacks.
//
//   caattack run      --config exp.json [--flag value ...]
//   caattack attack   --dataset DIR --attack meta --ca-enabled ...
//   caattack evaluate --dataset DIR [--flips run.flips.txt]
//   caattack scatter  --dataset DIR --ca-enabled --output scatter.csv
//   caattack generate-sbm --out DIR
//
// Every ExperimentConfig field is available as a kebab-case flag; a JSON
// config file supplies defaults and flags override it.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "caattack/experiment.hpp"

namespace {

using caatk::ExperimentConfig;
using nlohmann::json;

std::string kebab(std::string s) {
  for (char& c : s)
    if (c == '_') c = '-';
  return s;
}

struct Overrides {
  std::string config_path;
  json values = json::object();
};

template <typename T>
void value_option(CLI::App* app, Overrides& o, const std::string& key, const std::string& help) {
  app->add_option_function<T>("--" + kebab(key), [&o, key](const T& v) { o.values[key] = v; }, help);
}

void bool_option(CLI::App* app, Overrides& o, const std::string& key, const std::string& help) {
  app->add_flag_function("--" + kebab(key), [&o, key](std::int64_t n) { o.values[key] = n > 0; },
                         help + " (--" + kebab(key) + "=false to disable)");
}

void add_experiment_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  value_option<std::string>(app, o, "dataset", "dataset directory");
  value_option<std::string>(app, o, "dataset_format", "dataset format (text)");
  value_option<double>(app, o, "labeled_fraction", "fraction of labeled nodes");
  value_option<std::uint64_t>(app, o, "split_seed", "seed of the labeled/unlabeled split");
  value_option<std::string>(app, o, "attack", "meta | dice | none");
  value_option<std::string>(app, o, "base_loss", "nll | cw");
  bool_option(app, o, "ca_enabled", "wrap the base loss in cost-aware weights");
  value_option<double>(app, o, "alpha1", "weight scale for non-negative margins");
  value_option<double>(app, o, "beta1", "weight decay rate for non-negative margins");
  value_option<double>(app, o, "alpha2", "weight scale for negative margins");
  value_option<double>(app, o, "beta2", "weight decay rate for negative margins");
  value_option<double>(app, o, "cw_kappa", "CW clamp");
  value_option<double>(app, o, "budget_fraction", "flip budget as a fraction of edges");
  value_option<std::size_t>(app, o, "retrain_every", "retrain the surrogate every R flips");
  bool_option(app, o, "forbid_singletons", "never isolate a node");
  bool_option(app, o, "degree_test", "power-law degree unnoticeability test");
  value_option<double>(app, o, "degree_test_threshold", "likelihood-ratio threshold");
  value_option<double>(app, o, "dice_delete_probability", "DICE delete-vs-add coin");
  value_option<std::uint64_t>(app, o, "attack_seed", "seed of the attack and its surrogate");
  value_option<double>(app, o, "surrogate_lr", "surrogate learning rate");
  value_option<int>(app, o, "surrogate_epochs", "surrogate epochs");
  value_option<double>(app, o, "surrogate_weight_decay", "surrogate weight decay");
  value_option<std::size_t>(app, o, "victim_hidden", "victim hidden width");
  value_option<double>(app, o, "victim_lr", "victim learning rate");
  value_option<int>(app, o, "victim_epochs", "victim epochs");
  value_option<double>(app, o, "victim_weight_decay", "victim weight decay");
  value_option<double>(app, o, "victim_dropout", "victim dropout");
  app->add_option_function<std::vector<std::uint64_t>>(
         "--seeds", [&o](const std::vector<std::uint64_t>& v) { o.values["seeds"] = v; },
         "victim seeds (space or comma separated)")
      ->delimiter(',');
  value_option<std::string>(app, o, "output", "output path");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : caatk::load_config(o.config_path);
  from_json(o.values, cfg);
  cfg.validate();
  return cfg;
}

std::vector<caatk::Flip> read_flips(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw caatk::DataError("cannot open flips file " + path);
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    json j;
    in >> j;
    return caatk::flips_from_json(j.is_object() ? j.at("flips") : j);
  }
  std::vector<caatk::Flip> flips;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    caatk::Flip f;
    std::string op;
    if (!(ss >> f.i >> f.j >> op) || (op != "add" && op != "remove"))
      throw caatk::DataError("malformed flip line '" + line + "'");
    f.op = op == "add" ? caatk::FlipOp::add : caatk::FlipOp::remove;
    flips.push_back(f);
  }
  return flips;
}

int cmd_attack(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto outcome = caatk::run_attack_stage(cfg);
  json trace = json::array();
  for (const auto& t : outcome.result.trace)
    trace.push_back({{"iteration", t.iteration},
                     {"retrained", t.retrained},
                     {"score", t.score},
                     {"objective_before", t.objective_before},
                     {"objective_after", t.objective_after},
                     {"negative_margins", t.negative_margins},
                     {"mean_margin", t.mean_margin},
                     {"rejected", t.rejected}});
  const json doc{{"dataset", cfg.dataset},
                 {"attack", cfg.attack},
                 {"loss", cfg.loss_spec().name()},
                 {"budget", outcome.budget},
                 {"budget_fraction", cfg.budget_fraction},
                 {"flips", caatk::flips_to_json(outcome.result.flips)},
                 {"exhausted", outcome.result.exhausted},
                 {"trace", trace},
                 {"config", cfg}};
  const auto out = cfg.resolved_output();
  caatk::write_text_file(out, doc.dump(2) + "\n");
  auto flips_path = out;
  flips_path.replace_extension(".flips.txt");
  caatk::write_text_file(flips_path, caatk::flips_to_text(outcome.result.flips));
  std::cout << cfg.attack << ' ' << cfg.loss_spec().name() << ": " << outcome.result.flips.size()
            << '/' << outcome.budget << " flips -> " << out.string() << '\n';
  return caatk::exit_ok;
}

int cmd_evaluate(const Overrides& o, const std::string& flips_path) {
  const auto cfg = resolve(o);
  caatk::Graph clean = caatk::load_dataset(cfg.dataset, cfg.dataset_options());
  std::vector<caatk::Flip> flips;
  if (!flips_path.empty()) flips = read_flips(flips_path);
  caatk::Graph poisoned = [&] {
    try {
      return caatk::apply_flips(clean, flips);
    } catch (const std::invalid_argument& e) {
      throw caatk::DataError(e.what());
    }
  }();
  auto report = caatk::evaluate(clean, poisoned, cfg.victim_hyper(), cfg.seeds);
  report.dataset = cfg.dataset;
  report.attack = flips_path.empty() ? "none" : "flips:" + flips_path;
  report.loss = cfg.loss_spec().name();
  report.budget = flips.size();
  report.budget_fraction =
      clean.edge_count() ? static_cast<double>(flips.size()) / static_cast<double>(clean.edge_count()) : 0.0;
  report.flips = flips;
  report.config = cfg;
  const auto out = cfg.resolved_output();
  caatk::write_text_file(out, caatk::report_to_json(report).dump(2) + "\n");
  std::cout << "accuracy " << report.mean << " +- " << report.ci95_halfwidth << " -> "
            << out.string() << '\n';
  return caatk::exit_ok;
}

int cmd_scatter(const Overrides& o) {
  const auto cfg = resolve(o);
  const caatk::Graph g = caatk::load_dataset(cfg.dataset, cfg.dataset_options());
  const caatk::SurrogateHyper hyper{cfg.surrogate_lr, cfg.surrogate_epochs, cfg.surrogate_weight_decay,
                                    cfg.attack_seed};
  const auto points = caatk::margin_gradient_scatter(g, cfg.loss_spec(), hyper);
  std::ostringstream csv;
  caatk::write_scatter_csv(csv, points);
  const auto out = cfg.resolved_output();
  caatk::write_text_file(out, csv.str());
  std::cout << points.size() << " nodes -> " << out.string() << '\n';
  return caatk::exit_ok;
}

int cmd_run(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto report = caatk::run_experiment(cfg);
  std::cout << cfg.attack << ' ' << report.loss << " budget " << report.budget << ": accuracy "
            << report.mean << " +- " << report.ci95_halfwidth << " -> "
            << cfg.resolved_output().string() << '\n';
  return caatk::exit_ok;
}

struct SbmOptions {
  std::string out;
  std::vector<std::size_t> blocks{50, 50};
  double p_in = 0.2;
  double p_out = 0.01;
  std::size_t feature_dim = 20;
  double feature_signal = 0.3;
  double feature_noise = 0.05;
  std::uint64_t seed = 0;
};

int cmd_generate_sbm(const SbmOptions& o) {
  caatk::SbmConfig cfg;
  cfg.block_sizes = o.blocks;
  cfg.p_in = o.p_in;
  cfg.p_out = o.p_out;
  cfg.feature_dim = o.feature_dim;
  cfg.feature_signal = o.feature_signal;
  cfg.feature_noise = o.feature_noise;
  cfg.seed = o.seed;
  const auto g = caatk::stochastic_block_model(cfg);
  caatk::write_dataset(g, o.out, o.feature_dim > 0);
  std::cout << g.n_nodes() << " nodes, " << g.edge_count() << " edges -> " << o.out << '\n';
  return caatk::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-based graph structure poisoning with cost-aware attack losses"};
  app.require_subcommand(1);

  Overrides run_o, attack_o, eval_o, scatter_o;
  std::string flips_path;
  SbmOptions sbm;

  auto* run = app.add_subcommand("run", "load, attack, evaluate and write the report");
  add_experiment_options(run, run_o);
  auto* attack = app.add_subcommand("attack", "compute and write the flip list only");
  add_experiment_options(attack, attack_o);
  auto* eval = app.add_subcommand("evaluate", "train victims on a (possibly flipped) dataset");
  add_experiment_options(eval, eval_o);
  eval->add_option("--flips", flips_path, "flips file (.flips.txt or report .json)");
  auto* scatter = app.add_subcommand("scatter", "per-node margin vs gradient norm CSV");
  add_experiment_options(scatter, scatter_o);
  auto* gen = app.add_subcommand("generate-sbm", "write a stochastic block model dataset");
  gen->add_option("--out", sbm.out, "output directory")->required();
  gen->add_option("--blocks", sbm.blocks, "block sizes")->delimiter(',');
  gen->add_option("--p-in", sbm.p_in, "within-block edge probability");
  gen->add_option("--p-out", sbm.p_out, "across-block edge probability");
  gen->add_option("--feature-dim", sbm.feature_dim, "feature columns (0: identity features)");
  gen->add_option("--feature-signal", sbm.feature_signal, "own-class feature probability");
  gen->add_option("--feature-noise", sbm.feature_noise, "other-class feature probability");
  gen->add_option("--seed", sbm.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? caatk::exit_ok : caatk::exit_config;
  }

  try {
    if (run->parsed()) return cmd_run(run_o);
    if (attack->parsed()) return cmd_attack(attack_o);
    if (eval->parsed()) return cmd_evaluate(eval_o, flips_path);
    if (scatter->parsed()) return cmd_scatter(scatter_o);
    if (gen->parsed()) return cmd_generate_sbm(sbm);
  } catch (const caatk::StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return e.exit_code();
  } catch (const caatk::ConfigError& e) {
    std::cerr << "error [config]: " << e.what() << '\n';
    return caatk::exit_config;
  } catch (const caatk::DataError& e) {
    std::cerr << "error [load]: " << e.what() << '\n';
    return caatk::exit_data;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return caatk::exit_runtime;
  }
  return caatk::exit_config;
}
