// fuzzyppo: command-line driver for PPO-trained ANFIS policies on CartPole.
//
//   fuzzyppo train --seed 42 --grad-clip 0.5
//   fuzzyppo sweep --grad-clip 0.5 --seeds 9,42,109,131
//   fuzzyppo eval runs/clip0.5/42/checkpoint_final.bin --episodes 10

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "fuzzyppo/checkpoint.hpp"
#include "fuzzyppo/experiment.hpp"
#include "fuzzyppo/trainer.hpp"

namespace {

using fuzzyppo::TrainConfig;

// Flags shared by every subcommand that builds a TrainConfig. Unset flags
// leave the config-file (or built-in default) value alone.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> grad_clip;
  std::optional<std::size_t> total_updates;
  std::optional<std::size_t> eval_every;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::optional<double> value_coef;
  bool no_adv_norm = false;
  std::optional<int> tsk_order;
  std::optional<std::string> consequent_input;

  void add_to(CLI::App& app, bool with_seed) {
    app.add_option("--config", config_path, "key=value config file");
    if (with_seed) app.add_option("--seed", seed, "Run seed");
    app.add_option("--grad-clip", grad_clip, "Joint gradient-norm clip (10 or 0.5)");
    app.add_option("--total-updates", total_updates, "Minibatch update budget");
    app.add_option("--eval-every", eval_every, "Evaluate every N minibatch updates");
    app.add_option("--lambda", lambda, "GAE lambda");
    app.add_option("--epochs", epochs, "Epochs per rollout");
    app.add_option("--value-coef", value_coef, "Value loss weight c_v");
    app.add_flag("--no-adv-norm", no_adv_norm, "Disable advantage normalization");
    app.add_option("--tsk-order", tsk_order, "Rule consequent order (0 or 1)");
    app.add_option("--consequent-input", consequent_input, "features | state");
  }

  TrainConfig resolve() const {
    TrainConfig c;
    if (!config_path.empty()) c = fuzzyppo::load_config_file(config_path, c);
    auto set = [&](const char* key, const auto& opt) {
      if (!opt) return;
      std::ostringstream text;
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(*opt)>>) {
        text << fuzzyppo::format_double(*opt);
      } else {
        text << *opt;
      }
      fuzzyppo::set_config_field(c, key, text.str());
    };
    set("seed", seed);
    set("grad_clip", grad_clip);
    set("total_updates", total_updates);
    set("eval_every", eval_every);
    set("gae_lambda", lambda);
    set("epochs", epochs);
    set("value_coef", value_coef);
    set("tsk_order", tsk_order);
    set("consequent_input", consequent_input);
    if (no_adv_norm) c.adv_norm = false;
    fuzzyppo::validate_config(c);
    return c;
  }
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const auto v = std::stoull(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad seed '" + item + "'");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw std::invalid_argument("--seeds needs at least one seed");
  return seeds;
}

int cmd_train(const ConfigFlags& flags, const std::string& out) {
  const TrainConfig config = flags.resolve();
  std::cout << "training seed " << config.seed << " (" << fuzzyppo::variant_name(config) << ", "
            << config.total_updates << " updates)\n";
  const auto run = fuzzyppo::run_experiment(config, out);
  const auto& last = run.log.evals.back();
  std::cout << "final eval at update " << last.update_idx << ": mean return "
            << fuzzyppo::format_double(last.result.mean_return) << "\n"
            << "artifacts in " << run.paths.dir.string() << "\n";
  return 0;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& out, const std::string& seeds_text,
              unsigned jobs) {
  const TrainConfig config = flags.resolve();
  const auto seeds = seeds_text.empty() ? fuzzyppo::kDefaultSeeds : parse_seed_list(seeds_text);
  const auto result = fuzzyppo::run_sweep(config, seeds, out, jobs);
  for (const auto& s : result.seeds) {
    if (!s.ok) {
      std::cout << "seed " << s.seed << ": FAILED: " << s.error << "\n";
      continue;
    }
    std::cout << "seed " << s.seed << ": final " << fuzzyppo::format_double(s.final_mean_return)
              << ", first 500 at "
              << (s.first_update_at_500 ? std::to_string(*s.first_update_at_500) : "never")
              << ", auc " << fuzzyppo::format_double(s.auc) << "\n";
  }
  std::cout << "summary: " << result.summary_path.string() << "\n";
  return result.ok() ? 0 : 1;
}

int cmd_eval(const ConfigFlags& flags, const std::string& checkpoint, std::size_t episodes,
             std::uint64_t eval_seed, const std::string& csv) {
  const TrainConfig config = flags.resolve();
  auto agent = fuzzyppo::make_actor_critic(config.policy_config(), config.critic_config());
  fuzzyppo::load_checkpoint(agent.store, checkpoint);
  const auto result = fuzzyppo::evaluate(agent, episodes, eval_seed, agent.store.step_count);
  std::cout << "mean_return " << fuzzyppo::format_double(result.mean_return) << "\n";
  for (std::size_t i = 0; i < result.returns.size(); ++i) {
    std::cout << "episode " << i << " " << fuzzyppo::format_double(result.returns[i]) << "\n";
  }
  if (!csv.empty()) {
    const bool fresh = !std::filesystem::exists(csv);
    std::ofstream f(csv, std::ios::app);
    if (!f) throw std::runtime_error("cannot append to " + csv);
    if (fresh) f << fuzzyppo::eval_log_header(episodes) << '\n';
    f << fuzzyppo::eval_log_row({agent.store.step_count, result}) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PPO training of ANFIS fuzzy policies on CartPole-v1"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fuzzyppo::version_string());

  ConfigFlags train_flags, sweep_flags, eval_flags;
  std::string train_out = "runs", sweep_out = "runs";

  auto* train = app.add_subcommand("train", "Run one training run");
  train_flags.add_to(*train, true);
  train->add_option("--out", train_out, "Output root (runs/<variant>/<seed>/)");

  std::string seeds_text;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Train every seed and write summary.json");
  sweep_flags.add_to(*sweep, false);
  sweep->add_option("--seeds", seeds_text, "Comma-separated seeds (default 9,42,109,131)");
  sweep->add_option("--out", sweep_out, "Output root");
  sweep->add_option("--jobs", jobs, "Seeds trained concurrently");

  std::string checkpoint, csv;
  std::size_t episodes = 10;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  eval->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--episodes", episodes, "Number of episodes")->check(CLI::PositiveNumber);
  eval->add_option("--eval-seed", eval_seed, "Seed of the evaluation episode streams");
  eval->add_option("--csv", csv, "Append the result to this eval_log-style CSV");
  eval_flags.add_to(*eval, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_flags, train_out);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_out, seeds_text, jobs);
    if (eval->parsed()) return cmd_eval(eval_flags, checkpoint, episodes, eval_seed, csv);
  } catch (const fuzzyppo::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const fuzzyppo::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
