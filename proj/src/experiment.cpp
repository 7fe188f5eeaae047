#include "fuzzyppo/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "fuzzyppo/checkpoint.hpp"
#include "fuzzyppo/error.hpp"
#include "json.hpp"

#ifndef FUZZYPPO_VERSION
#define FUZZYPPO_VERSION "unknown"
#endif

namespace fuzzyppo {

using json = nlohmann::ordered_json;

const char* version_string() { return "fuzzyppo " FUZZYPPO_VERSION; }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  // Accept integral floating forms such as "1e5".
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return v;
  const double d = parse_double(key, text);
  if (d < 0.0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(d);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ConfigError(key, "expected true/false, got '" + text + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
};

template <class T>
Field real_field(const char* key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return format_double(c.*member); },
          [member](TrainConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_double(k, v);
          }};
}

template <class T>
Field count_field(const char* key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(c.*member); },
          [member](TrainConfig& c, const std::string& k, const std::string& v) {
            c.*member = static_cast<T>(parse_unsigned(k, v));
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      real_field("gamma", &TrainConfig::gamma),
      real_field("lr", &TrainConfig::lr),
      real_field("clip_eps", &TrainConfig::clip_eps),
      real_field("entropy_coef", &TrainConfig::entropy_coef),
      real_field("value_coef", &TrainConfig::value_coef),
      count_field("minibatch_size", &TrainConfig::minibatch_size),
      count_field("horizon", &TrainConfig::horizon),
      real_field("grad_clip", &TrainConfig::grad_clip),
      count_field("epochs", &TrainConfig::epochs),
      real_field("gae_lambda", &TrainConfig::gae_lambda),
      count_field("total_updates", &TrainConfig::total_updates),
      count_field("eval_every", &TrainConfig::eval_every),
      count_field("eval_episodes", &TrainConfig::eval_episodes),
      count_field("seed", &TrainConfig::seed),
      {"adv_norm", [](const TrainConfig& c) { return std::string(c.adv_norm ? "true" : "false"); },
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         c.adv_norm = parse_bool(k, v);
       }},
      {"tsk_order", [](const TrainConfig& c) { return std::to_string(c.tsk_order); },
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         const auto order = parse_unsigned(k, v);
         if (order > 1) throw ConfigError(k, "must be 0 or 1, got '" + v + "'");
         c.tsk_order = static_cast<int>(order);
       }},
      {"consequent_input", [](const TrainConfig& c) { return to_string(c.consequent_input); },
       [](TrainConfig& c, const std::string& k, const std::string& v) {
         if (v == "features") {
           c.consequent_input = ConsequentInput::kFeatures;
         } else if (v == "state") {
           c.consequent_input = ConsequentInput::kState;
         } else {
           throw ConfigError(k, "must be 'features' or 'state', got '" + v + "'");
         }
       }},
      count_field("hidden_units", &TrainConfig::hidden_units),
      count_field("num_features", &TrainConfig::num_features),
      count_field("num_rules", &TrainConfig::num_rules),
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json config_json(const TrainConfig& c) {
  json j = json::object();
  for (const auto& f : fields()) j[f.key] = f.get(c);
  return j;
}

void write_text_atomically(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string config_to_text(const TrainConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + "=" + f.get(config) + "\n";
  return out;
}

void set_config_field(TrainConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, key, value);
      return;
    }
  }
  throw ConfigError(key, "unknown configuration key");
}

void validate_config(const TrainConfig& config) {
  try {
    validate(config);
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(msg.substr(0, colon), trim(msg.substr(colon + 1)));
  }
}

TrainConfig parse_config_text(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "expected key=value");
    }
    set_config_field(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  validate_config(base);
  return base;
}

TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), base);
}

std::string variant_name(const TrainConfig& config) {
  return "clip" + format_double(config.grad_clip);
}

std::filesystem::path run_directory(const std::filesystem::path& root, const TrainConfig& config) {
  return root / variant_name(config) / std::to_string(config.seed);
}

std::string train_log_header() {
  return "update_idx,iteration,loss_total,loss_clip,loss_value,entropy,grad_norm_preclip,"
         "approx_kl,clip_fraction";
}

std::string train_log_row(const UpdateRecord& r) {
  const auto& m = r.metrics;
  return std::to_string(r.update_idx) + "," + std::to_string(r.iteration) + "," +
         format_double(m.loss_total) + "," + format_double(m.loss_clip) + "," +
         format_double(m.loss_value) + "," + format_double(m.entropy) + "," +
         format_double(m.grad_norm_preclip) + "," + format_double(m.approx_kl) + "," +
         format_double(m.clip_fraction);
}

std::string eval_log_header(std::size_t episodes) {
  std::string h = "update_idx,mean_return";
  for (std::size_t i = 0; i < episodes; ++i) h += ",ep_return_" + std::to_string(i);
  return h;
}

std::string eval_log_row(const EvalRecord& r) {
  std::string row = std::to_string(r.update_idx) + "," + format_double(r.result.mean_return);
  for (double x : r.result.returns) row += "," + format_double(x);
  return row;
}

std::vector<EvalRecord> read_eval_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || line.rfind("update_idx,mean_return", 0) != 0) {
    throw std::runtime_error(path.string() + ": missing eval_log header");
  }
  const std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<EvalRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const auto fail = [&](const std::string& why) {
      return std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (cells.size() != columns) throw fail("expected " + std::to_string(columns) + " columns");
    EvalRecord rec;
    try {
      rec.update_idx = parse_unsigned("update_idx", cells[0]);
      rec.result.mean_return = parse_double("mean_return", cells[1]);
      for (std::size_t i = 2; i < cells.size(); ++i) {
        rec.result.returns.push_back(parse_double("ep_return", cells[i]));
      }
    } catch (const ConfigError& e) {
      throw fail(e.what());
    }
    if (!out.empty() && rec.update_idx <= out.back().update_idx) {
      throw fail("update_idx not increasing");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

RunPaths run_paths(const std::filesystem::path& dir) {
  return {dir, dir / "manifest.json", dir / "train_log.csv", dir / "eval_log.csv",
          dir / "checkpoint_latest.bin", dir / "checkpoint_final.bin"};
}

namespace {

class RunWriter : public TrainObserver {
 public:
  RunWriter(const RunPaths& paths, std::size_t eval_episodes)
      : paths_(paths), train_(paths.train_log, std::ios::trunc), eval_(paths.eval_log, std::ios::trunc) {
    if (!train_ || !eval_) throw std::runtime_error("cannot open logs in " + paths.dir.string());
    train_ << train_log_header() << '\n' << std::flush;
    eval_ << eval_log_header(eval_episodes) << '\n' << std::flush;
  }

  void on_update(const UpdateRecord& r) override { train_ << train_log_row(r) << '\n' << std::flush; }

  void on_eval(const EvalRecord& r, const ActorCritic& agent) override {
    eval_ << eval_log_row(r) << '\n' << std::flush;
    save_checkpoint(agent.store, paths_.checkpoint_latest);
  }

  void on_finish(const ActorCritic& agent) override {
    save_checkpoint(agent.store, paths_.checkpoint_final);
  }

 private:
  RunPaths paths_;
  std::ofstream train_;
  std::ofstream eval_;
};

json manifest_json(const TrainConfig& config, const RunPaths& paths) {
  json m;
  m["version"] = version_string();
  m["seed"] = config.seed;
  m["variant"] = variant_name(config);
  m["config"] = config_json(config);
  m["artifacts"] = {{"train_log", paths.train_log.filename().string()},
                    {"eval_log", paths.eval_log.filename().string()},
                    {"checkpoint_latest", paths.checkpoint_latest.filename().string()},
                    {"checkpoint_final", paths.checkpoint_final.filename().string()}};
  return m;
}

}  // namespace

RunOutcome run_experiment(const TrainConfig& config, const std::filesystem::path& out_root) {
  validate_config(config);
  RunOutcome outcome;
  outcome.paths = run_paths(run_directory(out_root, config));
  std::filesystem::create_directories(outcome.paths.dir);

  json manifest = manifest_json(config, outcome.paths);
  manifest["started_at"] = utc_now();
  manifest["status"] = "running";
  write_text_atomically(outcome.paths.manifest, manifest.dump(2) + "\n");

  try {
    RunWriter writer(outcome.paths, config.eval_episodes);
    outcome.log = train(config, &writer).log;
  } catch (const std::exception& e) {
    manifest["finished_at"] = utc_now();
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    write_text_atomically(outcome.paths.manifest, manifest.dump(2) + "\n");
    throw;
  }
  manifest["finished_at"] = utc_now();
  manifest["status"] = "completed";
  write_text_atomically(outcome.paths.manifest, manifest.dump(2) + "\n");
  return outcome;
}

SeedSummary summarize_evals(std::uint64_t seed, const std::vector<EvalRecord>& evals) {
  SeedSummary s;
  s.seed = seed;
  s.ok = !evals.empty();
  if (evals.empty()) return s;
  s.final_mean_return = evals.back().result.mean_return;
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (!s.first_update_at_500 && evals[i].result.mean_return >= 500.0) {
      s.first_update_at_500 = evals[i].update_idx;
    }
    if (i > 0) {
      const double dx = static_cast<double>(evals[i].update_idx - evals[i - 1].update_idx);
      s.auc += 0.5 * dx * (evals[i].result.mean_return + evals[i - 1].result.mean_return);
    }
  }
  return s;
}

bool SweepResult::ok() const {
  return std::all_of(seeds.begin(), seeds.end(), [](const SeedSummary& s) { return s.ok; });
}

std::string summary_to_json(const TrainConfig& base, const std::vector<SeedSummary>& seeds) {
  json j;
  j["variant"] = variant_name(base);
  j["version"] = version_string();
  json per_seed = json::object();
  for (const auto& s : seeds) {
    json e;
    e["final_mean_return"] = s.final_mean_return;
    e["first_update_at_500"] =
        s.first_update_at_500 ? json(*s.first_update_at_500) : json(nullptr);
    e["auc"] = s.auc;
    if (!s.ok) e["error"] = s.error;
    per_seed[std::to_string(s.seed)] = e;
  }
  j["seeds"] = per_seed;
  return j.dump(2) + "\n";
}

SweepResult run_sweep(const TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out_root, unsigned jobs) {
  validate_config(base);
  SweepResult result;
  result.seeds.resize(seeds.size());
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(seeds.size())));

  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    while (true) {
      std::size_t k;
      {
        std::lock_guard lock(mu);
        if (next >= seeds.size()) return;
        k = next++;
      }
      TrainConfig cfg = base;
      cfg.seed = seeds[k];
      try {
        const RunOutcome run = run_experiment(cfg, out_root);
        result.seeds[k] = summarize_evals(seeds[k], run.log.evals);
      } catch (const std::exception& e) {
        result.seeds[k].seed = seeds[k];
        result.seeds[k].ok = false;
        result.seeds[k].error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const auto dir = out_root / variant_name(base);
  std::filesystem::create_directories(dir);
  result.summary_path = dir / "summary.json";
  write_text_atomically(result.summary_path, summary_to_json(base, result.seeds));
  return result;
}

}  // namespace fuzzyppo
