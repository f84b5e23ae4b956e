// actowl: run ownership-learning experiments, serve live sessions, check scenario files.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <pthread.h>
#include <sys/socket.h>
#include <thread>

#include <CLI11.hpp>

#include "actowl/cli/run_config.hpp"
#include "actowl/harness/metrics_io.hpp"
#include "actowl/service/http_api.hpp"

namespace {

namespace fs = std::filesystem;
using namespace actowl;

constexpr int kUsage = 2;
constexpr int kRuntime = 1;

/// Bad flags or an unusable config; reported with exit status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::size_t start = 0;
    while (start <= item.size()) {
      auto comma = item.find(',', start);
      if (comma == std::string::npos) comma = item.size();
      auto piece = dialogue::text::trim(std::string_view(item).substr(start, comma - start));
      if (!piece.empty()) out.push_back(piece);
      start = comma + 1;
    }
  }
  return out;
}

harness::Scenario load_scenario_or_usage(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("scenario file not found: " + path);
  try {
    return harness::load_scenario(path);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

harness::BackendFactory backend_factory(const cli::RunConfig& cfg, const harness::Scenario& scenario) {
  if (cfg.backend == "llm") {
    dialogue::LlmConfig llm;
    llm.endpoint = cfg.llm_endpoint;
    llm.model = cfg.llm_model;
    const char* token = std::getenv(llm.token_env.c_str());
    if (!token || !*token) throw UsageError("--backend llm needs the " + llm.token_env + " environment variable");
    return [llm] { return std::make_shared<dialogue::LlmHttpBackend>(llm); };
  }
  auto backend = harness::make_mock_backend(scenario);
  auto rules = backend.rules();
  for (const auto& cls : cfg.mock_shared) rules.overrides[dialogue::text::lower(cls)] = dialogue::Ownership::Shared;
  return [rules] { return std::make_shared<dialogue::MockBackend>(rules); };
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

int cmd_run(const cli::RunConfig& cfg) {
  try {
    cfg.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  const auto scenario = load_scenario_or_usage(cfg.scenario);
  const auto factory = backend_factory(cfg, scenario);
  const auto methods = cfg.methods();

  const auto result =
      harness::run_experiment(scenario, methods, cfg.trials, cfg.seed, cfg.trial_config(), factory, cfg.jobs);

  std::ostringstream csv;
  harness::write_metrics_csv(csv, result);
  write_file(cfg.metrics_out, csv.str());
  write_file(cfg.aggregate_out, harness::aggregate_json(result).dump(2) + "\n");
  nlohmann::json echo = cli::to_json(cfg);
  echo["effective_hyperparameters"] =
      harness::hyperparameters_to_json(cfg.trial_config().effective_hyperparameters(scenario));
  echo["scenario_name"] = scenario.name;
  write_file(cli::config_echo_path(cfg.aggregate_out), echo.dump(2) + "\n");

  std::size_t events = 0;
  for (const auto& [m, trials] : result.trials)
    for (const auto& t : trials) {
      for (const auto& e : t.events)
        std::cerr << "trial " << t.trial << " (" << harness::to_string(m) << "): could not interpret answer for object "
                  << e.object_id << ": " << e.message << " [" << e.raw_text << "]\n";
      events += t.events.size();
    }

  for (auto m : methods) {
    const auto agg = harness::aggregate(result.trials.at(m));
    std::cout << harness::to_string(m) << ": final step " << agg.back().step << ", mean ARI "
              << harness::format_real(agg.back().mean_ari) << "\n";
  }
  std::cout << "wrote " << cfg.metrics_out << " and " << cfg.aggregate_out << "\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  nlohmann::json j;
  try {
    j = harness::read_json_file(path);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  std::vector<std::string> violations;
  try {
    violations = harness::validate_scenario(harness::parse_scenario(j));
  } catch (const InputError& e) {
    violations.push_back(e.what());
  }
  if (violations.empty()) {
    std::cout << path << ": valid\n";
    return 0;
  }
  std::cout << path << ": " << violations.size() << " violation(s)\n";
  for (const auto& v : violations) std::cout << "  - " << v << "\n";
  return 1;
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> scenarios;
  std::string scenario_dir = "scenarios";
  std::string backend = "mock";
  std::string llm_endpoint = dialogue::LlmConfig{}.endpoint;
  std::string llm_model = dialogue::LlmConfig{}.model;
  std::size_t particles = 100;
  std::size_t samples = 10;
  std::uint64_t seed = 1;
  std::string persist_dir;
};

int cmd_serve(const ServeOptions& opt) {
  std::map<std::string, harness::Scenario> scenarios;
  auto add = [&](const fs::path& p) {
    auto s = load_scenario_or_usage(p.string());
    scenarios[s.name] = s;
  };
  if (!opt.scenarios.empty()) {
    for (const auto& p : opt.scenarios) add(p);
  } else {
    if (!fs::is_directory(opt.scenario_dir)) throw UsageError("scenario directory not found: " + opt.scenario_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(opt.scenario_dir))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add(f);
  }
  if (scenarios.empty()) throw UsageError("no scenarios to serve");

  service::ServiceOptions so;
  so.defaults.particles = opt.particles;
  so.defaults.ig_mode = IgMode::sampled(opt.samples);
  so.default_seed = opt.seed;
  if (!opt.persist_dir.empty()) so.persist_dir = opt.persist_dir;
  if (opt.backend == "llm") {
    dialogue::LlmConfig llm;
    llm.endpoint = opt.llm_endpoint;
    llm.model = opt.llm_model;
    const char* token = std::getenv(llm.token_env.c_str());
    if (!token || !*token) throw UsageError("--backend llm needs the " + llm.token_env + " environment variable");
    so.backend = [llm](const harness::Scenario&) { return std::make_shared<dialogue::LlmHttpBackend>(llm); };
  } else if (opt.backend != "mock") {
    throw UsageError("backend must be mock or llm");
  }

  // Signals are taken synchronously by a dedicated thread so stop() runs
  // outside a signal handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::SessionManager manager(std::move(scenarios), so);
  httplib::Server server;
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  service::mount_routes(server, manager);

  int port = opt.port;
  if (port == 0) {
    port = server.bind_to_any_port(opt.host);
    if (port < 0) {
      std::cerr << "error: cannot bind " << opt.host << "\n";
      return kRuntime;
    }
  } else if (!server.bind_to_port(opt.host, port)) {
    std::cerr << "error: cannot bind " << opt.host << ":" << port << " (port in use?)\n";
    return kRuntime;
  }
  std::cout << "listening on http://" << opt.host << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  const bool ok = server.listen_after_bind();
  if (waiter.joinable()) {
    // listen returned without a signal (e.g. a socket error): wake the waiter.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  std::cout << "shut down" << std::endl;
  return ok ? 0 : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active ownership learning: experiments, live sessions, scenario checks"};
  app.require_subcommand(1);

  cli::RunConfig cfg;
  std::string config_file;
  std::vector<std::string> strategies, mock_shared;
  bool unclamp = false;
  auto* run = app.add_subcommand("run", "Run trials and write metrics CSV + aggregate JSON");
  run->add_option("--config", config_file, "JSON file with any of the run settings; flags override it");
  auto* o_scenario = run->add_option("--scenario", cfg.scenario, "Scenario JSON file");
  auto* o_strategy = run->add_option("--strategy", strategies, "ig-max, ig-min, random, no-llm, llm-only (comma list)");
  auto* o_trials = run->add_option("--trials", cfg.trials, "Trials per strategy");
  auto* o_particles = run->add_option("--particles", cfg.particles, "Particles R");
  auto* o_samples = run->add_option("--samples", cfg.samples, "Pseudo-answers J per particle");
  auto* o_igmode = run->add_option("--ig-mode", cfg.ig_mode, "sampled or exact");
  auto* o_seed = run->add_option("--seed", cfg.seed, "Base seed; trial t uses seed + t");
  auto* o_backend = run->add_option("--backend", cfg.backend, "mock or llm");
  auto* o_endpoint = run->add_option("--llm-endpoint", cfg.llm_endpoint, "Chat-completion URL");
  auto* o_model = run->add_option("--llm-model", cfg.llm_model, "Model name sent to the endpoint");
  auto* o_ablation =
      run->add_option("--ablation", cfg.ablation, "full, color-only, position-only or attribute-only");
  double w_answer = 0, w_attribute = 0, w_position = 0;
  auto* o_wans = run->add_option("--w-answer", w_answer, "Answer modality weight");
  auto* o_wattr = run->add_option("--w-attribute", w_attribute, "Attribute modality weight");
  auto* o_wpos = run->add_option("--w-position", w_position, "Position modality weight");
  auto* o_unclamp = run->add_flag("--unclamp", unclamp, "Infer position components instead of fixing them");
  auto* o_mock_shared = run->add_option("--mock-shared", mock_shared, "Force the mock classifier to call these classes shared");
  auto* o_policy = run->add_option("--on-interpretation-error", cfg.policy, "skip (requeue) or abort");
  auto* o_metrics = run->add_option("--metrics-out", cfg.metrics_out, "Metrics CSV path");
  auto* o_aggregate = run->add_option("--aggregate-out", cfg.aggregate_out, "Aggregate JSON path");
  auto* o_jobs = run->add_option("--jobs", cfg.jobs, "Trials to run in parallel");

  ServeOptions serve_opt;
  auto* serve = app.add_subcommand("serve", "Serve the live session HTTP API");
  serve->add_option("--host", serve_opt.host, "Address to bind");
  serve->add_option("--port", serve_opt.port, "Port to bind (0 picks a free one)");
  serve->add_option("--scenario", serve_opt.scenarios, "Scenario file to offer (repeatable)");
  serve->add_option("--scenario-dir", serve_opt.scenario_dir, "Directory of scenario files, used without --scenario");
  serve->add_option("--backend", serve_opt.backend, "mock or llm");
  serve->add_option("--llm-endpoint", serve_opt.llm_endpoint, "Chat-completion URL");
  serve->add_option("--llm-model", serve_opt.llm_model, "Model name sent to the endpoint");
  serve->add_option("--particles", serve_opt.particles, "Default particles R");
  serve->add_option("--samples", serve_opt.samples, "Default pseudo-answers J");
  serve->add_option("--seed", serve_opt.seed, "Default session seed");
  serve->add_option("--persist-dir", serve_opt.persist_dir, "Write a JSON snapshot per session here after each change");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", validate_path, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run) {
      // File first, then only the flags that were actually given.
      cli::RunConfig merged;
      if (!config_file.empty()) {
        if (!fs::exists(config_file)) throw UsageError("config file not found: " + config_file);
        try {
          cli::apply_json(merged, harness::read_json_file(config_file));
        } catch (const InputError& e) {
          throw UsageError(e.what());
        }
      }
      if (o_scenario->count()) merged.scenario = cfg.scenario;
      if (o_strategy->count()) merged.strategies = split_list(strategies);
      if (o_trials->count()) merged.trials = cfg.trials;
      if (o_particles->count()) merged.particles = cfg.particles;
      if (o_samples->count()) merged.samples = cfg.samples;
      if (o_igmode->count()) merged.ig_mode = cfg.ig_mode;
      if (o_seed->count()) merged.seed = cfg.seed;
      if (o_backend->count()) merged.backend = cfg.backend;
      if (o_endpoint->count()) merged.llm_endpoint = cfg.llm_endpoint;
      if (o_model->count()) merged.llm_model = cfg.llm_model;
      if (o_ablation->count()) merged.ablation = cfg.ablation;
      if (o_wans->count()) merged.w_answer = w_answer;
      if (o_wattr->count()) merged.w_attribute = w_attribute;
      if (o_wpos->count()) merged.w_position = w_position;
      if (o_unclamp->count()) merged.clamp_components = !unclamp;
      if (o_mock_shared->count()) merged.mock_shared = split_list(mock_shared);
      if (o_policy->count()) merged.policy = cfg.policy;
      if (o_metrics->count()) merged.metrics_out = cfg.metrics_out;
      if (o_aggregate->count()) merged.aggregate_out = cfg.aggregate_out;
      if (o_jobs->count()) merged.jobs = cfg.jobs;
      return cmd_run(merged);
    }
    if (*serve) return cmd_serve(serve_opt);
    if (*validate) return cmd_validate(validate_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const dialogue::BackendError& e) {
    std::cerr << "error: " << e.what() << "\n" << e.payload() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
