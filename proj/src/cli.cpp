#include "assay/cli.hpp"

#include "assay/engine.hpp"
#include "assay/evaluation.hpp"
#include "assay/report.hpp"
#include "assay/service.hpp"
#include "assay/synth.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace assay {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number list: '" + text + "'");
    }
  }
  return out;
}

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> budget;
  std::optional<std::string> strategy;
};

json apply_overrides(json cfg, const ConfigOverrides& o) {
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.runs) cfg["runs"] = *o.runs;
  if (o.budget) {
    if (*o.budget == "until-stopped") cfg["budget"] = *o.budget;
    else cfg["budget"] = std::stoll(*o.budget);
  }
  if (o.strategy) cfg["strategy"]["kind"] = *o.strategy;
  return cfg;
}

SessionConfig config_for_trajectory(const std::string& config_path, const std::string& traj_path) {
  if (!config_path.empty()) return load_session_config(config_path);
  const auto meta = meta_path_for(traj_path);
  if (!std::filesystem::exists(meta)) {
    throw std::invalid_argument("no --config given and no " + meta + " next to the trajectory");
  }
  return session_config_from_json(read_json_file(meta).at("config"));
}

std::vector<Trajectory> load_trajectories(const Pool& pool, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto runs = read_trajectories(pool, in);
  if (const auto meta = meta_path_for(path); std::filesystem::exists(meta)) {
    apply_trajectory_meta(read_json_file(meta), runs);
  }
  return runs;
}

HttpServer* active_server = nullptr;

void handle_signal(int) {
  if (active_server) active_server->stop();
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Label-efficient Bayesian assessment of classifier performance"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a prediction file and write it as normalized JSONL");
  std::string ingest_in, ingest_out, ingest_format;
  ingest->add_option("--in", ingest_in, "Predictions file (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--format", ingest_format, "Input format")->check(CLI::IsMember({"jsonl", "csv"}));
  ingest->add_option("--out", ingest_out, "Normalized JSONL output");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled pool");
  int synth_k = 0;
  std::size_t synth_n = 0;
  std::string synth_profile, synth_range, synth_weights, synth_out;
  double synth_offset = 0.0;
  std::uint64_t synth_seed = 0;
  synth->add_option("--classes", synth_k, "Number of classes K")->required();
  synth->add_option("--n", synth_n, "Pool size")->required();
  auto* profile_opt = synth->add_option("--profile", synth_profile, "Per-class accuracies, comma separated");
  auto* range_opt = synth->add_option("--profile-range", synth_range, "lo,hi: accuracies evenly spaced");
  profile_opt->excludes(range_opt);
  synth->add_option("--offset", synth_offset, "Calibration offset added to the accuracy");
  synth->add_option("--class-weights", synth_weights, "Relative predicted-class frequencies");
  synth->add_option("--seed", synth_seed, "Random seed")->required();
  synth->add_option("--out", synth_out, "Output JSONL")->required();

  // run
  auto* run = app.add_subcommand("run", "Run assessment sessions against a labeled pool");
  std::string run_config, run_pool, run_out;
  int run_jobs = 1;
  ConfigOverrides run_overrides;
  run->add_option("--config", run_config, "Session config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--pool", run_pool, "Labeled predictions")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Trajectory JSONL output")->required();
  run->add_option("--seed", run_overrides.seed, "Base seed (overrides config)");
  run->add_option("--runs", run_overrides.runs, "Number of runs (overrides config)");
  run->add_option("--budget", run_overrides.budget, "Label budget or until-stopped (overrides config)");
  run->add_option("--strategy", run_overrides.strategy, "Strategy kind (overrides config)");
  run->add_option("--jobs", run_jobs, "Parallel runs")->check(CLI::PositiveNumber);

  // eval
  auto* eval = app.add_subcommand("eval", "Score trajectories against the fully labeled pool");
  std::string eval_pool, eval_config, eval_out;
  std::vector<std::string> eval_traj, eval_names;
  double eval_alpha = 0.05;
  eval->add_option("--truth-from", eval_pool, "Fully labeled predictions")->required()->check(CLI::ExistingFile);
  eval->add_option("--traj", eval_traj, "Trajectory files; the first is the significance baseline")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--name", eval_names, "Method names, one per --traj");
  eval->add_option("--config", eval_config, "Session config (default: the trajectory's sidecar)");
  eval->add_option("--alpha", eval_alpha, "Significance level");
  eval->add_option("--out", eval_out, "Report JSON (default stdout)");

  // report
  auto* report = app.add_subcommand("report", "Posterior assessment report for one run");
  std::string report_pool, report_traj, report_config, report_out;
  int report_run = 0;
  ReportOptions report_options;
  std::optional<std::uint64_t> report_seed;
  report->add_option("--pool", report_pool, "Predictions")->required()->check(CLI::ExistingFile);
  report->add_option("--traj", report_traj, "Trajectory JSONL")->required()->check(CLI::ExistingFile);
  report->add_option("--run", report_run, "Run index");
  report->add_option("--config", report_config, "Session config (default: the trajectory's sidecar)");
  report->add_option("--level", report_options.level, "Credible level")->check(CLI::Range(0.0, 1.0));
  report->add_option("--samples", report_options.n_samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  report->add_option("--seed", report_seed, "Monte Carlo seed (default: config seed)");
  report->add_option("--out", report_out, "Report JSON (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve live labeling sessions over HTTP");
  std::string serve_host = "127.0.0.1", serve_pool, serve_config, serve_state, serve_token;
  int serve_port = 8080;
  serve->add_option("--port", serve_port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--pool", serve_pool, "Predictions")->required()->check(CLI::ExistingFile);
  serve->add_option("--config", serve_config, "Default session config")->required()->check(CLI::ExistingFile);
  serve->add_option("--state-dir", serve_state, "Directory for persisted sessions");
  serve->add_option("--token", serve_token, "Require this bearer token");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << app.help();
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) {
      const auto pool = ingest_format.empty()
                            ? ingest_predictions(ingest_in)
                            : ingest_predictions(ingest_in, ingest_format == "csv" ? PredictionFormat::csv
                                                                                   : PredictionFormat::jsonl);
      if (!ingest_out.empty()) write_predictions_jsonl(pool, ingest_out);
      std::size_t labeled = 0;
      for (const auto& r : pool.records()) labeled += r.label ? 1 : 0;
      std::cout << json{{"records", pool.size()}, {"classes", pool.num_classes()}, {"labeled", labeled}}.dump()
                << '\n';
      return 0;
    }
    if (*synth) {
      SynthSpec spec;
      spec.num_classes = synth_k;
      spec.n = synth_n;
      spec.calibration_offset = synth_offset;
      spec.seed = synth_seed;
      if (!synth_profile.empty()) {
        spec.accuracy_profile = parse_list(synth_profile);
      } else if (!synth_range.empty()) {
        const auto r = parse_list(synth_range);
        if (r.size() != 2) throw std::invalid_argument("--profile-range takes lo,hi");
        spec.accuracy_profile = linear_profile(synth_k, r[0], r[1]);
      } else {
        throw std::invalid_argument("synth needs --profile or --profile-range");
      }
      if (!synth_weights.empty()) spec.class_weights = parse_list(synth_weights);
      write_predictions_jsonl(synth_pool(spec), synth_out);
      return 0;
    }
    if (*run) {
      const auto cfg = session_config_from_json(apply_overrides(read_json_file(run_config), run_overrides));
      auto pool = std::make_shared<const Pool>(ingest_predictions(run_pool));
      const auto ctx = make_session_context(pool, cfg);
      for (const auto& w : ctx->warnings) std::cerr << "warning: " << w << '\n';
      std::optional<StoppingTruth> truth;
      if (cfg.benchmark) truth = compute_ground_truth(*ctx).stopping();
      const auto runs = run_experiment(ctx, cfg.runs, run_jobs, truth ? &*truth : nullptr);
      std::ofstream out(run_out);
      write_trajectories(*ctx, runs, out);
      out.close();
      if (!out) throw std::runtime_error("cannot write " + run_out);
      const auto meta = trajectory_meta(*ctx, runs);
      write_json(meta, meta_path_for(run_out));
      std::cout << json{{"runs", runs.size()}, {"config_digest", config_digest(cfg)}, {"out", run_out}}.dump() << '\n';
      return 0;
    }
    if (*eval) {
      if (!eval_names.empty() && eval_names.size() != eval_traj.size()) {
        throw std::invalid_argument("give one --name per --traj");
      }
      auto pool = std::make_shared<const Pool>(ingest_predictions(eval_pool));
      const auto cfg = config_for_trajectory(eval_config, eval_traj.front());
      const auto ctx = make_session_context(pool, cfg);
      const auto truth = compute_ground_truth(*ctx);
      std::vector<MethodEvaluation> methods;
      for (std::size_t t = 0; t < eval_traj.size(); ++t) {
        const auto method_cfg = config_for_trajectory(eval_config, eval_traj[t]);
        const auto method_ctx = t == 0 ? ctx : make_session_context(pool, method_cfg);
        if (method_cfg.task != cfg.task || method_ctx->num_arms() != ctx->num_arms()) {
          throw std::invalid_argument(eval_traj[t] + " was run on a different task or partition");
        }
        MethodEvaluation m;
        m.name = eval_names.empty() ? std::string(to_string(method_cfg.strategy.kind)) + ":" + eval_traj[t]
                                    : eval_names[t];
        for (const auto& traj : load_trajectories(*pool, eval_traj[t])) {
          m.runs.push_back(evaluate_run(*method_ctx, truth, traj));
        }
        methods.push_back(std::move(m));
      }
      write_json(evaluation_report(*ctx, truth, methods, eval_alpha), eval_out);
      return 0;
    }
    if (*report) {
      auto pool = std::make_shared<const Pool>(ingest_predictions(report_pool));
      const auto cfg = config_for_trajectory(report_config, report_traj);
      const auto ctx = make_session_context(pool, cfg);
      const auto runs = load_trajectories(*pool, report_traj);
      const auto it = std::find_if(runs.begin(), runs.end(), [&](const Trajectory& t) { return t.run == report_run; });
      std::vector<Step> steps;
      if (it != runs.end()) steps = it->steps;
      else if (report_run != 0) throw std::invalid_argument("trajectory has no run " + std::to_string(report_run));
      report_options.seed = report_seed.value_or(cfg.seed);
      auto doc = build_report(*ctx, steps, report_options);
      doc["run"] = report_run;
      write_json(doc, report_out);
      return 0;
    }
    if (*serve) {
      auto pool = std::make_shared<const Pool>(ingest_predictions(serve_pool));
      const json defaults = read_json_file(serve_config);
      make_session_context(pool, session_config_from_json(defaults));
      SessionService service(pool, defaults, serve_state);
      HttpServer server(service, serve_token);
      const int port = server.bind(serve_host, serve_port);
      if (port < 0) throw std::runtime_error("cannot bind " + serve_host + ":" + std::to_string(serve_port));
      std::cerr << "listening on " << serve_host << ":" << port << '\n';
      active_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      server.listen();
      active_server = nullptr;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace assay
