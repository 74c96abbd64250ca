// SPDX-License-Identifier: Apache-2.0
// geofno: data generation, training, evaluation, inverse design and the
// verification suites from one binary.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "geofno/checkpoint.hpp"
#include "geofno/config.hpp"
#include "geofno/dataset.hpp"
#include "geofno/design.hpp"
#include "geofno/error.hpp"
#include "geofno/synthetic.hpp"
#include "geofno/training.hpp"
#include "geofno/verify.hpp"

namespace fs = std::filesystem;
using namespace geofno;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Raised for problems with the invocation itself (exit code 2).
struct UsageError : Error {
  using Error::Error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

void prepare_out(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string join(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : " ") + n;
  return s;
}

ConfigFile load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw UsageError("config file not found: " + path.string());
  return ConfigFile::load(path);
}

// ------------------------------------------------------------------ gen-data

struct GenDataArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_gen_data(const GenDataArgs& a) {
  const ConfigFile file = load_config(a.config);
  file.require_sections({"data"});
  SyntheticConfig cfg = SyntheticConfig::from_config(file, "data");
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();

  const fs::path out(a.out);
  prepare_out(out);
  const SyntheticSplit split = gen_synthetic(cfg);
  save_bundle(split.train, out / "train");
  save_bundle(split.test, out / "test");

  ConfigFile resolved;
  cfg.write_to(resolved, "data");
  write_text(out / "resolved_config.ini", resolved.to_string());

  const DatasetManifest& m = split.train.manifest;
  std::cout << "problem         " << m.problem << "\n"
            << "io_mode         " << to_string(m.io_mode) << "\n"
            << "dim             " << m.dim << "\n"
            << "input channels  " << join(m.input_channels) << "\n"
            << "output channels " << join(m.output_channels) << "\n"
            << "train samples   " << split.train.size() << "  -> " << (out / "train").string() << "\n"
            << "test samples    " << split.test.size() << "  -> " << (out / "test").string() << "\n"
            << "generator hash  " << m.generator_hash << "\n";
  return kOk;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string test_data;
  std::string model_config;
  std::string out;
  std::string resume;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  std::optional<GeoFnoModel> model;
  std::optional<TrainState> state;
  TrainConfig tcfg;
  if (!a.resume.empty()) {
    if (!fs::is_regular_file(a.resume)) throw UsageError("checkpoint not found: " + a.resume);
    Checkpoint ck = load_checkpoint(a.resume);
    if (!ck.state) throw ConfigError("checkpoint " + a.resume + " carries no training state");
    if (ck.train_config) tcfg = *ck.train_config;
    model.emplace(ck.model());
    state = std::move(ck.state);
  } else {
    if (a.model_config.empty()) throw UsageError("--model-config is required unless --resume is given");
    const ConfigFile file = load_config(a.model_config);
    file.require_sections({"model", "train"});
    const ModelConfig mcfg = ModelConfig::from_config(file, "model");
    tcfg = TrainConfig::from_config(file, "train");
    if (a.seed) tcfg.seed = *a.seed;
    model.emplace(mcfg, tcfg.seed);
  }
  if (a.epochs) tcfg.epochs = *a.epochs;
  if (a.lr) tcfg.initial_lr = *a.lr;
  if (a.batch) tcfg.batch_size = *a.batch;
  if (a.seed && state) tcfg.seed = *a.seed;
  tcfg.validate();

  const DatasetBundle train_set = load_bundle(a.data);
  const DatasetBundle test_set = load_bundle(a.test_data);

  const fs::path out(a.out);
  prepare_out(out);
  ConfigFile resolved;
  model->config().write_to(resolved, "model");
  tcfg.write_to(resolved, "train");
  resolved.set("run", "data", fs::absolute(a.data).string());
  resolved.set("run", "test_data", fs::absolute(a.test_data).string());
  if (!a.resume.empty()) resolved.set("run", "resume", fs::absolute(a.resume).string());
  write_text(out / "resolved_config.ini", resolved.to_string());

  std::ofstream log(out / "train_log.txt", std::ios::trunc);
  log << "epoch train_err test_err lr wall_seconds\n";
  TrainOptions options;
  options.on_epoch = [&](const EpochRecord& r) {
    char line[160];
    std::snprintf(line, sizeof line, "%zu %.10e %.10e %.6e %.3f\n", r.epoch, r.train_err, r.test_err, r.lr,
                  r.wall_seconds);
    log << line << std::flush;
    if (!a.quiet) std::cout << line << std::flush;
  };
  const TrainResult result = train(*model, train_set, test_set, tcfg, state, options);

  save_checkpoint(result.model, result.state, out / "checkpoint.gfnc", tcfg);
  write_text(out / "report.txt", result.report().to_text());
  std::cout << "final train " << result.report().final_train() << "  test " << result.report().final_test()
            << "  -> " << (out / "checkpoint.gfnc").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::optional<double> fail_above;
};

int cmd_eval(const EvalArgs& a) {
  if (!fs::is_regular_file(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
  const GeoFnoModel model = load_checkpoint(a.checkpoint).model();
  const DatasetBundle data = load_bundle(a.data);
  const EvalResult r = evaluate(model, data);
  std::printf("samples              %zu\n", r.per_sample.size());
  std::printf("mean relative L2     %.6e\n", r.mean);
  std::printf("median relative L2   %.6e\n", r.median());
  std::printf("max relative L2      %.6e\n", r.max());
  std::printf("seconds per instance %.6e\n", r.seconds_per_instance);
  if (a.fail_above && !(r.mean <= *a.fail_above)) {
    std::printf("FAIL: mean %.6e exceeds %.6e\n", r.mean, *a.fail_above);
    return kFailure;
  }
  return kOk;
}

// -------------------------------------------------------------------- design

struct DesignArgs {
  std::string checkpoint;
  std::string design_config;
  std::string out;
  bool scan = false;
  std::optional<double> max_gap;
};

int cmd_design(const DesignArgs& a) {
  if (!fs::is_regular_file(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
  const ConfigFile file = load_config(a.design_config);
  file.require_sections({"data", "design"});
  const SyntheticConfig data = SyntheticConfig::from_config(file, "data");
  const DesignObjectiveConfig objective = DesignObjectiveConfig::from_config(file, "design");
  const auto steps = static_cast<std::size_t>(file.get_int("design", "steps", 100));
  const double lr = file.get_double("design", "lr", 1e-2);

  const GeoFnoModel model = load_checkpoint(a.checkpoint).model();
  const fs::path out(a.out);
  prepare_out(out);
  ConfigFile resolved;
  data.write_to(resolved, "data");
  objective.write_to(resolved, "design");
  resolved.set("design", "steps", std::to_string(steps));
  resolved.set("design", "lr", format_double(lr));
  resolved.set("run", "checkpoint", fs::absolute(a.checkpoint).string());
  write_text(out / "resolved_config.ini", resolved.to_string());

  const DesignProblem problem = synthetic_design_problem(model, data, objective);
  const DesignResult result = optimize_design(problem, steps, lr);
  write_text(out / "trace.txt", result.trace.to_text());
  export_design_geometry(data, objective, result.theta, out / "geometry.gfno");
  const DesignVerification v = verify_design(problem, result.theta);

  std::ostringstream rep;
  rep.precision(10);
  rep << "theta =";
  for (double t : result.theta) rep << ' ' << t;
  rep << "\nobjective = " << result.objective << "\nsurrogate_field_objective = " << v.surrogate
      << "\nsolver_field_objective = " << v.solver << "\ngap = " << v.gap << "\n";
  int code = kOk;
  if (a.scan) {
    const DesignScan s = scan_design(problem);
    const double cell = s.grid.size() > 1 ? s.grid[1] - s.grid[0] : 0.0;
    const double distance = std::abs(result.theta.at(0) - s.grid[s.best]);
    rep << "scan_best = " << s.grid[s.best] << "\nscan_value = " << s.values[s.best] << "\nscan_cell = " << cell
        << "\nscan_distance = " << distance << "\nscan_within_cell = " << (distance <= cell ? "true" : "false")
        << "\n";
    std::ofstream sf(out / "scan.txt", std::ios::trunc);
    sf.precision(12);
    sf << "theta objective\n";
    for (std::size_t i = 0; i < s.grid.size(); ++i) sf << s.grid[i] << ' ' << s.values[i] << "\n";
    if (distance > cell) code = kFailure;
  }
  if (a.max_gap && !(v.gap < *a.max_gap)) code = kFailure;
  write_text(out / "verification.txt", rep.str());
  std::cout << rep.str();
  return code;
}

// -------------------------------------------------------------------- verify

struct VerifyArgs {
  std::vector<std::string> suites;
  std::uint64_t seed = 0;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<std::string> suites = a.suites;
  if (suites.empty() || (suites.size() == 1 && suites[0] == "all")) suites = suite_names();
  bool ok = true;
  for (const auto& name : suites) {
    const SuiteReport rep = run_suite(name, a.seed);
    std::cout << rep.to_text() << std::flush;
    ok = ok && rep.passed();
  }
  return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geofno: geometry-aware Fourier neural operator toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "geofno 0.1.0");

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic deformed-annulus dataset");
  gen_cmd->add_option("--config", gen.config, "Config file with a [data] section")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Override data.seed");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset bundle");
  train_cmd->add_option("--data", tr.data, "Training bundle directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--test-data", tr.test_data, "Test bundle directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--model-config", tr.model_config, "Config file with [model] and [train] sections");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--resume", tr.resume, "Continue from a checkpoint");
  train_cmd->add_option("--epochs", tr.epochs, "Override train.epochs");
  train_cmd->add_option("--lr", tr.lr, "Override train.initial_lr");
  train_cmd->add_option("--batch", tr.batch, "Override train.batch_size");
  train_cmd->add_option("--seed", tr.seed, "Override train.seed");
  train_cmd->add_flag("--quiet", tr.quiet, "Do not echo the per-epoch log");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Relative L2 metrics of a checkpoint on a bundle");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--data", ev.data, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--fail-above", ev.fail_above, "Exit 1 when the mean error exceeds this value");

  DesignArgs de;
  auto* design_cmd = app.add_subcommand("design", "Inverse design through a trained surrogate");
  design_cmd->add_option("--checkpoint", de.checkpoint, "Checkpoint file")->required();
  design_cmd->add_option("--design-config", de.design_config, "Config file with [data] and [design]")->required();
  design_cmd->add_option("--out", de.out, "Output directory")->required();
  design_cmd->add_flag("--scan", de.scan, "Brute-force scan of a one-parameter problem");
  design_cmd->add_option("--max-gap", de.max_gap, "Exit 1 when the surrogate/solver gap is not below this");

  VerifyArgs ve;
  auto* verify_cmd = app.add_subcommand("verify", "Run verification suites");
  std::vector<std::string> choices = suite_names();
  choices.push_back("all");
  verify_cmd->add_option("--suite", ve.suites, "Suite name (repeatable)")->check(CLI::IsMember(choices));
  verify_cmd->add_option("--seed", ve.seed, "Seed for randomized cases");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_data(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*eval_cmd) return cmd_eval(ev);
    if (*design_cmd) return cmd_design(de);
    if (*verify_cmd) return cmd_verify(ve);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
