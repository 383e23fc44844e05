#include "resist/cli.hpp"

#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "resist/figures.hpp"
#include "resist/verify.hpp"

namespace resist::cli {

namespace fs = std::filesystem;

ExperimentConfig parse_experiment(const Json& j) {
  ExperimentConfig cfg;
  cfg.adversary = config_from_json(j);
  try {
    if (j.contains("method")) cfg.method = j.at("method").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad experiment field: ") + e.what());
  }
  method_by_id(cfg.method);
  if (!method_supports(cfg.method, cfg.adversary.norm_q)) {
    throw ConfigError("method '" + cfg.method + "' needs q = 2");
  }
  return cfg;
}

namespace {

struct RunArgs {
  std::string config_path;
  std::string method;
  std::string out_dir;
  std::int64_t seed = -1;
};

struct VerifyArgs {
  std::string scale = "small";
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned workers = 0;
};

struct FigureArgs {
  std::string which;
  std::string out_dir = ".";
  std::vector<double> mus{1.0, 4.0, 16.0};
  std::vector<double> powers{2.0, 3.0, 4.0};
  double norm_q = 1.0;
  double range = 2.0;
  std::size_t points = 201;
};

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  Json j;
  try {
    j = Json::parse(read_file(args.config_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + args.config_path + ": " + e.what());
  }
  ExperimentConfig cfg = parse_experiment(j);
  if (!args.method.empty()) cfg.method = args.method;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  method_by_id(cfg.method);

  LowerBoundRun lb = run_lower_bound(cfg.adversary, cfg.method, cfg.seed);
  const fs::path check_path = cfg.out_dir / "check.json";
  write_file_atomic(cfg.out_dir / "instance.json", instance_to_json(*lb.instance).dump(2) + "\n");
  write_file_atomic(cfg.out_dir / "curve.csv", run_curve_csv(lb.run, lb.bounds.h_star));
  write_file_atomic(cfg.out_dir / "bounds.json", bounds_to_json(lb.bounds).dump(2) + "\n");
  write_file_atomic(check_path, report_to_json(lb.report).dump(2) + "\n");

  const double f_last = lb.run.value_curve.back();
  out << lb.report.check_id << "\n"
      << "  F(x_T)         = " << f_last << "\n"
      << "  h_star         = " << lb.bounds.h_star << "\n"
      << "  F(x_T) - h_star = " << f_last - lb.bounds.h_star << "\n"
      << "  lower bound    = " << lb.bounds.lower_bound << "\n"
      << "  verdict        = " << (lb.report.pass ? "PASS" : "FAIL") << "\n";
  if (!lb.report.pass) {
    err << "certified check failed (worst excess " << lb.report.worst_violation << "); witness: "
        << check_path.string() << "\n";
    return kExitCheckFailed;
  }
  return kExitPass;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  Scale scale;
  if (args.scale == "small") {
    scale = Scale::kSmall;
  } else if (args.scale == "full") {
    scale = Scale::kFull;
  } else {
    throw ConfigError("--scale must be 'small' or 'full'");
  }
  const VerifySummary summary = run_verify(scale, args.seed, args.workers);
  const std::string table = summary.table();
  out << table;
  if (!args.out_dir.empty()) {
    const fs::path dir = args.out_dir;
    Json all = Json::array();
    for (std::size_t i = 0; i < summary.reports.size(); ++i) {
      const Json rj = report_to_json(summary.reports[i]);
      std::ostringstream name;
      name << "cell_" << i << ".json";
      write_file_atomic(dir / "checks" / name.str(), rj.dump(2) + "\n");
      all.push_back(rj);
    }
    write_file_atomic(dir / "summary.txt", table);
    write_file_atomic(dir / "summary.json", all.dump(2) + "\n");
  }
  if (!summary.all_pass()) {
    err << "verification failed\n";
    return kExitCheckFailed;
  }
  return kExitPass;
}

int cmd_figures(const FigureArgs& args, std::ostream& out) {
  CsvTable table;
  std::string file;
  if (args.which == "smoothing") {
    table = smoothing_table(default_figure_curve(), args.mus, -args.range, args.range, args.points);
    file = "smoothing.csv";
  } else if (args.which == "levelsets") {
    table = levelset_table(args.powers, args.norm_q, args.range, args.points);
    file = "levelsets.csv";
  } else {
    throw ConfigError("figure must be 'smoothing' or 'levelsets'");
  }
  const fs::path path = fs::path(args.out_dir) / file;
  write_file_atomic(path, to_csv(table));
  out << "wrote " << path.string() << " (" << table.rows.size() << " rows)\n";
  return kExitPass;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Worst-case instances and certified lower bounds for regularized composite optimization", "resist"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Run one method against the resisting oracle and certify the bounds");
  run->add_option("--config", run_args.config_path, "Experiment file (JSON)")->required();
  run->add_option("--method", run_args.method, "subgradient | prox_grad | fgm | fgm_restart");
  run->add_option("--out", run_args.out_dir, "Output directory");
  run->add_option("--seed", run_args.seed, "Sampling seed")->check(CLI::NonNegativeNumber);

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "Run the property grid");
  verify->add_option("--scale", verify_args.scale, "small | full")->check(CLI::IsMember({"small", "full"}));
  verify->add_option("--seed", verify_args.seed, "Base seed");
  verify->add_option("--out", verify_args.out_dir, "Directory for per-cell reports");
  verify->add_option("--workers", verify_args.workers, "Worker threads (0 = hardware concurrency)");

  FigureArgs figure_args;
  CLI::App* figures = app.add_subcommand("figures", "Emit figure data as CSV");
  figures->add_option("which", figure_args.which, "smoothing | levelsets")
      ->required()
      ->check(CLI::IsMember({"smoothing", "levelsets"}));
  figures->add_option("--out", figure_args.out_dir, "Output directory");
  figures->add_option("--mu", figure_args.mus, "Smoothing parameters")->delimiter(',');
  figures->add_option("--powers", figure_args.powers, "Powers p for the level sets")->delimiter(',');
  figures->add_option("--q", figure_args.norm_q, "Norm q for the level sets");
  figures->add_option("--range", figure_args.range, "Half-width of the plotted window");
  figures->add_option("--points", figure_args.points, "Grid points per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitError;
  }

  try {
    if (*run) return cmd_run(run_args, out, err);
    if (*verify) return cmd_verify(verify_args, out, err);
    if (*figures) return cmd_figures(figure_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace resist::cli
