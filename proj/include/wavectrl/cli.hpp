// CLI entry point: solve / replay / sweep / figure subcommands.
// Exit codes: 0 success, 1 usage or config error, 2 solver divergence
// (outputs are still written).
#pragma once

#include "wavectrl/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace wavectrl {

namespace detail {

inline Config load_config_or_default(const std::string& path) {
  if (path.empty()) return Config{};
  return load_config(path);
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void write_figures(const Config& cfg, const Discretization& disc, const RunReport& report) {
  for (const auto& name : cfg.figures) {
    const auto kind = figure_kind_from(name);
    if (!kind) continue;
    const std::string path = join_path(cfg.out_dir, name + ".svg");
    if (*kind == FigureKind::NormT) {
      auto [times, norms] = slice_norms(disc.mesh, disc.rule, report.y);
      write_svg({Series{"||y(.,t)||", std::move(times), std::move(norms)}}, FigureKind::NormT, path);
    } else {
      write_svg(report, *kind, path);
    }
  }
}

inline int cmd_solve(const Config& cfg) {
  const RunConfig& rc = cfg.run;
  rc.validate();
  const Discretization disc = make_discretization(rc.nx, rc.nt, rc.T, rc.quad_order);
  const RunReport report = run(disc, rc);
  write_csv(report, join_path(cfg.out_dir, "run.csv"));
  write_control_csv(report.v, join_path(cfg.out_dir, "control.csv"));
  write_figures(cfg, disc, report);
  const auto& last = report.records.back();
  std::printf("%s: status=%s iterations=%d sqrt2E=%.3e norm_y=%.3e norm_v=%.3e -> %s\n",
              to_string(report.algorithm), to_string(report.status),
              static_cast<int>(report.records.size()) - 1, last.sqrt2E, last.norm_y, last.norm_v,
              cfg.out_dir.c_str());
  return report.status == RunStatus::Converged ? 0 : 2;
}

inline int cmd_replay(const Config& cfg, const std::string& control_path, bool uncontrolled) {
  const RunConfig& rc = cfg.run;
  BoundaryTrace control;
  if (!uncontrolled) control = read_control_csv(control_path);
  const InitialData data = rc.initial_data();
  const ReplayResult res = fd_forward(data.u0, data.u1, uncontrolled ? nullptr : &control,
                                      &rc.nonlinearity, cfg.replay_M, cfg.replay_cfl, rc.T);
  const FinalEnergy fe = final_energy(res, data.u0, data.u1);

  std::string out = "t,norm_y\n";
  for (std::size_t i = 0; i < res.times.size(); ++i)
    out += detail::fmt_g(res.times[i]) + ',' + detail::fmt_g(res.energy[i]) + '\n';
  detail::atomic_write(join_path(cfg.out_dir, "replay.csv"), out);
  write_svg({Series{uncontrolled ? "uncontrolled" : "replayed", res.times, res.energy}}, FigureKind::NormT,
            join_path(cfg.out_dir, "norm_t.svg"));
  std::printf("replay: M=%d steps=%zu final %s energy = %.4e -> %s\n", res.M, res.times.size() - 1,
              fe.relative ? "relative" : "absolute", fe.value, cfg.out_dir.c_str());
  return 0;
}

inline int cmd_sweep(const Config& cfg) {
  RunConfig rc = cfg.run;
  rc.validate();
  const Discretization disc = make_discretization(rc.nx, rc.nt, rc.T, rc.quad_order);
  const std::vector<double> cfs = cfg.sweep_c_f.empty() ? std::vector<double>{rc.nonlinearity.c_f} : cfg.sweep_c_f;
  const std::vector<double> cus = cfg.sweep_c_u0.empty() ? std::vector<double>{rc.c_u0} : cfg.sweep_c_u0;
  std::vector<SweepRow> rows;
  bool all_converged = true;
  for (const double cf : cfs)
    for (const double cu : cus) {
      RunConfig one = rc;
      one.nonlinearity.c_f = cf;
      one.c_u0 = cu;
      const RunReport report = run(disc, one);
      SweepRow row;
      row.c_f = cf;
      row.c_u0 = cu;
      row.algorithm = report.algorithm;
      row.k_star = report.k_star;
      row.sqrt2E_final = report.records.back().sqrt2E;
      row.norm_y = report.records.back().norm_y;
      row.norm_v = report.records.back().norm_v;
      row.status = report.status;
      rows.push_back(row);
      all_converged = all_converged && report.status == RunStatus::Converged;
      std::printf("sweep %s c_f=%g c_u0=%g: status=%s k_star=%s sqrt2E=%.3e\n", to_string(report.algorithm),
                  cf, cu, to_string(report.status),
                  report.k_star ? std::to_string(*report.k_star).c_str() : "inf", row.sqrt2E_final);
    }
  write_summary_csv(rows, join_path(cfg.out_dir, "summary.csv"));
  return all_converged ? 0 : 2;
}

inline int cmd_figure(const std::string& kind_str, const std::vector<std::string>& csv_paths,
                      const std::string& out_path) {
  const auto kind = figure_kind_from(kind_str);
  if (!kind) {
    std::fprintf(stderr, "figure: unknown kind '%s'\n", kind_str.c_str());
    return 1;
  }
  std::vector<Series> series;
  for (const auto& path : csv_paths) {
    Series s;
    s.label = std::filesystem::path(path).stem().string();
    if (*kind == FigureKind::ErrorVsK || *kind == FigureKind::LambdaVsK) {
      const CsvRun run = read_run_csv(path);
      for (const auto& rec : run.records) {
        if (*kind == FigureKind::LambdaVsK && !rec.lambda) continue;
        s.x.push_back(rec.k);
        s.y.push_back(*kind == FigureKind::ErrorVsK ? rec.sqrt2E : *rec.lambda);
      }
    } else {
      auto [xs, ys] = read_curve_csv(path);
      s.x = std::move(xs);
      s.y = std::move(ys);
    }
    series.push_back(std::move(s));
  }
  write_svg(series, *kind, out_path);
  return 0;
}

}  // namespace detail

inline int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Neumann boundary null-controls for the 1D semilinear wave equation"};
  app.require_subcommand(1);

  std::string config_path, out_override, control_path, out_path;
  std::string kind_str = "error_vs_k";
  std::vector<std::string> csv_paths;
  bool uncontrolled = false;

  CLI::App* solve = app.add_subcommand("solve", "run one algorithm; write run.csv, control.csv and figures");
  solve->add_option("-c,--config", config_path, "config file (key=value)");
  solve->add_option("-o,--out", out_override, "output directory (overrides config)");

  CLI::App* replay = app.add_subcommand("replay", "feed a control to the finite-difference forward solver");
  replay->add_option("-c,--config", config_path, "config file (key=value)");
  replay->add_option("--control", control_path, "control CSV with columns t,v");
  replay->add_flag("--uncontrolled", uncontrolled, "replay without any control");
  replay->add_option("-o,--out", out_override, "output directory (overrides config)");

  CLI::App* sweep = app.add_subcommand("sweep", "run the configured c_f/c_u0 lists; write summary.csv");
  sweep->add_option("-c,--config", config_path, "config file (key=value)");
  sweep->add_option("-o,--out", out_override, "output directory (overrides config)");

  CLI::App* figure = app.add_subcommand("figure", "re-render an SVG from stored CSVs");
  figure->add_option("--kind", kind_str, "error_vs_k | lambda_vs_k | norm_t | control_t");
  figure->add_option("--csv", csv_paths, "input CSV file(s)")->required();
  figure->add_option("--out", out_path, "output SVG path")->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (figure->parsed()) return detail::cmd_figure(kind_str, csv_paths, out_path);
    Config cfg = detail::load_config_or_default(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (solve->parsed()) return detail::cmd_solve(cfg);
    if (sweep->parsed()) return detail::cmd_sweep(cfg);
    if (replay->parsed()) {
      if (!uncontrolled && control_path.empty()) {
        std::fprintf(stderr, "replay: --control FILE is required (or pass --uncontrolled)\n");
        return 1;
      }
      return detail::cmd_replay(cfg, control_path, uncontrolled);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace wavectrl
