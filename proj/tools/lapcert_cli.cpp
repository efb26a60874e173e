// lapcert: MAP point, Laplace approximation, Hellinger distance and certified
// Hellinger bounds for Gaussian-prior inverse problems.
//
// Exit codes:
//   0  success
//   1  usage or problem-spec error
//   2  solver failure (no convergence, saddle point, non-finite values)
//   3  exp(-T Phi) not integrable against the prior
//   4  derivative check failed

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lapcert/lapcert.hpp"

namespace {

using lapcert::io::json;

enum ExitCode : int { kOk = 0, kSpecError = 1, kSolverFailure = 2, kDivergent = 3, kDerivativeFailure = 4 };

struct RunConfig {
  std::string builtin;
  std::string spec_path;
  std::string y_csv;
  std::optional<double> sigma;
  std::optional<double> gamma;
  std::string engine = "auto";
  int order = 0;
  long samples = 200000;
  std::uint64_t seed = 20170101;
  std::string out;
  int points = 20;
  bool sweep = false;
};

std::vector<double> parse_csv(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw lapcert::SpecError("--y: '" + item + "' is not a number");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw lapcert::SpecError("--y: '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw lapcert::SpecError("--y: no values");
  return out;
}

lapcert::ForwardProblem load_problem(const RunConfig& cfg) {
  if (cfg.builtin.empty() == cfg.spec_path.empty())
    throw lapcert::SpecError("exactly one of --builtin and --spec is required");
  std::optional<lapcert::Vector> y;
  if (!cfg.y_csv.empty()) {
    const auto vals = parse_csv(cfg.y_csv);
    y = Eigen::Map<const lapcert::Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }
  if (!cfg.builtin.empty()) {
    lapcert::BuiltinOptions opts;
    opts.y = y;
    if (cfg.sigma) opts.sigma = *cfg.sigma;
    if (cfg.gamma) opts.gamma = *cfg.gamma;
    try {
      return lapcert::builtin_model(cfg.builtin, opts);
    } catch (const lapcert::UnknownModel& e) {
      throw lapcert::SpecError(e.what());
    } catch (const lapcert::DimensionMismatch& e) {
      throw lapcert::SpecError(e.what());
    }
  }
  lapcert::ForwardProblem p = lapcert::io::load_problem(cfg.spec_path);
  if (y) {
    try {
      return p.with_data(*y);
    } catch (const lapcert::DimensionMismatch& e) {
      throw lapcert::SpecError(e.what());
    }
  }
  return p;
}

lapcert::IntegrationEngine make_engine(const RunConfig& cfg, Eigen::Index dim) {
  if (cfg.engine == "auto") {
    if (cfg.order > 0 && dim <= 3) return lapcert::IntegrationEngine::gauss_hermite(cfg.order);
    return lapcert::IntegrationEngine::default_for(dim, cfg.samples, cfg.seed);
  }
  if (cfg.engine == "gh") return lapcert::IntegrationEngine::gauss_hermite(cfg.order > 0 ? cfg.order : (dim <= 2 ? 96 : 48));
  return lapcert::IntegrationEngine::monte_carlo(cfg.samples, cfg.seed);
}

void emit(const json& report, const std::string& out) {
  const std::string text = report.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw lapcert::SpecError("cannot write '" + out + "'");
  f << text;
}

json problem_summary(const lapcert::ForwardProblem& p, const RunConfig& cfg) {
  return json{{"model", p.model().name},
              {"source", cfg.builtin.empty() ? cfg.spec_path : "builtin:" + cfg.builtin},
              {"dim_in", p.model().dim_in},
              {"dim_out", p.model().dim_out},
              {"y", lapcert::io::vector_to_json(p.data())}};
}

int cmd_solve(const RunConfig& cfg, bool with_laplace) {
  const lapcert::ForwardProblem p = load_problem(cfg);
  const lapcert::MapResult r = lapcert::find_map(p);
  json report{{"schema", lapcert::io::kSchemaVersion},
              {"command", with_laplace ? "laplace" : "solve"},
              {"problem", problem_summary(p, cfg)}};
  report["map"] = lapcert::io::map_to_json(r);
  report["u_map"] = lapcert::io::vector_to_json(r.u_map);
  report["i_at_map"] = r.i_at_map;
  report["one_step"] = r.iterations <= 1;
  if (with_laplace) {
    const lapcert::GaussianMeasure nu = lapcert::laplace_measure(r);
    report["laplace"] = {{"mean", lapcert::io::vector_to_json(nu.mean())},
                         {"covariance", lapcert::io::matrix_to_json(nu.covariance())}};
  }
  emit(report, cfg.out);
  return kOk;
}

int cmd_certify(const RunConfig& cfg) {
  const lapcert::ForwardProblem p = load_problem(cfg);
  const lapcert::MapResult r = lapcert::find_map(p);
  const lapcert::TaylorMisfit t = lapcert::TaylorMisfit::at(p, r);
  const lapcert::IntegrationEngine engine = make_engine(cfg, p.dim());
  const lapcert::CertificationReport c = lapcert::certify(p, t, r, engine);
  json report = lapcert::io::certification_to_json(c);
  report["schema"] = lapcert::io::kSchemaVersion;
  report["command"] = "certify";
  report["problem"] = problem_summary(p, cfg);
  report["u_map"] = lapcert::io::vector_to_json(r.u_map);
  report["i_at_map"] = r.i_at_map;
  report["map"] = lapcert::io::map_to_json(r);
  report["engine"] = lapcert::io::engine_to_json(engine);
  emit(report, cfg.out);
  return kOk;
}

json row_to_json(const lapcert::study::Exp1dRow& row) {
  return json{{"y", row.y},
              {"sigma", row.sigma},
              {"gamma", row.gamma},
              {"u_map", row.u_map},
              {"d_hellinger", row.d_hellinger},
              {"K_prop61", row.k_prop61},
              {"bound_prop61", row.bound_prop61},
              {"K_cor63", row.k_cor63},
              {"bound_cor63", row.bound_cor63}};
}

void write_density_csv(const std::filesystem::path& path, const std::vector<lapcert::study::DensityPoint>& pts) {
  std::ofstream f(path);
  if (!f) throw lapcert::SpecError("cannot write '" + path.string() + "'");
  f << "u,posterior_density,laplace_density\n";
  char buf[128];
  for (const auto& pt : pts) {
    std::snprintf(buf, sizeof buf, "%.2f,%.12e,%.12e\n", pt.u, pt.posterior, pt.laplace);
    f << buf;
  }
}

int cmd_reproduce(const RunConfig& cfg) {
  const double sigma = cfg.sigma.value_or(1.0);
  const double gamma = cfg.gamma.value_or(1.0);
  const lapcert::IntegrationEngine engine = make_engine(cfg, 1);
  const auto refs = lapcert::study::reference_rows();

  std::filesystem::path dir = cfg.out.empty() ? std::filesystem::path(".") : std::filesystem::path(cfg.out);
  std::filesystem::create_directories(dir);

  json rows = json::array();
  std::printf("%6s %10s %10s %10s %10s %10s   (sigma=%g, gamma=%g)\n", "y", "d_H", "K_prop", "bound", "K_cor",
              "bound", sigma, gamma);
  for (const auto& ref : refs) {
    const auto row = lapcert::study::run_exp1d(ref.y, sigma, gamma, engine);
    std::printf("%6.1f %10.6f %10.6f %10.6f %10.6f %10.6f   computed\n", row.y, row.d_hellinger, row.k_prop61,
                row.bound_prop61, row.k_cor63, row.bound_cor63);
    std::printf("%6.1f %10.6f %10.6f %10.6f %10.6f %10.6f   reference (max rel. deviation %.4f)\n", ref.y,
                ref.d_hellinger, ref.k_prop61, ref.bound_prop61, ref.k_cor63, ref.bound_cor63,
                lapcert::study::max_relative_error(row, ref));
    json jr = row_to_json(row);
    jr["reference"] = row_to_json(ref);
    jr["max_relative_error"] = lapcert::study::max_relative_error(row, ref);

    const lapcert::ForwardProblem p = lapcert::exp1d_problem(ref.y, sigma, gamma);
    const lapcert::MapResult r = lapcert::find_map(p);
    const auto name = "density_y" + std::to_string(static_cast<int>(ref.y)) + ".csv";
    write_density_csv(dir / name, lapcert::study::density_curve(p, r, engine));
    jr["density_csv"] = (dir / name).string();

    if (cfg.sweep) {
      const auto grid = lapcert::study::grid_sweep(ref, {0.5, 1.0, 2.0}, engine);
      const auto fine = lapcert::study::refined_sweep(ref, engine);
      jr["sweep_grid"] = {{"best", row_to_json(grid.best)}, {"max_relative_error", grid.max_relative_error}};
      jr["sweep_refined"] = {{"best", row_to_json(fine.best)}, {"max_relative_error", fine.max_relative_error}};
      std::printf("       grid sweep best sigma=%g gamma=%g (max rel. deviation %.4f); refined sigma=%.6g gamma=%.6g "
                  "(%.5f)\n",
                  grid.best.sigma, grid.best.gamma, grid.max_relative_error, fine.best.sigma, fine.best.gamma,
                  fine.max_relative_error);
    }
    rows.push_back(jr);
  }
  json report{{"schema", lapcert::io::kSchemaVersion},
              {"command", "reproduce-paper"},
              {"engine", lapcert::io::engine_to_json(engine)},
              {"rows", rows}};
  std::ofstream f(dir / "reproduce.json");
  f << report.dump(2) << "\n";
  return kOk;
}

int cmd_check_derivatives(const RunConfig& cfg) {
  const lapcert::ForwardProblem p = load_problem(cfg);
  const auto pts = lapcert::derivative_check_points(p, cfg.points, cfg.seed);
  const auto checks = lapcert::check_derivatives(p, pts);
  json report{{"schema", lapcert::io::kSchemaVersion},
              {"command", "check-derivatives"},
              {"problem", problem_summary(p, cfg)}};
  bool ok = true;
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"quantity", c.quantity},
                   {"max_relative_error", c.max_error},
                   {"threshold", c.threshold},
                   {"points", c.points},
                   {"passed", c.passed()}});
    ok = ok && c.passed();
  }
  report["checks"] = arr;
  report["passed"] = ok;
  emit(report, cfg.out);
  return ok ? kOk : kDerivativeFailure;
}

void add_problem_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--builtin", cfg.builtin, "Built-in problem: exp1d | linear | quad2d");
  sub->add_option("--spec", cfg.spec_path, "Problem spec JSON file")->check(CLI::ExistingFile);
  sub->add_option("--y", cfg.y_csv, "Comma-separated data vector overriding the problem's y");
  sub->add_option("--sigma", cfg.sigma, "Prior standard deviation (exp1d)")->check(CLI::PositiveNumber);
  sub->add_option("--gamma", cfg.gamma, "Noise standard deviation (exp1d)")->check(CLI::PositiveNumber);
  sub->add_option("--out", cfg.out, "Output path (directory for reproduce-paper)");
}

void add_engine_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--engine", cfg.engine, "Integration engine: gh | mc (default: by dimension)")
      ->check(CLI::IsMember({"auto", "gh", "mc"}));
  sub->add_option("--order", cfg.order, "Gauss-Hermite points per axis")->check(CLI::PositiveNumber);
  sub->add_option("--samples", cfg.samples, "Monte Carlo sample count")->check(CLI::Range(2L, 1000000000L));
  sub->add_option("--seed", cfg.seed, "Monte Carlo seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplace approximation and certified Hellinger bounds for Bayesian inverse problems"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* solve = app.add_subcommand("solve", "Find the MAP point");
  add_problem_options(solve, cfg);
  auto* laplace = app.add_subcommand("laplace", "MAP point and Laplace approximation N(u_MAP, HI^{-1})");
  add_problem_options(laplace, cfg);
  auto* certify = app.add_subcommand("certify", "Hellinger distance and both certified bounds");
  add_problem_options(certify, cfg);
  add_engine_options(certify, cfg);
  auto* reproduce = app.add_subcommand("reproduce-paper", "exp(u) study for y = -2, 2 with density curves");
  reproduce->add_option("--sigma", cfg.sigma, "Prior standard deviation")->check(CLI::PositiveNumber);
  reproduce->add_option("--gamma", cfg.gamma, "Noise standard deviation")->check(CLI::PositiveNumber);
  reproduce->add_option("--out", cfg.out, "Output directory");
  reproduce->add_flag("--sweep", cfg.sweep, "Also search (sigma, gamma) for the reference values");
  add_engine_options(reproduce, cfg);
  auto* derivs = app.add_subcommand("check-derivatives", "Finite-difference checks of DG, HG, grad I, HI");
  add_problem_options(derivs, cfg);
  derivs->add_option("--points", cfg.points, "Number of random check points")->check(CLI::PositiveNumber);
  derivs->add_option("--seed", cfg.seed, "Seed for check points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kSpecError;
  }

  try {
    if (*solve) return cmd_solve(cfg, false);
    if (*laplace) return cmd_solve(cfg, true);
    if (*certify) return cmd_certify(cfg);
    if (*reproduce) return cmd_reproduce(cfg);
    if (*derivs) return cmd_check_derivatives(cfg);
  } catch (const lapcert::SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSpecError;
  } catch (const lapcert::DivergentIntegral& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDivergent;
  } catch (const lapcert::Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSpecError;
  }
  return kSpecError;
}
