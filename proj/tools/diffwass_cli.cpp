// diffwass: command-line front end for simulation, spectra, transport,
// limit-law sampling and the experiment harness.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "diffwass/diffusion.hpp"
#include "diffwass/experiments.hpp"
#include "diffwass/limit_laws.hpp"
#include "diffwass/measure.hpp"
#include "diffwass/spectral_functionals.hpp"
#include "diffwass/spectrum.hpp"
#include "diffwass/transport.hpp"
#include "diffwass/version.hpp"

namespace fs = std::filesystem;
using namespace diffwass;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out;
  std::string format = "csv";
};

struct PathArgs {
  int dim = 1;
  double t = 100.0;
  double dt = 1e-3;
  double amplitude = 0.0;
  std::string start = "uniform";
};

std::string default_out() {
  if (const char* env = std::getenv("DIFFWASS_OUT"); env && *env) return env;
  return "results";
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads (0: all cores)")->capture_default_str();
  app->add_option("--out", c.out, "Output directory (default: $DIFFWASS_OUT or ./results)");
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

void add_path(CLI::App* app, PathArgs& p) {
  app->add_option("-d,--dim", p.dim, "Torus dimension")->check(CLI::Range(1, 5))->capture_default_str();
  app->add_option("-t,--horizon", p.t, "Time horizon")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--dt", p.dt, "Time step")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--potential", p.amplitude, "Amplitude a of V(x) = a cos x (d = 1)")->capture_default_str();
  app->add_option("--start", p.start, "Start point")->check(CLI::IsMember({"uniform", "corner", "center"}))->capture_default_str();
}

SimulationSpec make_spec(const PathArgs& p, std::uint64_t seed) {
  SimulationSpec s;
  s.dim = p.dim;
  s.t_end = p.t;
  s.dt = p.dt;
  s.seed = seed;
  if (p.amplitude != 0.0) s.potential = CirclePotential::cosine(p.amplitude);
  if (p.start != "uniform") {
    const double c = p.start == "corner" ? 0.0 : 0.5 * kTwoPi;
    s.init = TorusPoint(std::vector<double>(static_cast<std::size_t>(p.dim), c));
  }
  return s;
}

fs::path out_dir(const Common& c) {
  fs::path dir = c.out.empty() ? fs::path(default_out()) : fs::path(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os.flush()) throw IoError("write failed for " + path.string());
  std::cout << path.string() << '\n';
}

void cmd_simulate(const Common& c, const PathArgs& p, std::size_t grid) {
  const auto path = simulate_path(make_spec(p, c.seed));
  const fs::path dir = out_dir(c);
  std::ostringstream os;
  if (grid > 0) {
    const auto m = empirical_measure_grid(path, grid, 0.0);
    if (c.format == "json") {
      os << json{{"dim", m.dim}, {"grid_n", m.grid_n}, {"weights", m.weights}}.dump() << '\n';
    } else {
      write_measure_csv(os, m);
    }
    write_file(dir / ("measure." + c.format), os.str());
    return;
  }
  if (c.format == "json") {
    os << json{{"dim", path.dim}, {"dt", path.dt}, {"seed", path.seed}, {"times", path.times}, {"points", path.points}}.dump()
       << '\n';
  } else {
    write_path_csv(os, path);
  }
  write_file(dir / ("path." + c.format), os.str());
}

void cmd_spectrum(const Common& c, const PathArgs& p, double lambda_max, double r) {
  const auto modes = std::make_shared<const ModeList>(enumerate_modes(p.dim, lambda_max));
  const auto spec = psi_functionals(simulate_path(make_spec(p, c.seed)), modes);
  const auto xi = xi_r(spec, *modes, r);
  std::ostringstream os;
  if (c.format == "json") {
    json jm = json::array();
    for (std::size_t i = 0; i < modes->size(); ++i) {
      const auto& m = (*modes)[i];
      jm.push_back({{"index", m.index},
                    {"eigenvalue", m.eigenvalue},
                    {"frequency", std::vector<int>(m.frequency().begin(), m.frequency().end())},
                    {"parity", to_string(m.parity)},
                    {"psi", spec.psi[i]}});
    }
    os << json{{"horizon", spec.horizon}, {"modes", jm}, {"xi", xi}}.dump(2) << '\n';
  } else {
    os << "index,eigenvalue,frequency,parity,psi\n";
    for (std::size_t i = 0; i < modes->size(); ++i) {
      const auto& m = (*modes)[i];
      os << m.index << ',' << format_number(m.eigenvalue) << ',';
      for (int j = 0; j < m.dim; ++j) os << (j ? " " : "") << m.freq[static_cast<std::size_t>(j)];
      os << ',' << to_string(m.parity) << ',' << format_number(spec.psi[i]) << '\n';
    }
  }
  write_file(out_dir(c) / ("spectrum." + c.format), os.str());
  std::cout << "xi_r(r=" << r << ") = " << xi.value << " (tail bound " << xi.tail_bound << ")\n";
}

void cmd_transport(const Common& c, const PathArgs& p, std::size_t grid, double r, std::string method, double eps) {
  if (p.amplitude != 0.0) throw ArgumentError("transport: the reference measure is uniform; drop --potential");
  const auto path = simulate_path(make_spec(p, c.seed));
  const auto nu = empirical_measure_grid(path, grid, r);
  const auto mu = DiscreteMeasure::uniform(p.dim, grid);
  if (method == "auto") method = p.dim == 1 ? "exact" : "sinkhorn";
  TransportResult res;
  if (method == "exact") {
    if (p.dim != 1) throw ArgumentError("transport: exact solver is for d = 1");
    res = w2_circle_exact(nu, mu);
  } else if (method == "lp") {
    res = w2_lp_small(nu, mu);
  } else {
    const double h = kTwoPi / static_cast<double>(grid);
    SinkhornSchedule sched;
    sched.tolerance = 1e-6;
    sched.relaxation = 1.8;
    res = sinkhorn_w2(nu, mu, eps > 0.0 ? eps : 0.5 * h * h, sched);
  }
  const double w2 = res.squared_distance();
  json j{{"t", path.horizon()}, {"r", r}, {"grid_n", grid}, {"w2_sq", w2}, {"t_w2_sq", path.horizon() * w2}, {"result", res}};
  std::ostringstream os;
  if (c.format == "json") {
    os << j.dump(2) << '\n';
  } else {
    os << "t,r,grid_n,method,w2_sq,t_w2_sq\n"
       << format_number(path.horizon()) << ',' << format_number(r) << ',' << grid << ',' << res.method << ','
       << format_number(w2) << ',' << format_number(path.horizon() * w2) << '\n';
  }
  write_file(out_dir(c) / ("transport." + c.format), os.str());
  std::cout << "W2^2 = " << w2 << ", t W2^2 = " << path.horizon() * w2 << '\n';
}

void cmd_limit_sample(const Common& c, int dim, double r, std::size_t n, double tol) {
  LimitSampleOptions opt;
  opt.tol = tol;
  opt.threads = c.threads;
  const auto s = sample_limit_law(dim, r, n, c.seed, opt);
  const fs::path dir = out_dir(c);
  if (c.format == "json") {
    write_limit_sample(dir / "limit_sample.bin", s);
    std::cout << (dir / "limit_sample.bin").string() << '\n' << (dir / "limit_sample.bin.json").string() << '\n';
  } else {
    std::ostringstream os;
    os << "value\n";
    for (double v : s.values) os << format_number(v) << '\n';
    write_file(dir / "limit_sample.csv", os.str());
  }
  std::cout << "mean " << s.sample_mean() << " (series " << s.series_mean << "), variance " << s.sample_variance()
            << " (series " << s.series_variance << ")\n";
}

void print_summary(const RunRecord& rec, const std::string& format) {
  if (format == "json") {
    std::cout << summary_json(rec).dump(2) << '\n';
    return;
  }
  std::cout << "experiment,config_hash,n_replicas,n_failed,headline,estimate,stderr,target\n"
            << rec.experiment << ',' << rec.config_hash << ',' << rec.n_replicas() << ',' << rec.n_failed() << ','
            << rec.headline << ',' << format_number(rec.estimate) << ',' << format_number(rec.std_error) << ','
            << format_number(rec.target) << '\n';
}

void cmd_experiment_run(const Common& c, const std::string& config_path, bool seed_given, bool quiet) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed_given) {
    cfg.seed = c.seed;
    validate(cfg);
  }
  RunOptions opt;
  opt.threads = c.threads;
  if (!quiet) {
    opt.progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % std::max<std::size_t>(1, total / 20) == 0) {
        std::cerr << "\r" << done << "/" << total << " replicas" << (done == total ? "\n" : "") << std::flush;
      }
    };
  }
  const RunRecord rec = run_experiment(cfg, opt);
  const fs::path dir = out_dir(c);
  for (const auto& f : save_record(rec, dir)) std::cerr << f.string() << '\n';
  // The report for this id covers every record of it in the directory.
  std::vector<RunRecord> all;
  for (auto& r : load_records(dir)) {
    if (r.experiment == rec.experiment) all.push_back(std::move(r));
  }
  for (const auto& f : emit_report(all, dir)) std::cerr << f.string() << '\n';
  for (const auto& f : rec.failures) std::cerr << "replica " << f.replica << " failed: " << f.message << '\n';
  print_summary(rec, c.format);
}

void cmd_experiment_report(const Common& c, const std::string& dir) {
  const auto records = load_records(dir);
  if (records.empty()) throw IoError("no *.record.json files in " + dir);
  const fs::path out = c.out.empty() ? fs::path(dir) : out_dir(c);
  for (const auto& f : emit_report(records, out)) std::cout << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein convergence of empirical measures of diffusions on flat tori"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  PathArgs path;

  auto* sim = app.add_subcommand("simulate", "Simulate one path; write it, or its binned occupation measure");
  std::size_t sim_grid = 0;
  add_common(sim, common);
  add_path(sim, path);
  sim->add_option("--grid", sim_grid, "Write the occupation measure on an n^d grid instead of the path");

  auto* spec = app.add_subcommand("spectrum", "Path functionals psi_i and Xi_r for one path");
  double lambda_max = 16.0, spec_r = 0.0;
  add_common(spec, common);
  add_path(spec, path);
  spec->add_option("--lambda-max", lambda_max, "Largest eigenvalue kept")->capture_default_str();
  spec->add_option("-r,--smoothing", spec_r, "Smoothing time r for Xi_r")->check(CLI::NonNegativeNumber)->capture_default_str();

  auto* tr = app.add_subcommand("transport", "W2 between one path's occupation measure and the uniform measure");
  std::size_t grid = 256;
  double tr_r = 0.0, eps = 0.0;
  std::string method = "auto";
  add_common(tr, common);
  add_path(tr, path);
  tr->add_option("--grid", grid, "Cells per axis")->check(CLI::Range(4, 1 << 16))->capture_default_str();
  tr->add_option("-r,--smoothing", tr_r, "Heat smoothing time")->check(CLI::NonNegativeNumber)->capture_default_str();
  tr->add_option("--method", method, "Solver")->check(CLI::IsMember({"auto", "exact", "sinkhorn", "lp"}))->capture_default_str();
  tr->add_option("--epsilon", eps, "Sinkhorn epsilon (default h^2 / 2)");

  auto* ls = app.add_subcommand("limit-sample", "Draws from the limit law nu_r");
  int ls_dim = 1;
  double ls_r = 0.0, ls_tol = 1e-2;
  std::size_t ls_n = 100000;
  add_common(ls, common);
  ls->add_option("-d,--dim", ls_dim, "Torus dimension")->check(CLI::Range(1, 5))->capture_default_str();
  ls->add_option("-r,--smoothing", ls_r, "r")->check(CLI::NonNegativeNumber)->capture_default_str();
  ls->add_option("-n,--count", ls_n, "Number of draws")->check(CLI::PositiveNumber)->capture_default_str();
  ls->add_option("--tol", ls_tol, "Tail standard deviation allowed")->check(CLI::PositiveNumber)->capture_default_str();

  auto* ex = app.add_subcommand("experiment", "Run configured experiments or rebuild reports");
  ex->require_subcommand(1);
  auto* run = ex->add_subcommand("run", "Run one experiment config");
  std::string config_path;
  bool quiet = false;
  add_common(run, common);
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_flag("-q,--quiet", quiet, "No progress output");
  auto* rep = ex->add_subcommand("report", "Rebuild summaries from the records in a directory");
  std::string report_dir;
  add_common(rep, common);
  rep->add_option("dir", report_dir, "Directory with *.record.json files")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) cmd_simulate(common, path, sim_grid);
    else if (*spec) cmd_spectrum(common, path, lambda_max, spec_r);
    else if (*tr) cmd_transport(common, path, grid, tr_r, method, eps);
    else if (*ls) cmd_limit_sample(common, ls_dim, ls_r, ls_n, ls_tol);
    else if (*run) cmd_experiment_run(common, config_path, run->count("--seed") > 0, quiet);
    else if (*rep) cmd_experiment_report(common, report_dir);
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
