// Command line front end: knockoff generation, the two variance-difference
// heteroskedasticity tests, and the Monte Carlo table harness.
//
// Exit codes: 0 success, 2 usage or input errors, 3 knockoff generation
// failure, 4 degenerate variance estimate.

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetknock/csv.hpp"
#include "hetknock/errors.hpp"
#include "hetknock/knockoffs.hpp"
#include "hetknock/report.hpp"
#include "hetknock/rng.hpp"
#include "hetknock/sim.hpp"
#include "hetknock/stats.hpp"

namespace hk = hetknock;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitGeneration = 3;
constexpr int kExitDegenerate = 4;

// Thrown around generate_knockoffs so the failure keeps its own exit code.
struct GenerationFailure {
  std::string message;
};

int exit_code_for(const hk::Error& e) {
  return e.code() == hk::ErrorCode::DegenerateVariance ? kExitDegenerate : kExitUsage;
}

std::string join_alphas(const std::vector<double>& alphas) {
  std::string out;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (i) out += ",";
    out += hk::format_double(alphas[i]);
  }
  return out;
}

void emit_json(const nlohmann::ordered_json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  hk::write_file_atomic(path, text);
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  const std::string json_ext = ".json";
  if (path.size() > json_ext.size() &&
      path.compare(path.size() - json_ext.size(), json_ext.size(), json_ext) == 0)
    return path.substr(0, path.size() - json_ext.size()) + suffix;
  return path + suffix;
}

struct ForestFlags {
  int trees = 500;
  int mtry = 0;
  int min_leaf = 5;

  void attach(CLI::App* cmd) {
    cmd->add_option("--trees", trees, "trees in the centering forest")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mtry", mtry, "features tried per split (0 = p/3 rounded up)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--min-leaf", min_leaf, "minimum rows per leaf child")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }

  hk::ForestConfig config(std::uint64_t seed, int threads) const {
    hk::ForestConfig cfg;
    cfg.n_trees = trees;
    cfg.mtry = mtry;
    cfg.min_leaf = min_leaf;
    cfg.seed = seed;
    cfg.threads = threads;
    return cfg;
  }

  void record(std::map<std::string, std::string>& opts) const {
    opts["trees"] = std::to_string(trees);
    opts["mtry"] = std::to_string(mtry);
    opts["min_leaf"] = std::to_string(min_leaf);
  }
};

struct TestFlags {
  std::string in;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<double> alphas{0.1, 0.05};
  double fixed_break = 0.0;
  bool select_break = false;
  bool gen_knockoffs = false;
  double screen_frac = 0.25;
  int r_count = 100;
  std::string center = "full";
  ForestFlags forest;
  CLI::Option* break_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--in", in, "input CSV (x1..xp, optional xk1..xkp, y)")->required();
    cmd->add_option("--out", out, "report JSON path ('-' or empty prints to stdout)");
    cmd->add_option("--seed", seed, "root seed")->capture_default_str();
    cmd->add_option("--threads", threads, "worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", alphas, "test levels")
        ->delimiter(',')
        ->capture_default_str();
    break_opt = cmd->add_option("--break", fixed_break, "fixed break point");
    CLI::Option* sel = cmd->add_flag("--select-break", select_break,
                                     "choose the break from a screening sample");
    break_opt->excludes(sel);
    cmd->add_flag("--gen-knockoffs", gen_knockoffs,
                  "generate knockoffs when the input has none");
    cmd->add_option("--screen-frac", screen_frac,
                    "knockoff screen set size as a fraction of n")
        ->capture_default_str();
    cmd->add_option("--r-count", r_count, "candidate breaks per feature")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--center-split", center,
                    "forest training rows: full inference sample or an independent half")
        ->capture_default_str()
        ->check(CLI::IsMember({"full", "independent"}));
    forest.attach(cmd);
  }

  hk::TestOptions options() const {
    hk::TestOptions opts;
    if (break_opt->count() > 0) opts.fixed_break = fixed_break;
    opts.alphas = alphas;
    opts.r_count = r_count;
    opts.center = center == "independent" ? hk::CenterSplit::Independent : hk::CenterSplit::Full;
    opts.seed = seed;
    return opts;
  }

  hk::Dataset load() const {
    hk::Dataset ds = hk::read_dataset_csv(in);
    hk::validate(ds);
    if (!ds.has_knockoffs()) {
      if (!gen_knockoffs)
        hk::fail(hk::ErrorCode::BadArgument,
                 "input has no knockoff columns; pass --gen-knockoffs to generate them");
      hk::KnockoffGenConfig kcfg;
      kcfg.screen_fraction = screen_frac;
      kcfg.seed = hk::derive_seed(seed, hk::stream::kKnockoff);
      kcfg.threads = threads;
      try {
        ds.x_knock = hk::generate_knockoffs(ds.x, kcfg).first;
      } catch (const hk::Error& e) {
        throw GenerationFailure{e.what()};
      }
    }
    return ds;
  }

  hk::RunManifest manifest(const std::string& command) const {
    hk::RunManifest m;
    m.command = command;
    m.seed = seed;
    m.input_digest = hk::digest_file(in);
    m.options["in"] = in;
    m.options["out"] = out;
    m.options["alpha"] = join_alphas(alphas);
    m.options["break"] = break_opt->count() > 0 ? hk::format_double(fixed_break) : "select";
    m.options["gen_knockoffs"] = gen_knockoffs ? "true" : "false";
    m.options["screen_frac"] = hk::format_double(screen_frac);
    m.options["r_count"] = std::to_string(r_count);
    m.options["center_split"] = center;
    forest.record(m.options);
    return m;
  }
};

int cmd_knockoff(const std::string& in, const std::string& out, const std::string& diag_out,
                 double screen_frac, std::uint64_t seed, int threads) {
  hk::Dataset ds = hk::read_dataset_csv(in);
  hk::validate(ds);

  hk::KnockoffGenConfig cfg;
  cfg.screen_fraction = screen_frac;
  cfg.seed = seed;
  cfg.threads = threads;
  Eigen::MatrixXd xk;
  try {
    xk = hk::generate_knockoffs(ds.x, cfg).first;
  } catch (const hk::Error& e) {
    throw GenerationFailure{e.what()};
  }
  ds.x_knock = xk;
  hk::write_dataset_csv(ds, out);

  hk::RunManifest m;
  m.command = "knockoff";
  m.seed = seed;
  m.input_digest = hk::digest_file(in);
  m.options["in"] = in;
  m.options["out"] = out;
  m.options["diag_out"] = diag_out;
  m.options["screen_frac"] = hk::format_double(screen_frac);
  emit_json(hk::diagnostics_json(hk::knockoff_diagnostics(ds.x, xk), m), diag_out);
  return 0;
}

int run_test_command(const TestFlags& flags, const std::string& name, int feature_1based) {
  if (!flags.break_opt->count() && !flags.select_break)
    hk::fail(hk::ErrorCode::BadArgument, "pass exactly one of --break or --select-break");

  hk::Dataset ds = flags.load();
  hk::TestOptions opts = flags.options();
  hk::ForestConfig fcfg =
      flags.forest.config(hk::derive_seed(flags.seed, hk::stream::kForest), flags.threads);

  hk::RunManifest m = flags.manifest(name);
  hk::TestReport report;
  if (name == "vd") {
    if (feature_1based < 1 || feature_1based > ds.p())
      hk::fail(hk::ErrorCode::BadArgument, "--feature out of range 1.." +
                                               std::to_string(ds.p()));
    m.options["feature"] = std::to_string(feature_1based);
    report = hk::vd_test(ds, feature_1based - 1, opts, fcfg);
  } else {
    report = hk::vdbp_test(ds, opts, fcfg);
  }
  emit_json(hk::report_json(report, m), flags.out);
  return 0;
}

struct SimulateFlags {
  std::string dgp = "m23";
  std::string test = "vd";
  std::string feature = "all";
  int n = 700;
  int p = 20;
  double rho = 0.6;
  std::string dist = "gaussian";
  int reps = 100;
  std::vector<double> alphas{0.1, 0.05};
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  std::string csv_out;
  double fixed_break = 0.0;
  double screen_frac = 0.25;
  int r_count = 100;
  ForestFlags forest;
  CLI::Option* break_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--dgp", dgp, "data generating process")
        ->required()
        ->check(CLI::IsMember({"m23", "m24", "m27", "m28", "m29", "m30"}));
    cmd->add_option("--test", test, "which test to run per rep")
        ->capture_default_str()
        ->check(CLI::IsMember({"vd", "vdbp"}));
    cmd->add_option("--feature", feature,
                    "tested feature for vd: 1-based index or 'all'")
        ->capture_default_str();
    cmd->add_option("--n", n, "rows per rep")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--p", p, "feature count")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--rho", rho, "AR(1) feature correlation")->capture_default_str();
    cmd->add_option("--dist", dist, "feature distribution")
        ->capture_default_str()
        ->check(CLI::IsMember({"gaussian", "t10"}));
    cmd->add_option("--reps", reps, "Monte Carlo repetitions")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", alphas, "test levels")->delimiter(',')->capture_default_str();
    cmd->add_option("--seed", seed, "root seed")->capture_default_str();
    cmd->add_option("--threads", threads, "worker threads (reps run in parallel)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "table JSON path ('-' or empty prints to stdout)");
    cmd->add_option("--csv-out", csv_out, "table CSV path (default: out with .csv)");
    break_opt = cmd->add_option("--break", fixed_break,
                                "fixed break point (default: data-driven selection)");
    cmd->add_option("--screen-frac", screen_frac,
                    "knockoff screen set size as a fraction of n")
        ->capture_default_str();
    cmd->add_option("--r-count", r_count, "candidate breaks per feature")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    forest.attach(cmd);
  }

  int run() const {
    hk::SimulationScenario sc;
    sc.dgp = hk::dgp_from_string(dgp);
    sc.test = test == "vd" ? hk::TestKind::Vd : hk::TestKind::Vdbp;
    if (feature == "all") {
      sc.feature = -1;
    } else {
      int f = 0;
      try {
        f = std::stoi(feature);
      } catch (...) {
        hk::fail(hk::ErrorCode::BadArgument, "--feature must be 'all' or a 1-based index");
      }
      if (f < 1) hk::fail(hk::ErrorCode::BadArgument, "--feature must be >= 1");
      sc.feature = f - 1;
    }
    sc.n = n;
    sc.p = p;
    sc.rho = rho;
    sc.dist = dist == "t10" ? hk::FeatureDist::StudentT10 : hk::FeatureDist::Gaussian;
    sc.reps = reps;
    sc.alphas = alphas;
    if (break_opt->count() > 0) sc.fixed_break = fixed_break;
    sc.seed = seed;
    sc.threads = threads;
    sc.forest = forest.config(0, 1);  // per-rep seeds are derived inside
    sc.knockoffs.screen_fraction = screen_frac;
    sc.r_count = r_count;

    hk::RejectionTable table = hk::run_experiment(sc);

    hk::RunManifest m;
    m.command = "simulate";
    m.seed = seed;
    m.options["dgp"] = dgp;
    m.options["test"] = test;
    m.options["feature"] = feature;
    m.options["n"] = std::to_string(n);
    m.options["p"] = std::to_string(p);
    m.options["rho"] = hk::format_double(rho);
    m.options["dist"] = dist;
    m.options["reps"] = std::to_string(reps);
    m.options["alpha"] = join_alphas(alphas);
    m.options["out"] = out;
    m.options["csv_out"] = csv_out;
    m.options["break"] = break_opt->count() > 0 ? hk::format_double(fixed_break) : "select";
    m.options["screen_frac"] = hk::format_double(screen_frac);
    m.options["r_count"] = std::to_string(r_count);
    forest.record(m.options);

    emit_json(hk::table_json(table, m), out);
    const std::string csv_path =
        csv_out.empty() ? (out.empty() || out == "-" ? "" : sibling_path(out, ".csv"))
                        : csv_out;
    if (!csv_path.empty()) hk::write_file_atomic(csv_path, hk::table_csv(table));
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-difference heteroskedasticity tests with knockoff features"};
  app.set_version_flag("--version", hk::kToolVersion);
  app.require_subcommand(1);

  // knockoff
  CLI::App* kn = app.add_subcommand("knockoff", "augment a CSV with knockoff copies");
  std::string kn_in, kn_out, kn_diag;
  double kn_frac = 0.25;
  std::uint64_t kn_seed = 0;
  int kn_threads = 1;
  kn->add_option("--in", kn_in, "input CSV (x1..xp, y)")->required();
  kn->add_option("--out", kn_out, "output CSV (x1..xp, xk1..xkp, y)")->required();
  kn->add_option("--diag-out", kn_diag, "diagnostics JSON path (default: <out>.diag.json)");
  kn->add_option("--screen-frac", kn_frac, "screen set size as a fraction of n")
      ->capture_default_str();
  kn->add_option("--seed", kn_seed, "root seed")->capture_default_str();
  kn->add_option("--threads", kn_threads, "worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // vd
  CLI::App* vd = app.add_subcommand("vd", "variance-difference test for one feature");
  TestFlags vd_flags;
  int vd_feature = 0;
  vd->add_option("--feature", vd_feature, "tested feature, 1-based")->required();
  vd_flags.attach(vd);

  // vdbp
  CLI::App* vdbp = app.add_subcommand("vdbp", "variance-difference test with feature selection");
  TestFlags vdbp_flags;
  vdbp_flags.attach(vdbp);

  // simulate
  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo rejection-rate tables");
  SimulateFlags sim_flags;
  sim_flags.attach(sim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (kn->parsed()) {
      const std::string diag = kn_diag.empty() ? kn_out + ".diag.json" : kn_diag;
      return cmd_knockoff(kn_in, kn_out, diag, kn_frac, kn_seed, kn_threads);
    }
    if (vd->parsed()) {
      if (vd_feature < 1) hk::fail(hk::ErrorCode::BadArgument, "--feature must be >= 1");
      return run_test_command(vd_flags, "vd", vd_feature);
    }
    if (vdbp->parsed()) return run_test_command(vdbp_flags, "vdbp", -1);
    if (sim->parsed()) return sim_flags.run();
  } catch (const GenerationFailure& g) {
    std::cerr << "knockoff generation failed: " << g.message << "\n";
    return kExitGeneration;
  } catch (const hk::Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
