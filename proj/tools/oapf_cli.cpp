// Command-line driver for the filter experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "oapf/config.hpp"
#include "oapf/csv.hpp"
#include "oapf/errors.hpp"
#include "oapf/harness.hpp"
#include "oapf/toy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::string out_dir = "results";
  int threads = 1;
  std::vector<std::string> filters;
  std::vector<std::string> overrides;
  bool strict = false;
  bool quiet = false;
};

void print_summary(const std::vector<oapf::SummaryRow>& rows) {
  std::printf("%-16s %-12s %16s %14s %7s\n", "filter", "metric", "mean", "stderr", "n_runs");
  for (const auto& r : rows)
    std::printf("%-16s %-12s %16.6g %14.4g %7d\n", r.filter.c_str(), r.metric.c_str(), r.mean, r.stderr_, r.n_runs);
}

oapf::ExperimentConfig prepare(const RunArgs& a) {
  std::vector<std::string> overrides = a.overrides;
  if (a.seed) overrides.push_back("master_seed=" + std::to_string(*a.seed));
  if (a.runs) overrides.push_back("n_runs=" + std::to_string(*a.runs));
  oapf::ExperimentConfig cfg = oapf::load_config(a.config, overrides);
  if (!a.filters.empty()) {
    std::vector<oapf::FilterConfig> kept;
    for (const auto& fc : cfg.filters)
      for (const auto& want : a.filters)
        if (fc.label == want || oapf::to_string(fc.settings.kind) == want) {
          kept.push_back(fc);
          break;
        }
    if (kept.empty()) throw oapf::ConfigError("--filter matched none of the configured filters");
    cfg.filters = std::move(kept);
  }
  return cfg;
}

int cmd_run(const RunArgs& a) {
  const oapf::ExperimentConfig cfg = prepare(a);
  const fs::path out = fs::path(a.out_dir) / cfg.name;
  const oapf::ExperimentResult result = oapf::run_experiment(cfg, a.threads);
  const oapf::Index d = cfg.model->state_dim();

  oapf::write_records_csv(out / "records.csv", result.records, d);
  oapf::write_failures_csv(out / "failures.csv", result.records);
  oapf::write_ess_curve(out / "ess_by_t.csv", oapf::ess_by_time(result.records));
  if (!result.truths.empty()) oapf::write_truth_csv(out / "truth.csv", result.truths, d);

  int failed = 0;
  for (const auto& r : result.records) failed += r.failed ? 1 : 0;
  std::vector<oapf::SummaryRow> rows;
  try {
    rows = oapf::summarize(result.records, cfg.outputs);
  } catch (const oapf::SummaryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  oapf::write_summary_csv(out / "summary.csv", rows);
  if (!a.quiet) {
    std::printf("%s: %d runs, T=%d, output in %s\n", cfg.name.c_str(), cfg.n_runs, cfg.steps, out.string().c_str());
    print_summary(rows);
  }
  if (failed > 0) {
    std::cerr << "warning: " << failed << " filter run(s) failed; see " << (out / "failures.csv").string() << '\n';
    if (a.strict) return kExitRuntime;
  }
  return 0;
}

int cmd_simulate(const RunArgs& a, int run_index, const std::string& out_file) {
  const oapf::ExperimentConfig cfg = prepare(a);
  oapf::RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(run_index), 0);
  oapf::Trajectory traj = oapf::simulate(*cfg.model, cfg.steps, rng);
  oapf::write_trajectory_csv(out_file, traj);
  if (!a.quiet) std::printf("wrote %d steps to %s\n", cfg.steps, out_file.c_str());
  return 0;
}

oapf::ToyVariant toy_from_json(const json& j) {
  oapf::ToyVariant v = oapf::toy_variant(j.value("toy", std::string("a")));
  auto vec = [&](const char* key, oapf::Vector& dst) {
    if (!j.contains(key)) return;
    const auto xs = j[key].get<std::vector<double>>();
    dst = Eigen::Map<const oapf::Vector>(xs.data(), static_cast<oapf::Index>(xs.size()));
  };
  vec("particles", v.particles);
  vec("weights", v.weights);
  v.likelihood_mean = j.value("likelihood_mean", v.likelihood_mean);
  v.likelihood_sd = j.value("likelihood_sd", v.likelihood_sd);
  v.kernel_sd = j.value("kernel_sd", v.kernel_sd);
  v.name = j.value("name", v.name);
  return v;
}

int cmd_toy(const std::string& config, const std::string& variant, const std::string& kind_name,
            const std::string& out_dir, bool quiet) {
  oapf::ToyVariant v;
  if (!config.empty()) {
    try {
      v = toy_from_json(oapf::read_json_file(config));
    } catch (const json::exception& e) {
      throw oapf::ConfigError(std::string("toy config: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw oapf::ConfigError(e.what());
    }
  } else {
    try {
      v = oapf::toy_variant(variant);
    } catch (const std::invalid_argument& e) {
      throw oapf::ConfigError(e.what());
    }
    v.name = "toy_" + variant;
  }
  const auto kind = kind_name == "symmetric" ? oapf::ChiSquareKind::Symmetric : oapf::ChiSquareKind::Pearson;
  const oapf::ToyResult res = oapf::run_toy(v, kind);

  const fs::path dir = fs::path(out_dir) / v.name;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "chi2.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "chi2.csv").string());
    out << "filter,chi2";
    for (oapf::Index k = 0; k < v.particles.size(); ++k) out << ",lambda_" << k;
    out << '\n';
    for (const auto& p : res.proposals) {
      out << oapf::to_string(p.filter) << ',' << oapf::format_number(p.chi2);
      for (oapf::Index k = 0; k < p.mixture_weights.size(); ++k) out << ',' << oapf::format_number(p.mixture_weights[k]);
      out << '\n';
    }
  }
  oapf::write_toy_densities(dir / "densities.csv", res);
  if (!quiet) {
    std::printf("%s (%s chi-square)\n", v.name.c_str(), kind_name.c_str());
    std::printf("%-6s %10s   mixture weights\n", "filter", "chi2");
    for (const auto& p : res.proposals) {
      std::printf("%-6s %10.4f  ", oapf::to_string(p.filter).c_str(), p.chi2);
      for (oapf::Index k = 0; k < p.mixture_weights.size(); ++k) std::printf(" %.4f", p.mixture_weights[k]);
      std::printf("\n");
    }
  }
  return 0;
}

int cmd_summarize(const std::string& records, const std::string& truth, const std::string& out,
                  const std::vector<std::string>& metrics) {
  std::vector<oapf::RunRecord> recs = oapf::read_records_csv(records);
  if (!truth.empty()) oapf::attach_truth(recs, oapf::read_truth_csv(truth));
  std::vector<oapf::SummaryRow> rows;
  try {
    rows = oapf::summarize(recs, metrics);
  } catch (const oapf::SummaryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  if (!out.empty()) oapf::write_summary_csv(out, rows);
  print_summary(rows);
  return 0;
}

int cmd_list_models() {
  std::printf(
      "lgssm     linear-Gaussian; keys: dim, transition_var, obs_var, transition, transition_offset,\n"
      "          transition_cov, observation, observation_offset, observation_cov, prior_mean, prior_cov\n"
      "          defaults: A = C = I/2, offsets (-2, 2, ...), transition_cov 5 I, observation_cov 2.5 I, prior N(0, I)\n"
      "lorenz63  stochastic Lorenz 63 observed in x_0; keys: sigma, rho, beta, dt, noise_cov,\n"
      "          noise_scaling (unit|dt), obs_var, initial_state, prior_cov\n"
      "          defaults: (10, 28, 2.667), dt 0.01, unit noise, obs_var 1, prior N((1,1,1), I)\n"
      "stochvol  multivariate stochastic volatility; keys: dim, phi, mean, noise_cov, prior_cov\n"
      "          defaults: mean 0, phi 1, noise_cov I, prior_cov I\n"
      "filters:  bpf apf iapf fa_apf (lgssm only) oapf\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auxiliary particle filter experiments"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("-c,--config", run_args.config, "Experiment JSON file");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", run_args.seed, "Override master_seed");
    sub->add_option("--runs", run_args.runs, "Override n_runs")->check(CLI::PositiveNumber);
    sub->add_option("--filter", run_args.filters, "Keep only these filters (label or name); repeatable");
    sub->add_option("--set", run_args.overrides, "Override a config field, key=value; repeatable");
    sub->add_flag("-q,--quiet", run_args.quiet, "Suppress the summary table");
  };

  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment");
  add_common(run, true);
  run->add_option("-o,--out-dir", run_args.out_dir, "Output directory")->capture_default_str();
  run->add_option("--threads", run_args.threads, "Worker threads across runs")->check(CLI::PositiveNumber);
  run->add_flag("--strict", run_args.strict, "Exit with status 2 if any run failed");

  int sim_run = 0;
  std::string sim_out = "trajectory.csv";
  auto* sim = app.add_subcommand("simulate", "Write one simulated trajectory as CSV");
  add_common(sim, true);
  sim->add_option("--run-index", sim_run, "Run index selecting the random stream")->capture_default_str();
  sim->add_option("--out", sim_out, "Output CSV")->capture_default_str();

  std::string toy_config;
  std::string toy_variant = "a";
  std::string toy_kind = "pearson";
  std::string toy_out = "results";
  bool toy_quiet = false;
  auto* toy = app.add_subcommand("toy", "Chi-square divergence of the four mixture proposals on a 1-D toy");
  toy->add_option("-c,--config", toy_config, "Toy JSON file")->check(CLI::ExistingFile);
  toy->add_option("--variant", toy_variant, "Built-in setting")->check(CLI::IsMember({"a", "b"}))->capture_default_str();
  toy->add_option("--chi2", toy_kind, "Divergence definition")
      ->check(CLI::IsMember({"pearson", "symmetric"}))
      ->capture_default_str();
  toy->add_option("-o,--out-dir", toy_out, "Output directory")->capture_default_str();
  toy->add_flag("-q,--quiet", toy_quiet, "Suppress the table");

  std::string sum_records;
  std::string sum_truth;
  std::string sum_out;
  std::vector<std::string> sum_metrics;
  auto* sum = app.add_subcommand("summarize", "Aggregate a records.csv into mean and standard error");
  sum->add_option("records", sum_records, "records.csv")->required()->check(CLI::ExistingFile);
  sum->add_option("--truth", sum_truth, "truth.csv for the NMSE metrics")->check(CLI::ExistingFile);
  sum->add_option("--out", sum_out, "Write the summary CSV here");
  sum->add_option("--metric", sum_metrics, "Metrics to report; repeatable")
      ->check(CLI::IsMember(oapf::known_metrics()));

  app.add_subcommand("list-models", "Describe the available models and filters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*sim) return cmd_simulate(run_args, sim_run, sim_out);
    if (*toy) return cmd_toy(toy_config, toy_variant, toy_kind, toy_out, toy_quiet);
    if (*sum) return cmd_summarize(sum_records, sum_truth, sum_out, sum_metrics);
    return cmd_list_models();
  } catch (const oapf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
