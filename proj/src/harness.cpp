#include "oapf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include "oapf/csv.hpp"
#include "oapf/errors.hpp"
#include "oapf/kalman.hpp"

namespace oapf {

namespace {

struct RunOutput {
  std::vector<RunRecord> records;
  std::optional<RunTruth> truth;
};

RunRecord run_one_filter(const ExperimentConfig& cfg, std::size_t f, int run, const Matrix& observations) {
  const FilterConfig& fc = cfg.filters[f];
  RunRecord rec;
  rec.filter = fc.label;
  rec.run_index = run;
  RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(run), f + 1);
  const auto start = std::chrono::steady_clock::now();
  try {
    FilterOutput out = run_filter(*cfg.model, fc.settings, observations, rng);
    rec.steps.reserve(out.steps.size());
    for (std::size_t t = 0; t < out.steps.size(); ++t) {
      const StepRecord& s = out.steps[t];
      MetricRecord m;
      m.timestep = static_cast<int>(t) + 1;
      m.ess = s.ess;
      m.sparsity = s.sparsity;
      m.log_z_partial = s.partial_log_z;
      m.log_z_joint = s.joint_log_z;
      m.mean = s.mean;
      rec.steps.push_back(std::move(m));
    }
    rec.joint_log_z = out.likelihood.joint_log_z;
    rec.fallbacks = out.fallbacks;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.steps.clear();
  }
  rec.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RunOutput run_one(const ExperimentConfig& cfg, int run, const Matrix* fixed_observations) {
  RunOutput out;
  Matrix observations;
  if (fixed_observations) {
    observations = *fixed_observations;
  } else {
    RngStream sim(cfg.master_seed, static_cast<std::uint64_t>(run), 0);
    try {
      observations = simulate(*cfg.model, cfg.steps, sim).observations;
    } catch (const std::exception& e) {
      for (const auto& fc : cfg.filters) {
        RunRecord rec;
        rec.filter = fc.label;
        rec.run_index = run;
        rec.failed = true;
        rec.error = std::string("simulation: ") + e.what();
        out.records.push_back(std::move(rec));
      }
      return out;
    }
  }

  if (const LgssmParams* p = cfg.model->lgssm()) {
    try {
      const auto states = kalman_run(*p, observations);
      RunTruth truth;
      truth.run_index = run;
      for (std::size_t t = 1; t < states.size(); ++t) {
        truth.means.push_back(states[t].mean);
        truth.log_z.push_back(states[t].log_marginal);
      }
      out.truth = std::move(truth);
    } catch (const std::exception&) {
      // Leave the truth absent; the truth-based metrics are then skipped.
    }
  }

  for (std::size_t f = 0; f < cfg.filters.size(); ++f) out.records.push_back(run_one_filter(cfg, f, run, observations));
  if (out.truth) attach_truth(out.records, {*out.truth});
  return out;
}

}  // namespace

void attach_truth(std::vector<RunRecord>& records, const std::vector<RunTruth>& truths) {
  std::map<int, const RunTruth*> by_run;
  for (const auto& t : truths) by_run[t.run_index] = &t;
  for (auto& rec : records) {
    const auto it = by_run.find(rec.run_index);
    if (it == by_run.end() || rec.failed) continue;
    const RunTruth& truth = *it->second;
    for (auto& m : rec.steps) {
      const auto t = static_cast<std::size_t>(m.timestep - 1);
      if (t >= truth.means.size()) continue;
      const double denom = truth.means[t].squaredNorm();
      if (denom > 0.0 && m.mean.size() == truth.means[t].size())
        m.nmse_mean = (m.mean - truth.means[t]).squaredNorm() / denom;
      if (truth.log_z[t] != 0.0) {
        const double rel = (m.log_z_joint - truth.log_z[t]) / truth.log_z[t];
        m.log_z_error = rel * rel;
      }
    }
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
  if (!cfg.model) throw ConfigError("run_experiment: config has no model");
  if (cfg.filters.empty()) throw ConfigError("run_experiment: config has no filters");

  Matrix fixed;
  const Matrix* fixed_ptr = nullptr;
  if (cfg.trajectory_mode == TrajectoryMode::FixedFile) {
    const Trajectory traj = read_trajectory_csv(cfg.trajectory_file, cfg.model->state_dim(), cfg.model->obs_dim());
    if (traj.observations.cols() < cfg.steps)
      throw ConfigError("trajectory file " + cfg.trajectory_file.string() + " holds fewer than T steps");
    fixed = traj.observations.leftCols(cfg.steps);
    fixed_ptr = &fixed;
  }

  std::vector<RunOutput> outputs(static_cast<std::size_t>(cfg.n_runs));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next++; r < cfg.n_runs; r = next++) outputs[static_cast<std::size_t>(r)] = run_one(cfg, r, fixed_ptr);
  };
  const int n_threads = std::max(1, std::min(threads, cfg.n_runs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  for (auto& o : outputs) {
    for (auto& rec : o.records) result.records.push_back(std::move(rec));
    if (o.truth) result.truths.push_back(std::move(*o.truth));
  }
  return result;
}

std::optional<double> run_metric(const RunRecord& rec, const std::string& metric) {
  if (rec.failed || rec.steps.empty()) return std::nullopt;
  const double n = static_cast<double>(rec.steps.size());
  if (metric == "ess" || metric == "sparsity") {
    double acc = 0.0;
    for (const auto& m : rec.steps) acc += metric == "ess" ? m.ess : m.sparsity;
    return acc / n;
  }
  if (metric == "log_z") return rec.steps.back().log_z_joint;
  if (metric == "nmse_mean" || metric == "nmse_log_z") {
    double acc = 0.0;
    for (const auto& m : rec.steps) {
      const auto& v = metric == "nmse_mean" ? m.nmse_mean : m.log_z_error;
      if (!v) return std::nullopt;
      acc += *v;
    }
    return acc / n;
  }
  throw std::invalid_argument("unknown metric \"" + metric + "\"");
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records, const std::vector<std::string>& metrics) {
  const std::vector<std::string>& wanted = metrics.empty() ? known_metrics() : metrics;
  std::vector<std::string> filters;
  for (const auto& r : records)
    if (std::find(filters.begin(), filters.end(), r.filter) == filters.end()) filters.push_back(r.filter);

  if (filters.empty()) throw SummaryError("summarize: no records");
  std::vector<SummaryRow> rows;
  for (const auto& f : filters) {
    int ok = 0;
    int failed = 0;
    for (const auto& r : records)
      if (r.filter == f) (r.failed ? failed : ok)++;
    if (ok == 0) throw SummaryError("summarize: filter \"" + f + "\" has no successful run");

    for (const auto& metric : wanted) {
      std::vector<double> values;
      for (const auto& r : records)
        if (r.filter == f)
          if (const auto v = run_metric(r, metric)) values.push_back(*v);
      if (values.empty()) continue;
      const double n = static_cast<double>(values.size());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= n;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double se = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
      rows.push_back({f, metric, mean, se, static_cast<int>(values.size())});
    }
    rows.push_back({f, "failed_runs", static_cast<double>(failed), 0.0, ok});
  }
  return rows;
}

EssCurve ess_by_time(const std::vector<RunRecord>& records) {
  EssCurve out;
  for (const auto& r : records)
    if (std::find(out.filters.begin(), out.filters.end(), r.filter) == out.filters.end()) out.filters.push_back(r.filter);
  std::size_t steps = 0;
  for (const auto& r : records) steps = std::max(steps, r.steps.size());
  out.curve.assign(steps, std::vector<double>(out.filters.size(), 0.0));
  std::vector<std::vector<int>> counts(steps, std::vector<int>(out.filters.size(), 0));
  for (const auto& r : records) {
    if (r.failed) continue;
    const auto f = static_cast<std::size_t>(std::find(out.filters.begin(), out.filters.end(), r.filter) - out.filters.begin());
    for (std::size_t t = 0; t < r.steps.size(); ++t) {
      out.curve[t][f] += r.steps[t].ess;
      ++counts[t][f];
    }
  }
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t f = 0; f < out.filters.size(); ++f)
      out.curve[t][f] = counts[t][f] > 0 ? out.curve[t][f] / counts[t][f] : std::nan("");
  return out;
}

}  // namespace oapf
