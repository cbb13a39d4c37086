#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oapf/config.hpp"

namespace oapf {

struct MetricRecord {
  int timestep = 0;  // 1-based
  double ess = 0.0;
  double sparsity = 0.0;
  double log_z_partial = 0.0;
  double log_z_joint = 0.0;
  Vector mean;
  /// Against the Kalman filter, when the model is linear-Gaussian.
  std::optional<double> nmse_mean;
  std::optional<double> log_z_error;
};

struct RunRecord {
  std::string filter;
  int run_index = 0;
  bool failed = false;
  std::string error;
  std::vector<MetricRecord> steps;
  double joint_log_z = 0.0;
  int fallbacks = 0;
  double wall_time_ms = 0.0;  // never written to CSV
};

/// Exact filtering means and log p(y_{1:t}) for one run, t = 1..T.
struct RunTruth {
  int run_index = 0;
  std::vector<Vector> means;
  std::vector<double> log_z;
};

struct ExperimentResult {
  /// Ordered by run index, then by filter position in the config.
  std::vector<RunRecord> records;
  /// Present only for linear-Gaussian models.
  std::vector<RunTruth> truths;
};

/// Runs every configured filter on each run's observations. Run r draws its
/// trajectory from stream (master_seed, r, 0) and filter i uses stream
/// (master_seed, r, i + 1), so the result does not depend on `threads`.
/// Degenerate or failing runs are marked failed; the batch continues.
ExperimentResult run_experiment(const ExperimentConfig& config, int threads = 1);

/// Fills nmse_mean / log_z_error on each record from the matching truth.
void attach_truth(std::vector<RunRecord>& records, const std::vector<RunTruth>& truths);

struct SummaryRow {
  std::string filter;
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;
  int n_runs = 0;
};

/// Per-run value of a metric: time-averaged ess and sparsity, final log_z,
/// nmse_mean as the NMSE of the posterior-mean path, and nmse_log_z as the
/// time average of ((log Z_hat_t - log Z_t) / log Z_t)^2. Returns nullopt if
/// the record lacks the data.
std::optional<double> run_metric(const RunRecord& record, const std::string& metric);

/// Mean and standard error (sample SD / sqrt(n)) over successful runs, one row
/// per filter and metric in first-appearance order, plus a failed_runs row per
/// filter. Metrics that no run can provide are skipped. Throws SummaryError if
/// some filter has no successful run.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records, const std::vector<std::string>& metrics = {});

/// Mean ESS across successful runs at each timestep, one column per filter.
struct EssCurve {
  std::vector<std::string> filters;
  /// curve[t][f]
  std::vector<std::vector<double>> curve;
};
EssCurve ess_by_time(const std::vector<RunRecord>& records);

}  // namespace oapf
