#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "oapf/harness.hpp"

namespace oapf {

/// Shortest-safe round-trip rendering (17 significant digits).
std::string format_number(double x);

/// Header run,filter,t,ess,log_z_partial,log_z_joint,sparsity,mean_est_0..
/// then one row per successful run, filter and timestep.
void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records, Index state_dim);
void write_records_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records, Index state_dim);
/// Inverse of write_records_csv. Truth-based fields are left empty.
std::vector<RunRecord> read_records_csv(const std::filesystem::path& path);

/// filter,metric,mean,stderr,n_runs
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

/// run,t,log_z,mean_0..
void write_truth_csv(const std::filesystem::path& path, const std::vector<RunTruth>& truths, Index state_dim);
std::vector<RunTruth> read_truth_csv(const std::filesystem::path& path);

/// run,filter,error
void write_failures_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);

/// t,<filter>,<filter>,...
void write_ess_curve(const std::filesystem::path& path, const EssCurve& curve);

/// t,x_0..x_{d-1},y_0..y_{p-1}
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);
/// Reads a trajectory; the state columns may be absent.
Trajectory read_trajectory_csv(const std::filesystem::path& path, Index state_dim, Index obs_dim);

}  // namespace oapf
