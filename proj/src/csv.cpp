#include "oapf/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace oapf {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": bad number \"" + s + "\"");
  return v;
}

int parse_int(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  const double v = parse_number(s, path, line);
  return static_cast<int>(v);
}

/// Reads header + rows, checking every row has the header's width.
std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, std::vector<std::string>& header) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  header = split(line);
  std::vector<std::vector<std::string>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": expected " +
                               std::to_string(header.size()) + " fields");
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records, Index state_dim) {
  out << "run,filter,t,ess,log_z_partial,log_z_joint,sparsity";
  for (Index i = 0; i < state_dim; ++i) out << ",mean_est_" << i;
  out << '\n';
  for (const auto& r : records) {
    if (r.failed) continue;
    for (const auto& m : r.steps) {
      out << r.run_index << ',' << r.filter << ',' << m.timestep << ',' << format_number(m.ess) << ','
          << format_number(m.log_z_partial) << ',' << format_number(m.log_z_joint) << ','
          << format_number(m.sparsity);
      for (Index i = 0; i < state_dim; ++i) out << ',' << format_number(i < m.mean.size() ? m.mean[i] : std::nan(""));
      out << '\n';
    }
  }
}

void write_records_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records, Index state_dim) {
  std::ofstream out = open_out(path);
  write_records_csv(out, records, state_dim);
  finish(out, path);
}

std::vector<RunRecord> read_records_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  if (header.size() < 7 || header[0] != "run" || header[1] != "filter" || header[2] != "t")
    throw std::runtime_error(path.string() + ": not a per-timestep record file");
  const Index d = static_cast<Index>(header.size()) - 7;

  std::vector<RunRecord> records;
  std::map<std::pair<int, std::string>, std::size_t> index;
  std::size_t line = 1;
  for (const auto& c : rows) {
    ++line;
    const int run = parse_int(c[0], path, line);
    const auto key = std::make_pair(run, c[1]);
    auto it = index.find(key);
    if (it == index.end()) {
      RunRecord rec;
      rec.run_index = run;
      rec.filter = c[1];
      records.push_back(std::move(rec));
      it = index.emplace(key, records.size() - 1).first;
    }
    RunRecord& rec = records[it->second];
    MetricRecord m;
    m.timestep = parse_int(c[2], path, line);
    m.ess = parse_number(c[3], path, line);
    m.log_z_partial = parse_number(c[4], path, line);
    m.log_z_joint = parse_number(c[5], path, line);
    m.sparsity = parse_number(c[6], path, line);
    m.mean.resize(d);
    for (Index i = 0; i < d; ++i) m.mean[i] = parse_number(c[static_cast<std::size_t>(7 + i)], path, line);
    rec.joint_log_z = m.log_z_joint;
    rec.steps.push_back(std::move(m));
  }
  return records;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "filter,metric,mean,stderr,n_runs\n";
  for (const auto& r : rows)
    out << r.filter << ',' << r.metric << ',' << format_number(r.mean) << ',' << format_number(r.stderr_) << ','
        << r.n_runs << '\n';
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out = open_out(path);
  write_summary_csv(out, rows);
  finish(out, path);
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  if (header != std::vector<std::string>{"filter", "metric", "mean", "stderr", "n_runs"})
    throw std::runtime_error(path.string() + ": not a summary file");
  std::vector<SummaryRow> out;
  std::size_t line = 1;
  for (const auto& c : rows) {
    ++line;
    out.push_back({c[0], c[1], parse_number(c[2], path, line), parse_number(c[3], path, line),
                   parse_int(c[4], path, line)});
  }
  return out;
}

void write_truth_csv(const std::filesystem::path& path, const std::vector<RunTruth>& truths, Index state_dim) {
  std::ofstream out = open_out(path);
  out << "run,t,log_z";
  for (Index i = 0; i < state_dim; ++i) out << ",mean_" << i;
  out << '\n';
  for (const auto& tr : truths) {
    for (std::size_t t = 0; t < tr.log_z.size(); ++t) {
      out << tr.run_index << ',' << t + 1 << ',' << format_number(tr.log_z[t]);
      for (Index i = 0; i < state_dim; ++i) out << ',' << format_number(tr.means[t][i]);
      out << '\n';
    }
  }
  finish(out, path);
}

std::vector<RunTruth> read_truth_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  if (header.size() < 3 || header[0] != "run" || header[1] != "t" || header[2] != "log_z")
    throw std::runtime_error(path.string() + ": not a truth file");
  const Index d = static_cast<Index>(header.size()) - 3;
  std::vector<RunTruth> out;
  std::map<int, std::size_t> index;
  std::size_t line = 1;
  for (const auto& c : rows) {
    ++line;
    const int run = parse_int(c[0], path, line);
    auto it = index.find(run);
    if (it == index.end()) {
      RunTruth tr;
      tr.run_index = run;
      out.push_back(std::move(tr));
      it = index.emplace(run, out.size() - 1).first;
    }
    RunTruth& tr = out[it->second];
    tr.log_z.push_back(parse_number(c[2], path, line));
    Vector mean(d);
    for (Index i = 0; i < d; ++i) mean[i] = parse_number(c[static_cast<std::size_t>(3 + i)], path, line);
    tr.means.push_back(std::move(mean));
  }
  return out;
}

void write_failures_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  std::ofstream out = open_out(path);
  out << "run,filter,error\n";
  for (const auto& r : records)
    if (r.failed) out << r.run_index << ',' << r.filter << ',' << sanitize(r.error) << '\n';
  finish(out, path);
}

void write_ess_curve(const std::filesystem::path& path, const EssCurve& curve) {
  std::ofstream out = open_out(path);
  out << 't';
  for (const auto& f : curve.filters) out << ',' << f;
  out << '\n';
  for (std::size_t t = 0; t < curve.curve.size(); ++t) {
    out << t + 1;
    for (double v : curve.curve[t]) out << ',' << format_number(v);
    out << '\n';
  }
  finish(out, path);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out = open_out(path);
  out << 't';
  for (Index i = 0; i < traj.states.rows(); ++i) out << ",x_" << i;
  for (Index i = 0; i < traj.observations.rows(); ++i) out << ",y_" << i;
  out << '\n';
  for (Index t = 0; t < traj.observations.cols(); ++t) {
    out << t + 1;
    for (Index i = 0; i < traj.states.rows(); ++i) out << ',' << format_number(traj.states(i, t));
    for (Index i = 0; i < traj.observations.rows(); ++i) out << ',' << format_number(traj.observations(i, t));
    out << '\n';
  }
  finish(out, path);
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, Index state_dim, Index obs_dim) {
  std::vector<std::string> header;
  const auto rows = read_table(path, header);
  std::vector<std::size_t> xcol(static_cast<std::size_t>(state_dim), header.size());
  std::vector<std::size_t> ycol(static_cast<std::size_t>(obs_dim), header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    for (Index i = 0; i < state_dim; ++i)
      if (header[c] == "x_" + std::to_string(i)) xcol[static_cast<std::size_t>(i)] = c;
    for (Index i = 0; i < obs_dim; ++i)
      if (header[c] == "y_" + std::to_string(i)) ycol[static_cast<std::size_t>(i)] = c;
  }
  for (auto c : ycol)
    if (c == header.size())
      throw std::runtime_error(path.string() + ": expected columns y_0..y_" + std::to_string(obs_dim - 1));
  bool has_states = true;
  for (auto c : xcol) has_states = has_states && c < header.size();

  const auto n = static_cast<Index>(rows.size());
  Trajectory traj;
  traj.observations.resize(obs_dim, n);
  traj.states = has_states ? Matrix(state_dim, n) : Matrix(state_dim, 0);
  std::size_t line = 1;
  for (Index t = 0; t < n; ++t) {
    ++line;
    const auto& c = rows[static_cast<std::size_t>(t)];
    for (Index i = 0; i < obs_dim; ++i) traj.observations(i, t) = parse_number(c[ycol[static_cast<std::size_t>(i)]], path, line);
    if (has_states)
      for (Index i = 0; i < state_dim; ++i) traj.states(i, t) = parse_number(c[xcol[static_cast<std::size_t>(i)]], path, line);
  }
  return traj;
}

}  // namespace oapf
