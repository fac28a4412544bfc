#include "swarm/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace swarm::metrics {

CsvWriter::CsvWriter(const std::string& path, const std::string& schema,
                     uint64_t config_hash,
                     const std::vector<std::string>& columns)
    : n_cols_(columns.size()) {
  out_.open(path, std::ios::trunc);
  if (!out_) throw std::runtime_error("metrics: cannot write " + path);
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash));
  out_ << "# schema=" << schema << " config=" << hash_hex << "\n";
  for (size_t i = 0; i < columns.size(); ++i) {
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) {
    throw std::runtime_error("metrics: row width mismatch");
  }
  for (size_t i = 0; i < cells.size(); ++i) {
    out_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
  }
}

std::string CsvWriter::num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string CsvWriter::num(int64_t v) { return std::to_string(v); }

CsvWriter train_writer(const std::string& path, uint64_t config_hash) {
  return CsvWriter(path, "train-metrics/1", config_hash,
                   {"update", "env_steps", "loss_encoder", "loss_decoder",
                    "loss_reg", "loss_total", "grad_norm", "mean_reward",
                    "success_rate", "mean_collisions", "attachment_enabled"});
}

void write_row(CsvWriter& w, const TrainRow& r) {
  w.row({CsvWriter::num(r.update), CsvWriter::num(r.env_steps),
         CsvWriter::num(r.loss_encoder), CsvWriter::num(r.loss_decoder),
         CsvWriter::num(r.loss_reg), CsvWriter::num(r.loss_total),
         CsvWriter::num(r.grad_norm), CsvWriter::num(r.mean_reward),
         CsvWriter::num(r.success_rate), CsvWriter::num(r.mean_collisions),
         CsvWriter::num(int64_t(r.attachment_enabled))});
}

CsvWriter episode_writer(const std::string& path, uint64_t config_hash) {
  return CsvWriter(path, "episode-rows/1", config_hash,
                   {"episode", "pursuit_success", "attach_success",
                    "capture_step", "length", "collisions", "dv_total",
                    "reward"});
}

void write_row(CsvWriter& w, const EpisodeRowOut& r) {
  w.row({CsvWriter::num(r.episode), CsvWriter::num(int64_t(r.pursuit_success)),
         CsvWriter::num(int64_t(r.attach_success)),
         CsvWriter::num(int64_t(r.capture_step)),
         CsvWriter::num(int64_t(r.length)), CsvWriter::num(int64_t(r.collisions)),
         CsvWriter::num(r.dv_total), CsvWriter::num(r.reward)});
}

CsvWriter eval_writer(const std::string& path, uint64_t config_hash) {
  return CsvWriter(path, "eval-stats/1", config_hash,
                   {"episodes", "pursuit_rate", "pursuit_lo", "pursuit_hi",
                    "attach_rate", "attach_lo", "attach_hi", "mean_collisions",
                    "mean_length", "mean_dv", "incomplete_fraction"});
}

void write_row(CsvWriter& w, const EvalStatsRow& r) {
  w.row({CsvWriter::num(int64_t(r.episodes)), CsvWriter::num(r.pursuit_rate),
         CsvWriter::num(r.pursuit_lo), CsvWriter::num(r.pursuit_hi),
         CsvWriter::num(r.attach_rate), CsvWriter::num(r.attach_lo),
         CsvWriter::num(r.attach_hi), CsvWriter::num(r.mean_collisions),
         CsvWriter::num(r.mean_length), CsvWriter::num(r.mean_dv),
         CsvWriter::num(r.incomplete_fraction)});
}

CsvWriter trajectory_writer(const std::string& path, uint64_t config_hash) {
  return CsvWriter(path, "trajectory-rows/1", config_hash,
                   {"episode", "t", "agent", "x", "xdot", "y", "ydot", "z",
                    "zdot", "ax", "ay", "az", "reward", "phase", "collisions",
                    "capture"});
}

void write_row(CsvWriter& w, const TrajectoryRow& r) {
  w.row({CsvWriter::num(int64_t(r.episode)), CsvWriter::num(int64_t(r.t)),
         r.agent, CsvWriter::num(r.state[0]), CsvWriter::num(r.state[1]),
         CsvWriter::num(r.state[2]), CsvWriter::num(r.state[3]),
         CsvWriter::num(r.state[4]), CsvWriter::num(r.state[5]),
         CsvWriter::num(r.accel[0]), CsvWriter::num(r.accel[1]),
         CsvWriter::num(r.accel[2]), CsvWriter::num(r.reward),
         CsvWriter::num(int64_t(r.phase)), CsvWriter::num(int64_t(r.collisions)),
         CsvWriter::num(int64_t(r.capture))});
}

}  // namespace swarm::metrics
