#ifndef SWARM_METRICS_HPP_
#define SWARM_METRICS_HPP_

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace swarm::metrics {

// Append-only CSV sink. Every file opens with two header lines:
//   # schema=<name>/<version> config=<hex hash>
//   <column names>
// Numeric formatting is fixed at max double precision so identical runs
// produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& schema,
            uint64_t config_hash, const std::vector<std::string>& columns);

  void row(const std::vector<std::string>& cells);
  void flush() { out_.flush(); }

  static std::string num(double v);
  static std::string num(int64_t v);

 private:
  std::ofstream out_;
  size_t n_cols_;
};

// schema train-metrics/1
struct TrainRow {
  int64_t update = 0;
  int64_t env_steps = 0;
  double loss_encoder = 0.0;
  double loss_decoder = 0.0;
  double loss_reg = 0.0;
  double loss_total = 0.0;
  double grad_norm = 0.0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double mean_collisions = 0.0;
  int attachment_enabled = 0;
};
CsvWriter train_writer(const std::string& path, uint64_t config_hash);
void write_row(CsvWriter& w, const TrainRow& r);

// schema episode-rows/1
struct EpisodeRowOut {
  int64_t episode = 0;
  int pursuit_success = 0;
  int attach_success = 0;
  int capture_step = -1;
  int length = 0;
  int collisions = 0;
  double dv_total = 0.0;
  double reward = 0.0;
};
CsvWriter episode_writer(const std::string& path, uint64_t config_hash);
void write_row(CsvWriter& w, const EpisodeRowOut& r);

// schema eval-stats/1 — single summary row.
struct EvalStatsRow {
  int episodes = 0;
  double pursuit_rate = 0.0;
  double pursuit_lo = 0.0;
  double pursuit_hi = 0.0;
  double attach_rate = 0.0;
  double attach_lo = 0.0;
  double attach_hi = 0.0;
  double mean_collisions = 0.0;
  double mean_length = 0.0;
  double mean_dv = 0.0;
  double incomplete_fraction = 0.0;
};
CsvWriter eval_writer(const std::string& path, uint64_t config_hash);
void write_row(CsvWriter& w, const EvalStatsRow& r);

// schema trajectory-rows/1
struct TrajectoryRow {
  int episode = 0;
  int t = 0;
  std::string agent;  // "p0".."pN" / "e0".."eK"
  double state[6] = {0, 0, 0, 0, 0, 0};
  double accel[3] = {0, 0, 0};
  double reward = 0.0;
  int phase = 0;
  int collisions = 0;
  int capture = 0;
};
CsvWriter trajectory_writer(const std::string& path, uint64_t config_hash);
void write_row(CsvWriter& w, const TrajectoryRow& r);

}  // namespace swarm::metrics

#endif  // SWARM_METRICS_HPP_
