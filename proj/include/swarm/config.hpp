#ifndef SWARM_CONFIG_HPP_
#define SWARM_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "swarm/env.hpp"
#include "swarm/learner.hpp"
#include "swarm/model.hpp"

namespace swarm::config {

// Full run description: environment, model, training hyperparameters, and
// the operational block (scenario, seed, budget, output paths). Serialized
// as flat `key = value` lines under bracketed section headers so that every
// parameter maps to one documented key.
struct RunConfig {
  env::EnvConfig env;
  model::ModelConfig model;
  learner::Hyperparams train;

  std::string scenario = "random";
  uint64_t seed = 1;
  std::string output_dir = "runs";
  int64_t total_steps = 100000;
  int checkpoint_interval = 10;  // update rounds between checkpoints
  int eval_runs = 500;

  bool valid(std::string* why = nullptr) const;
};

// Lossless round trip: parse(serialize(c)) reproduces c exactly, and
// serialize is canonical (fixed section/key order, max-precision floats).
std::string serialize(const RunConfig& c);
RunConfig parse(const std::string& text);

RunConfig load_file(const std::string& path);
void save_file(const RunConfig& c, const std::string& path);

// FNV-1a over the canonical serialization; stamped into output headers.
uint64_t config_hash(const RunConfig& c);

}  // namespace swarm::config

#endif  // SWARM_CONFIG_HPP_
