#ifndef SWARM_CHECKPOINT_HPP_
#define SWARM_CHECKPOINT_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "swarm/model.hpp"
#include "swarm/nn.hpp"

namespace swarm::checkpoint {

using Mat = Eigen::MatrixXd;

inline constexpr uint32_t kFormatVersion = 1;

// Versioned container of named float64 arrays plus the running statistics
// needed to resume training exactly. Encoding is explicit little-endian, so
// files are bit-identical across platforms.
struct Checkpoint {
  uint32_t version = kFormatVersion;
  uint64_t layout_hash = 0;
  int64_t step = 0;
  nn::RunningStat reward_stat;
  std::vector<std::pair<std::string, Mat>> arrays;  // row-major payloads
};

// Captures every trainable parameter plus the target value head (stored
// under "target.<index>" names).
Checkpoint snapshot(const model::Policy& policy, int64_t step,
                    const nn::RunningStat& reward_stat);

// Restores parameters into a policy built from a matching ModelConfig.
// Throws on version, layout-hash, name, or shape mismatch.
void restore(const Checkpoint& ckpt, model::Policy& policy);

std::vector<uint8_t> encode(const Checkpoint& ckpt);
Checkpoint decode(const std::vector<uint8_t>& bytes);

void save(const Checkpoint& ckpt, const std::string& path);
Checkpoint load(const std::string& path);

}  // namespace swarm::checkpoint

#endif  // SWARM_CHECKPOINT_HPP_
