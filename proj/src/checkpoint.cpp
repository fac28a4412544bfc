#include "swarm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace swarm::checkpoint {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'C', 'K'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

void put_f64(std::vector<uint8_t>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

Checkpoint snapshot(const model::Policy& policy, int64_t step,
                    const nn::RunningStat& reward_stat) {
  Checkpoint c;
  c.layout_hash = policy.config().layout_hash();
  c.step = step;
  c.reward_stat = reward_stat;
  const nn::ParamStore& p = policy.params();
  for (int i = 0; i < p.count(); ++i) {
    c.arrays.emplace_back(p.name(i), p.value(i));
  }
  const auto& target = policy.target_value_params();
  for (size_t i = 0; i < target.size(); ++i) {
    c.arrays.emplace_back("target." + std::to_string(i), target[i]);
  }
  return c;
}

void restore(const Checkpoint& ckpt, model::Policy& policy) {
  if (ckpt.version != kFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(ckpt.version));
  }
  if (ckpt.layout_hash != policy.config().layout_hash()) {
    throw std::runtime_error("checkpoint: model layout hash mismatch");
  }
  nn::ParamStore& p = policy.params();
  std::vector<Mat> target;
  for (const auto& [name, value] : ckpt.arrays) {
    if (name.rfind("target.", 0) == 0) {
      const size_t idx = std::stoul(name.substr(7));
      if (target.size() <= idx) target.resize(idx + 1);
      target[idx] = value;
      continue;
    }
    if (!p.has(name)) {
      throw std::runtime_error("checkpoint: unknown parameter '" + name + "'");
    }
    Mat& dst = p.value(name);
    if (dst.rows() != value.rows() || dst.cols() != value.cols()) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    dst = value;
  }
  if (target.size() != policy.target_value_params().size()) {
    throw std::runtime_error("checkpoint: target value head incomplete");
  }
  policy.set_target_value_params(std::move(target));
}

std::vector<uint8_t> encode(const Checkpoint& c) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, c.version);
  put_u64(out, c.layout_hash);
  put_u64(out, uint64_t(c.step));
  put_f64(out, c.reward_stat.count);
  put_f64(out, c.reward_stat.mean);
  put_f64(out, c.reward_stat.m2);
  put_u32(out, uint32_t(c.arrays.size()));
  for (const auto& [name, value] : c.arrays) {
    put_u32(out, uint32_t(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, uint32_t(value.rows()));
    put_u32(out, uint32_t(value.cols()));
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      for (Eigen::Index col = 0; col < value.cols(); ++col) {
        put_f64(out, value(r, col));
      }
    }
  }
  return out;
}

Checkpoint decode(const std::vector<uint8_t>& bytes) {
  Reader in{bytes};
  if (in.str(4) != std::string(kMagic, 4)) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  Checkpoint c;
  c.version = in.u32();
  c.layout_hash = in.u64();
  c.step = int64_t(in.u64());
  c.reward_stat.count = in.f64();
  c.reward_stat.mean = in.f64();
  c.reward_stat.m2 = in.f64();
  const uint32_t n = in.u32();
  c.arrays.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t name_len = in.u32();
    std::string name = in.str(name_len);
    const uint32_t rows = in.u32();
    const uint32_t cols = in.u32();
    Mat m(rows, cols);
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t col = 0; col < cols; ++col) m(r, col) = in.f64();
    }
    c.arrays.emplace_back(std::move(name), std::move(m));
  }
  return c;
}

void save(const Checkpoint& c, const std::string& path) {
  const auto bytes = encode(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace swarm::checkpoint
