#include "swarm/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <variant>
#include <vector>

namespace swarm::config {

namespace {

using FieldPtr =
    std::variant<int*, int64_t*, uint64_t*, double*, bool*, std::string*>;

struct Field {
  const char* section;
  const char* key;
  FieldPtr ptr;
};

// Single source of truth for the key layout; serialize and parse both walk
// this table, which keeps the round trip lossless by construction.
std::vector<Field> fields(RunConfig& c) {
  return {
      {"run", "scenario", &c.scenario},
      {"run", "seed", &c.seed},
      {"run", "output_dir", &c.output_dir},
      {"run", "total_steps", &c.total_steps},
      {"run", "checkpoint_interval", &c.checkpoint_interval},
      {"run", "eval_runs", &c.eval_runs},

      {"env", "m", &c.env.m},
      {"env", "k", &c.env.k},
      {"env", "m_max", &c.env.m_max},
      {"env", "k_max", &c.env.k_max},
      {"env", "l_r", &c.env.l_r},
      {"env", "r_p", &c.env.r_p},
      {"env", "r_e", &c.env.r_e},
      {"env", "r_pe", &c.env.r_pe},
      {"env", "varpi_min", &c.env.varpi_min},
      {"env", "v_max", &c.env.v_max},
      {"env", "v_dock", &c.env.v_dock},
      {"env", "T0", &c.env.T0},
      {"env", "dt", &c.env.dt},
      {"env", "a_max_p", &c.env.a_max_p},
      {"env", "evader_gain", &c.env.evader_gain},
      {"env", "p_imp", &c.env.p_imp},
      {"env", "require_all", &c.env.require_all},
      {"env", "mu", &c.env.orbit.mu},
      {"env", "a0", &c.env.orbit.a0},
      {"env", "omega", &c.env.orbit.omega},
      {"env", "c_local", &c.env.queue.c_local},
      {"env", "s0", &c.env.queue.s0},
      {"env", "rho_sense", &c.env.queue.rho_sense},
      {"env", "lambda_outage", &c.env.queue.lambda},
      {"env", "w_d", &c.env.reward.w_d},
      {"env", "w_cap", &c.env.reward.w_cap},
      {"env", "w_att", &c.env.reward.w_att},
      {"env", "w_col", &c.env.reward.w_col},
      {"env", "w_bnd", &c.env.reward.w_bnd},
      {"env", "w_fuel", &c.env.reward.w_fuel},
      {"env", "r_max", &c.env.reward.r_max},

      {"model", "d_model", &c.model.d_model},
      {"model", "n_heads", &c.model.n_heads},
      {"model", "n_blocks_enc", &c.model.n_blocks_enc},
      {"model", "n_blocks_dec", &c.model.n_blocks_dec},
      {"model", "window", &c.model.window},
      {"model", "n_experts", &c.model.n_experts},
      {"model", "mean_pool_time", &c.model.mean_pool_time},

      {"train", "lr", &c.train.lr},
      {"train", "gamma", &c.train.gamma},
      {"train", "gae_lambda", &c.train.gae_lambda},
      {"train", "clip_eps", &c.train.clip_eps},
      {"train", "batch_size", &c.train.batch_size},
      {"train", "buffer_capacity", &c.train.buffer_capacity},
      {"train", "eta_soft", &c.train.eta_soft},
      {"train", "hard_target_interval", &c.train.hard_target_interval},
      {"train", "ppo_epochs", &c.train.ppo_epochs},
      {"train", "entropy_coef", &c.train.entropy_coef},
      {"train", "max_grad_norm", &c.train.max_grad_norm},
      {"train", "eta_reg", &c.train.eta_reg},
      {"train", "rollout_steps", &c.train.rollout_steps},
      {"train", "n_alt", &c.train.n_alt},
      {"train", "curriculum_threshold", &c.train.curriculum_threshold},
      {"train", "curriculum_window", &c.train.curriculum_window},
  };
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_value(const FieldPtr& p) {
  if (auto* v = std::get_if<int*>(&p)) return std::to_string(**v);
  if (auto* v = std::get_if<int64_t*>(&p)) return std::to_string(**v);
  if (auto* v = std::get_if<uint64_t*>(&p)) return std::to_string(**v);
  if (auto* v = std::get_if<double*>(&p)) return format_double(**v);
  if (auto* v = std::get_if<bool*>(&p)) return **v ? "true" : "false";
  return *std::get<std::string*>(p);
}

void assign_value(const FieldPtr& p, const std::string& raw,
                  const std::string& where) {
  try {
    size_t used = 0;
    if (auto* v = std::get_if<int*>(&p)) {
      **v = std::stoi(raw, &used);
    } else if (auto* v = std::get_if<int64_t*>(&p)) {
      **v = std::stoll(raw, &used);
    } else if (auto* v = std::get_if<uint64_t*>(&p)) {
      **v = std::stoull(raw, &used);
    } else if (auto* v = std::get_if<double*>(&p)) {
      **v = std::stod(raw, &used);
    } else if (auto* v = std::get_if<bool*>(&p)) {
      if (raw == "true" || raw == "1") {
        **v = true;
      } else if (raw == "false" || raw == "0") {
        **v = false;
      } else {
        throw std::invalid_argument("expected true/false");
      }
      return;
    } else {
      *std::get<std::string*>(p) = raw;
      return;
    }
    if (used != raw.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception& e) {
    throw std::runtime_error("config: bad value for " + where + ": '" + raw +
                             "' (" + e.what() + ")");
  }
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

bool RunConfig::valid(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (!env.valid()) return fail("env block invalid");
  if (!model.valid()) return fail("model block invalid");
  if (!train.valid()) return fail("train block invalid");
  if (scenario != "random" && scenario != "pretrained" && scenario != "game") {
    return fail("scenario must be random, pretrained, or game");
  }
  if (total_steps < 0) return fail("total_steps must be >= 0");
  if (eval_runs < 1) return fail("eval_runs must be >= 1");
  if (env.m > env.m_max || env.k > env.k_max) {
    return fail("team sizes exceed m_max/k_max layout capacities");
  }
  return true;
}

std::string serialize(const RunConfig& c) {
  RunConfig& mut = const_cast<RunConfig&>(c);  // registry needs lvalues
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields(mut)) {
    if (section != f.section) {
      if (!section.empty()) out << "\n";
      section = f.section;
      out << "[" << section << "]\n";
    }
    out << f.key << " = " << format_value(f.ptr) << "\n";
  }
  return out.str();
}

RunConfig parse(const std::string& text) {
  RunConfig c;
  auto regs = fields(c);
  std::map<std::string, FieldPtr> lookup;
  for (const Field& f : regs) {
    lookup[std::string(f.section) + "." + f.key] = f.ptr;
  }

  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config: malformed section at line " +
                                 std::to_string(lineno));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: expected key = value at line " +
                               std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    auto it = lookup.find(full);
    if (it == lookup.end()) {
      throw std::runtime_error("config: unknown key '" + full + "' at line " +
                               std::to_string(lineno));
    }
    assign_value(it->second, value, full);
  }
  return c;
}

RunConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void save_file(const RunConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << serialize(c);
}

uint64_t config_hash(const RunConfig& c) {
  const std::string s = serialize(c);
  uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace swarm::config
