#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "fdrl/mlp.hpp"

namespace fdrl {

struct NetworkSnapshot {
    std::uint64_t architecture = 0;
    Eigen::VectorXd params;
    AdamState adam;
};

// Everything needed to resume or evaluate a run. Binary layout (all
// integers and doubles little-endian):
//   char[8]  magic "FDIVCKPT"
//   u32      version (1)
//   u64      config hash
//   i64      training step
//   str      config text          (str = u64 length, then bytes)
//   net      actor, critic        (net = u64 arch hash, u64 n, f64[n] params,
//                                  f64[n] adam m, f64[n] adam v, i64 adam step)
//   str      rng state
struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::int64_t step = 0;
    std::string config_text;
    NetworkSnapshot actor;
    NetworkSnapshot critic;
    std::string rng_state;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace fdrl
