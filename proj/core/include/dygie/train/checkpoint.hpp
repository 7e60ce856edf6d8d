#pragma once

// Checkpoint file format:
//   8 bytes   magic "DYGIECKP"
//   u32 LE    format version (1)
//   u64 LE    config JSON length, followed by that many UTF-8 bytes
//   records   [u32 LE name length][name][u32 LE rank][u64 LE dim]*rank
//             [float32 LE payload]
// The JSON block holds the run config plus vocabulary, step counter and
// shuffle RNG state. Parameter records come first in creation order, then
// optimizer moments as adam.m.<name> / adam.v.<name>. Payloads are always
// float32; the precision recorded in the config must match the loading
// run's precision.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dygie/model/params.hpp"
#include "dygie/train/adam.hpp"

namespace dygie::train {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  model::Config config;
  std::vector<std::string> vocab;  // tokens, without the unk/pad rows
  int64_t step = 0;
  std::array<uint64_t, 4> rng_state{};
  model::ParamStore<float> params;
  model::ParamStore<float> adam_m;
  model::ParamStore<float> adam_v;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Conversions between run precision and the float32 file payload. Building
// or restoring checks the run precision against config.precision.
template <class S>
Checkpoint make_checkpoint(const model::Config& config, const std::vector<std::string>& vocab,
                           const model::ParamStore<S>& params, const Adam<S>& adam,
                           const std::array<uint64_t, 4>& rng_state);

template <class S>
void restore_checkpoint(const Checkpoint& ckpt, model::ParamStore<S>* params, Adam<S>* adam);

}  // namespace dygie::train
