#pragma once

#include <memory>
#include <string>

#include "nstr/config.hpp"

namespace nstr {

// Binary layout: u32 LE header length, UTF-8 JSON header, then the packed
// little-endian f64 parameter array. The header carries the schema version,
// model kind, the full resolved config (TOML echo), and the segment registry;
// it is sufficient to re-run the producing command exactly.
struct LoadedCheckpoint {
  RunConfig config;
  int data_dim = 0;
  int channels = 0;
  int max_axis_res = 0;
  std::unique_ptr<FieldModel> model;
};

void save_checkpoint(const std::string& path, const FieldModel& model,
                     const RunConfig& cfg, int data_dim, int channels,
                     int max_axis_res);

// Rebuilds the model from the config echo and overwrites its parameters with
// the payload. Throws SchemaError on any mismatch.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace nstr
