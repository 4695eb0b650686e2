#pragma once

#include <string>

#include "nstr/data.hpp"
#include "nstr/model.hpp"
#include "nstr/optim.hpp"

namespace nstr {

struct DataConfig {
  std::string fixture = "warped";  // chirp|warped|checker|photo|noisy_warped|file
  std::string path;                // when fixture = "file"
  int samples = 2048;              // 1-D fixtures
  int resolution = 64;             // 2-D fixtures
  double chirp_f0 = 5.0;
  double chirp_f1 = 60.0;
  double base_freq = 4.5;
  double warp = 2.2;
  double checker_cells = 6.0;
  double noise_sigma = 0.1;
  uint64_t noise_seed = 1234;
};

struct TrainSection {
  int iterations = 2000;
  int batch_size = 256;
  double lr = 1e-4;
  double lambda_pde = 0.1;
  double lambda_smooth = 0.01;
  std::string grad_mode = "fd";  // fd | analytic
  std::string task = "l2";       // l2 | l1
  int log_every = 100;
  int threads = 0;
};

// One run = one of these. Mirrors the TOML schema in docs/FORMATS.md.
struct RunConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";
  DataConfig data;
  ModelConfig model;
  TrainSection train;
};

// Parses the documented TOML subset (sections, strings, numbers, booleans,
// one-line numeric arrays). Unknown keys are errors.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

// Full resolved config, loadable by parse_config_text.
std::string to_toml(const RunConfig& cfg);

SignalDataset make_dataset(const DataConfig& cfg);
TrainConfig to_train_config(const RunConfig& cfg);
int max_axis_resolution(const SignalDataset& ds);

}  // namespace nstr
