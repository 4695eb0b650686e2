#pragma once

#include <string>

#include "nstr/config.hpp"

namespace nstr {

// Exit codes: 0 success, 2 config/schema error, 3 divergence.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;

int cmd_train(const RunConfig& cfg);
int cmd_eval(const std::string& checkpoint_path, const std::string& out_dir);
int cmd_export_fields(const std::string& checkpoint_path, int probe_res,
                      const std::string& out_dir);
int cmd_compare(const RunConfig& base, int seeds, const std::string& out_dir);
int cmd_ablate(const RunConfig& base, const std::string& axis, int seeds,
               const std::string& out_dir);

// One collapsed row per method after the matched-parameter runs; Fourier
// reports its best sigma from {1, 10, 30}.
struct MethodSummary {
  std::string method;
  double sigma = 0;
  int64_t params = 0;
  double median_psnr = 0;
  double median_wall_ms = 0;
};

// Shared harness behind cmd_compare and the acceptance suite. Members run
// with seeds base.seed .. base.seed+seeds-1; when out_dir is empty no files
// are written. include_siren toggles the SIREN member.
std::vector<MethodSummary> run_comparison(const RunConfig& base, int seeds,
                                          const std::string& out_dir,
                                          bool include_siren);

}  // namespace nstr
