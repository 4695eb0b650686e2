#pragma once

#include <json.hpp>

#include "nstr/data.hpp"
#include "nstr/model.hpp"
#include "nstr/stft.hpp"

namespace nstr {

struct EvalReport {
  double mse = 0;
  double psnr_db = 0;
  double snr_db = 0;
  double spectral_convergence = std::numeric_limits<double>::quiet_NaN();  // 1-D only
  double psnr_clean_db = std::numeric_limits<double>::quiet_NaN();  // vs clean ref
  int64_t param_count = 0;
  double wall_ms = 0;
};

// 10*log10(peak^2/mse), capped at 99 dB (exactly 99 when mse == 0).
double psnr(const Mat& pred, const Mat& target, double peak);

// 10*log10(||target||^2 / ||target - pred||^2), capped at 99 dB.
double snr(const Mat& pred, const Mat& target);

// || |STFT(target)| - |STFT(pred)| ||_F / || |STFT(target)| ||_F.
double spectral_convergence(const Vec& pred, const Vec& target,
                            const StftConfig& cfg = {});

// Convex-combination estimate of the dominant local frequency:
// w_hat(x) = sum_i |S_i(x)| w_i / sum_i |S_i(x)|. Throws NumericError when
// the spectrum magnitude sum is below tol.
Vec estimate_local_frequency(const NstrModel& model, const Vec& x,
                             double tol = 1e-9);

// Spearman rank correlation with average ranks for ties.
double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b);

// Full-grid evaluation against the dataset (psnr peak = 2, the normalized
// value range). psnr_clean_db is filled when meta.clean_values is present.
EvalReport evaluate(const FieldModel& model, const SignalDataset& data);

nlohmann::json to_json(const EvalReport& r);

}  // namespace nstr
