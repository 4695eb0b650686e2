#include "nstr/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace nstr {

namespace {
constexpr double kDbCap = 99.0;

double mse_of(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw SchemaError("metric: shape mismatch");
  }
  if (pred.size() == 0) throw SchemaError("metric: empty input");
  double se = 0;
  for (int64_t i = 0; i < pred.rows(); ++i) {
    for (int c = 0; c < pred.cols(); ++c) {
      const double d = pred(i, c) - target(i, c);
      se += d * d;
    }
  }
  return se / static_cast<double>(pred.size());
}
}  // namespace

double psnr(const Mat& pred, const Mat& target, double peak) {
  const double mse = mse_of(pred, target);
  if (mse == 0.0) return kDbCap;
  return std::min(kDbCap, 10.0 * std::log10(peak * peak / mse));
}

double snr(const Mat& pred, const Mat& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw SchemaError("snr: shape mismatch");
  }
  double sig = 0, err = 0;
  for (int64_t i = 0; i < pred.rows(); ++i) {
    for (int c = 0; c < pred.cols(); ++c) {
      sig += target(i, c) * target(i, c);
      const double d = target(i, c) - pred(i, c);
      err += d * d;
    }
  }
  if (sig == 0.0) throw SchemaError("snr: zero target energy");
  if (err == 0.0) return kDbCap;
  return std::min(kDbCap, 10.0 * std::log10(sig / err));
}

double spectral_convergence(const Vec& pred, const Vec& target,
                            const StftConfig& cfg) {
  const Mat mt = stft_magnitude(target, cfg);
  const Mat mp = stft_magnitude(pred, cfg);
  double num = 0, den = 0;
  for (int64_t i = 0; i < mt.rows(); ++i) {
    for (int64_t j = 0; j < mt.cols(); ++j) {
      const double d = mt(i, j) - mp(i, j);
      num += d * d;
      den += mt(i, j) * mt(i, j);
    }
  }
  if (den == 0.0) throw SchemaError("spectral_convergence: silent target");
  return std::sqrt(num) / std::sqrt(den);
}

Vec estimate_local_frequency(const NstrModel& model, const Vec& x, double tol) {
  const Vec s = model.spectrum(x);
  double wsum = 0;
  for (int i = 0; i < s.size(); ++i) wsum += std::abs(s(i));
  if (wsum < tol) {
    throw NumericError("estimate_local_frequency: near-zero spectrum");
  }
  const Mat omega = model.basis().omega(model.tape());
  Vec out = Vec::Zero(model.dim());
  for (int i = 0; i < s.size(); ++i) {
    out += (std::abs(s(i)) / wsum) * omega.row(i).transpose();
  }
  return out;
}

double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw SchemaError("rank correlation: need two equal-length samples");
  }
  const size_t n = a.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&v](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;  // average rank for ties
      for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < n; ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0 || vb == 0) return 0.0;
  return cov / std::sqrt(va * vb);
}

EvalReport evaluate(const FieldModel& model, const SignalDataset& data) {
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport r;
  const Mat pred = eval_forward(model, data.coords);
  r.mse = mse_of(pred, data.values);
  r.psnr_db = psnr(pred, data.values, 2.0);
  r.snr_db = snr(pred, data.values);
  if (data.d == 1 && data.size() >= StftConfig{}.window) {
    r.spectral_convergence =
        spectral_convergence(Vec(pred.col(0)), Vec(data.values.col(0)));
  }
  if (data.meta.clean_values.has_value()) {
    r.psnr_clean_db = psnr(pred, *data.meta.clean_values, 2.0);
  }
  r.param_count = model.param_count();
  r.wall_ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["mse"] = r.mse;
  j["psnr_db"] = r.psnr_db;
  j["snr_db"] = r.snr_db;
  if (std::isfinite(r.spectral_convergence)) {
    j["spectral_convergence"] = r.spectral_convergence;
  } else {
    j["spectral_convergence"] = nullptr;
  }
  if (std::isfinite(r.psnr_clean_db)) j["psnr_clean_db"] = r.psnr_clean_db;
  j["param_count"] = r.param_count;
  j["wall_ms"] = r.wall_ms;
  return j;
}

}  // namespace nstr
