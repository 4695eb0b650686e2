#include "nstr/fields.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "nstr/data.hpp"

namespace nstr {

FieldExportResult export_fields(const NstrModel& model, int probe_res,
                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const int d = model.dim();
  const int k = model.k();
  const int64_t n = d == 1 ? probe_res : static_cast<int64_t>(probe_res) * probe_res;

  Mat X(n, d);
  if (d == 1) {
    for (int i = 0; i < probe_res; ++i) X(i, 0) = 2.0 * (i + 0.5) / probe_res - 1.0;
  } else {
    int64_t r = 0;
    for (int i = 0; i < probe_res; ++i) {
      for (int j = 0; j < probe_res; ++j, ++r) {
        X(r, 0) = 2.0 * (j + 0.5) / probe_res - 1.0;
        X(r, 1) = 2.0 * (i + 0.5) / probe_res - 1.0;
      }
    }
  }

  const Mat S = model.spectrum_batch(X);
  const Mat G = model.grad_s_batch(X, GradMode::kAnalytic);
  const Mat F = model.flow_batch(X, S);

  Vec s_norm(n), g_norm(n), f_norm(n), residual(n);
  for (int64_t i = 0; i < n; ++i) {
    s_norm(i) = S.row(i).norm();
    g_norm(i) = G.row(i).norm();
    f_norm(i) = F.row(i).norm();
    residual(i) = (G.row(i) - F.row(i)).squaredNorm();
  }

  std::ofstream csv(out_dir + "/fields.csv");
  if (!csv) throw SchemaError("cannot write " + out_dir + "/fields.csv");
  for (int a = 0; a < d; ++a) csv << "x" << a << ",";
  for (int i = 0; i < k; ++i) csv << "s_" << i << ",";
  for (int i = 0; i < k; ++i) {
    for (int a = 0; a < d; ++a) csv << "ds_" << i << "_" << a << ",";
  }
  for (int i = 0; i < k; ++i) {
    for (int a = 0; a < d; ++a) csv << "f_" << i << "_" << a << ",";
  }
  csv << "residual\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    csv << buf << ",";
  };
  for (int64_t r = 0; r < n; ++r) {
    for (int a = 0; a < d; ++a) put(X(r, a));
    for (int i = 0; i < k; ++i) put(S(r, i));
    for (int c = 0; c < k * d; ++c) put(G(r, c));
    for (int c = 0; c < k * d; ++c) put(F(r, c));
    std::snprintf(buf, sizeof(buf), "%.17g", residual(r));
    csv << buf << "\n";
  }

  const int w = probe_res;
  const int h = d == 1 ? 1 : probe_res;
  nlohmann::json bounds;
  auto heatmap = [&](const char* name, const Vec& field) {
    double lo = 0, hi = 0;
    save_heatmap_png(out_dir + "/" + name + ".png", field, w, h, &lo, &hi);
    bounds[name] = {{"min", lo}, {"max", hi}};
  };
  heatmap("s_norm", s_norm);
  heatmap("grad_s_norm", g_norm);
  heatmap("flow_norm", f_norm);
  heatmap("residual", residual);
  bounds["probe_resolution"] = probe_res;
  bounds["records"] = n;
  std::ofstream side(out_dir + "/fields.json");
  side << bounds.dump(2) << "\n";

  FieldExportResult res;
  res.records = static_cast<int>(n);
  res.mean_residual = residual.mean();
  return res;
}

}  // namespace nstr
