#pragma once

#include <string>

#include "nstr/model.hpp"

namespace nstr {

struct FieldExportResult {
  int records = 0;
  double mean_residual = 0;  // mean over probe points of ||grad S - F||^2
};

// Probes the model on a uniform grid (cell centers, probe_res per axis) and
// writes fields.csv with per-point S(x), grad S(x), F(x,S(x)) and the PDE
// residual, plus grayscale heatmaps of the field norms with their
// normalization bounds in fields.json.
FieldExportResult export_fields(const NstrModel& model, int probe_res,
                                const std::string& out_dir);

}  // namespace nstr
