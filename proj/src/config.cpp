#include "nstr/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nstr {

namespace {

struct TomlValue {
  enum class Kind { kString, kNumber, kBool, kArray } kind;
  std::string str;
  double num = 0;
  bool flag = false;
  std::vector<double> array;
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

double parse_number(const std::string& s, int lineno) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("config line " + std::to_string(lineno) +
                      ": bad number '" + s + "'");
  }
}

TomlValue parse_value(const std::string& raw, int lineno) {
  TomlValue v{TomlValue::Kind::kNumber};
  const std::string s = trim(raw);
  if (s.empty()) {
    throw SchemaError("config line " + std::to_string(lineno) + ": empty value");
  }
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') {
      throw SchemaError("config line " + std::to_string(lineno) +
                        ": unterminated string");
    }
    v.kind = TomlValue::Kind::kString;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = TomlValue::Kind::kBool;
    v.flag = s == "true";
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') {
      throw SchemaError("config line " + std::to_string(lineno) +
                        ": array must close on the same line");
    }
    v.kind = TomlValue::Kind::kArray;
    std::string body = s.substr(1, s.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) v.array.push_back(parse_number(item, lineno));
    }
    return v;
  }
  v.num = parse_number(s, lineno);
  return v;
}

std::map<std::string, TomlValue> parse_toml_subset(const std::string& text) {
  std::map<std::string, TomlValue> out;
  std::string section;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw SchemaError("config line " + std::to_string(lineno) + ": bad section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.contains(full)) {
      throw SchemaError("config: duplicate key '" + full + "'");
    }
    out.emplace(full, parse_value(line.substr(eq + 1), lineno));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_int_array(const std::vector<int>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + "]";
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  auto keys = parse_toml_subset(text);

  auto want = [](const TomlValue& v, TomlValue::Kind kind, const std::string& key) {
    if (v.kind != kind) throw SchemaError("config: wrong type for '" + key + "'");
  };
  auto bind_str = [&want](std::string& dst) {
    return [&dst, &want](const std::string& key, const TomlValue& v) {
      want(v, TomlValue::Kind::kString, key);
      dst = v.str;
    };
  };
  auto bind_num = [&want](auto& dst) {
    return [&dst, &want](const std::string& key, const TomlValue& v) {
      want(v, TomlValue::Kind::kNumber, key);
      dst = static_cast<std::decay_t<decltype(dst)>>(v.num);
    };
  };
  auto bind_bool = [&want](bool& dst) {
    return [&dst, &want](const std::string& key, const TomlValue& v) {
      want(v, TomlValue::Kind::kBool, key);
      dst = v.flag;
    };
  };
  auto bind_int_vec = [&want](std::vector<int>& dst) {
    return [&dst, &want](const std::string& key, const TomlValue& v) {
      want(v, TomlValue::Kind::kArray, key);
      dst.clear();
      for (double x : v.array) dst.push_back(static_cast<int>(x));
    };
  };

  using Binder = std::function<void(const std::string&, const TomlValue&)>;
  const std::map<std::string, Binder> schema = {
      {"seed", bind_num(cfg.seed)},
      {"out_dir", bind_str(cfg.out_dir)},
      {"data.fixture", bind_str(cfg.data.fixture)},
      {"data.path", bind_str(cfg.data.path)},
      {"data.samples", bind_num(cfg.data.samples)},
      {"data.resolution", bind_num(cfg.data.resolution)},
      {"data.chirp_f0", bind_num(cfg.data.chirp_f0)},
      {"data.chirp_f1", bind_num(cfg.data.chirp_f1)},
      {"data.base_freq", bind_num(cfg.data.base_freq)},
      {"data.warp", bind_num(cfg.data.warp)},
      {"data.checker_cells", bind_num(cfg.data.checker_cells)},
      {"data.noise_sigma", bind_num(cfg.data.noise_sigma)},
      {"data.noise_seed", bind_num(cfg.data.noise_seed)},
      {"model.kind", bind_str(cfg.model.kind)},
      {"model.k", bind_num(cfg.model.k)},
      {"model.latent_dim", bind_num(cfg.model.latent_dim)},
      {"model.grid_res", bind_num(cfg.model.grid_res)},
      {"model.hyper_hidden", bind_int_vec(cfg.model.hyper_hidden)},
      {"model.flow_hidden", bind_int_vec(cfg.model.flow_hidden)},
      {"model.decoder_hidden", bind_int_vec(cfg.model.decoder_hidden)},
      {"model.scalar_bottleneck", bind_bool(cfg.model.scalar_bottleneck)},
      {"model.basis_trainable", bind_bool(cfg.model.basis_trainable)},
      {"model.omega_max", bind_num(cfg.model.omega_max)},
      {"model.fourier_features", bind_num(cfg.model.fourier_features)},
      {"model.fourier_sigma", bind_num(cfg.model.fourier_sigma)},
      {"model.fourier_width", bind_num(cfg.model.fourier_width)},
      {"model.fourier_depth", bind_num(cfg.model.fourier_depth)},
      {"model.siren_hidden", bind_int_vec(cfg.model.siren_hidden)},
      {"model.siren_omega0", bind_num(cfg.model.siren_omega0)},
      {"model.siren_width", bind_num(cfg.model.siren_width)},
      {"train.iterations", bind_num(cfg.train.iterations)},
      {"train.batch_size", bind_num(cfg.train.batch_size)},
      {"train.lr", bind_num(cfg.train.lr)},
      {"train.lambda_pde", bind_num(cfg.train.lambda_pde)},
      {"train.lambda_smooth", bind_num(cfg.train.lambda_smooth)},
      {"train.grad_mode", bind_str(cfg.train.grad_mode)},
      {"train.task", bind_str(cfg.train.task)},
      {"train.log_every", bind_num(cfg.train.log_every)},
      {"train.threads", bind_num(cfg.train.threads)},
  };

  for (const auto& [key, value] : keys) {
    auto it = schema.find(key);
    if (it == schema.end()) throw SchemaError("config: unknown key '" + key + "'");
    it->second(key, value);
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SchemaError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string to_toml(const RunConfig& c) {
  std::ostringstream os;
  os << "seed = " << c.seed << "\n";
  os << "out_dir = \"" << c.out_dir << "\"\n\n";
  os << "[data]\n";
  os << "fixture = \"" << c.data.fixture << "\"\n";
  os << "path = \"" << c.data.path << "\"\n";
  os << "samples = " << c.data.samples << "\n";
  os << "resolution = " << c.data.resolution << "\n";
  os << "chirp_f0 = " << fmt_double(c.data.chirp_f0) << "\n";
  os << "chirp_f1 = " << fmt_double(c.data.chirp_f1) << "\n";
  os << "base_freq = " << fmt_double(c.data.base_freq) << "\n";
  os << "warp = " << fmt_double(c.data.warp) << "\n";
  os << "checker_cells = " << fmt_double(c.data.checker_cells) << "\n";
  os << "noise_sigma = " << fmt_double(c.data.noise_sigma) << "\n";
  os << "noise_seed = " << c.data.noise_seed << "\n\n";
  os << "[model]\n";
  os << "kind = \"" << c.model.kind << "\"\n";
  os << "k = " << c.model.k << "\n";
  os << "latent_dim = " << c.model.latent_dim << "\n";
  os << "grid_res = " << c.model.grid_res << "\n";
  os << "hyper_hidden = " << fmt_int_array(c.model.hyper_hidden) << "\n";
  os << "flow_hidden = " << fmt_int_array(c.model.flow_hidden) << "\n";
  os << "decoder_hidden = " << fmt_int_array(c.model.decoder_hidden) << "\n";
  os << "scalar_bottleneck = " << (c.model.scalar_bottleneck ? "true" : "false") << "\n";
  os << "basis_trainable = " << (c.model.basis_trainable ? "true" : "false") << "\n";
  os << "omega_max = " << fmt_double(c.model.omega_max) << "\n";
  os << "fourier_features = " << c.model.fourier_features << "\n";
  os << "fourier_sigma = " << fmt_double(c.model.fourier_sigma) << "\n";
  os << "fourier_width = " << c.model.fourier_width << "\n";
  os << "fourier_depth = " << c.model.fourier_depth << "\n";
  os << "siren_hidden = " << fmt_int_array(c.model.siren_hidden) << "\n";
  os << "siren_omega0 = " << fmt_double(c.model.siren_omega0) << "\n";
  os << "siren_width = " << c.model.siren_width << "\n\n";
  os << "[train]\n";
  os << "iterations = " << c.train.iterations << "\n";
  os << "batch_size = " << c.train.batch_size << "\n";
  os << "lr = " << fmt_double(c.train.lr) << "\n";
  os << "lambda_pde = " << fmt_double(c.train.lambda_pde) << "\n";
  os << "lambda_smooth = " << fmt_double(c.train.lambda_smooth) << "\n";
  os << "grad_mode = \"" << c.train.grad_mode << "\"\n";
  os << "task = \"" << c.train.task << "\"\n";
  os << "log_every = " << c.train.log_every << "\n";
  os << "threads = " << c.train.threads << "\n";
  return os.str();
}

SignalDataset make_dataset(const DataConfig& cfg) {
  if (cfg.fixture == "chirp") {
    return make_chirp(cfg.samples, cfg.chirp_f0, cfg.chirp_f1);
  }
  if (cfg.fixture == "warped") {
    return make_warped_texture(cfg.resolution, cfg.base_freq, cfg.warp);
  }
  if (cfg.fixture == "noisy_warped") {
    return add_noise(make_warped_texture(cfg.resolution, cfg.base_freq, cfg.warp),
                     cfg.noise_sigma, cfg.noise_seed);
  }
  if (cfg.fixture == "checker") {
    return make_checker_gradient(cfg.resolution, cfg.checker_cells);
  }
  if (cfg.fixture == "photo") {
    return make_photo(cfg.resolution);
  }
  if (cfg.fixture == "file") {
    if (cfg.path.size() > 4 && cfg.path.substr(cfg.path.size() - 4) == ".wav") {
      return load_audio(cfg.path);
    }
    return load_image(cfg.path);
  }
  throw SchemaError("unknown fixture: " + cfg.fixture);
}

TrainConfig to_train_config(const RunConfig& cfg) {
  TrainConfig tc;
  tc.iterations = cfg.train.iterations;
  tc.batch_size = cfg.train.batch_size;
  tc.seed = cfg.seed;
  tc.adam.lr = cfg.train.lr;
  tc.weights.lambda_pde = cfg.train.lambda_pde;
  tc.weights.lambda_smooth = cfg.train.lambda_smooth;
  if (cfg.train.grad_mode == "fd") {
    tc.grad_mode = GradMode::kFd;
  } else if (cfg.train.grad_mode == "analytic") {
    tc.grad_mode = GradMode::kAnalytic;
  } else {
    throw SchemaError("train.grad_mode must be fd or analytic");
  }
  if (cfg.train.task == "l2") {
    tc.task = TaskLoss::kL2;
  } else if (cfg.train.task == "l1") {
    tc.task = TaskLoss::kL1;
  } else {
    throw SchemaError("train.task must be l2 or l1");
  }
  tc.log_every = cfg.train.log_every;
  tc.threads = cfg.train.threads;
  return tc;
}

int max_axis_resolution(const SignalDataset& ds) {
  int r = 0;
  for (int v : ds.meta.resolution) r = std::max(r, v);
  return r > 0 ? r : static_cast<int>(ds.size());
}

}  // namespace nstr
