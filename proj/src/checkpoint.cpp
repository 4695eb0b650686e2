#include "nstr/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "nstr/baselines.hpp"

namespace nstr {

namespace {
constexpr int kSchemaVersion = 1;
}

void save_checkpoint(const std::string& path, const FieldModel& model,
                     const RunConfig& cfg, int data_dim, int channels,
                     int max_axis_res) {
  nlohmann::json header;
  header["schema_version"] = kSchemaVersion;
  header["kind"] = model.kind();
  header["dtype"] = "f64";
  header["data_dim"] = data_dim;
  header["channels"] = channels;
  header["max_axis_res"] = max_axis_res;
  header["param_count"] = model.param_count();
  // out_dir names the checkpoint's own location; excluding it keeps
  // checkpoint bytes a function of (config, seed) alone.
  RunConfig echo = cfg;
  echo.out_dir.clear();
  header["config_toml"] = to_toml(echo);
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : model.tape().segments()) {
    segs.push_back({{"name", s.name}, {"offset", s.offset}, {"shape", s.shape}});
  }
  header["segments"] = segs;

  const std::string htext = header.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot write checkpoint: " + path);
  const uint32_t hlen = static_cast<uint32_t>(htext.size());
  const uint8_t lenb[4] = {
      static_cast<uint8_t>(hlen), static_cast<uint8_t>(hlen >> 8),
      static_cast<uint8_t>(hlen >> 16), static_cast<uint8_t>(hlen >> 24)};
  f.write(reinterpret_cast<const char*>(lenb), 4);
  f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  const auto& params = model.tape().params();
  f.write(reinterpret_cast<const char*>(params.data()),
          static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!f) throw SchemaError("short write on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot open checkpoint: " + path);
  uint8_t lenb[4];
  f.read(reinterpret_cast<char*>(lenb), 4);
  if (!f) throw SchemaError("truncated checkpoint header: " + path);
  const uint32_t hlen = lenb[0] | (lenb[1] << 8) | (lenb[2] << 16) |
                        (static_cast<uint32_t>(lenb[3]) << 24);
  if (hlen == 0 || hlen > (1u << 24)) {
    throw SchemaError("implausible checkpoint header length: " + path);
  }
  std::string htext(hlen, '\0');
  f.read(htext.data(), hlen);
  if (!f) throw SchemaError("truncated checkpoint header: " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("corrupt checkpoint header: " + std::string(e.what()));
  }
  if (!header.contains("schema_version") ||
      header["schema_version"].get<int>() != kSchemaVersion) {
    throw SchemaError("checkpoint schema version mismatch");
  }
  if (header.value("dtype", "") != "f64") {
    throw SchemaError("checkpoint dtype must be f64");
  }

  LoadedCheckpoint out;
  out.config = parse_config_text(header.at("config_toml").get<std::string>());
  out.data_dim = header.at("data_dim").get<int>();
  out.channels = header.at("channels").get<int>();
  out.max_axis_res = header.at("max_axis_res").get<int>();
  out.model = make_model(out.config.model, out.data_dim, out.channels,
                         out.max_axis_res, out.config.seed);
  if (out.model->kind() != header.at("kind").get<std::string>()) {
    throw SchemaError("checkpoint kind does not match its config echo");
  }

  // The registry must match the freshly built model exactly.
  const auto segs = header.at("segments");
  const auto& live = out.model->tape().segments();
  if (segs.size() != live.size()) {
    throw SchemaError("checkpoint segment registry mismatch");
  }
  for (size_t i = 0; i < live.size(); ++i) {
    if (segs[i].at("name").get<std::string>() != live[i].name ||
        segs[i].at("offset").get<size_t>() != live[i].offset ||
        segs[i].at("shape").get<std::vector<int>>() != live[i].shape) {
      throw SchemaError("checkpoint segment registry mismatch at " + live[i].name);
    }
  }

  const size_t n = header.at("param_count").get<size_t>();
  if (n != out.model->tape().size()) {
    throw SchemaError("checkpoint parameter count mismatch");
  }
  auto& params = out.model->tape().params();
  f.read(reinterpret_cast<char*>(params.data()),
         static_cast<std::streamsize>(n * sizeof(double)));
  if (!f || f.gcount() != static_cast<std::streamsize>(n * sizeof(double))) {
    throw SchemaError("checkpoint payload length mismatch");
  }
  check_finite(params.data(), params.size(), "checkpoint payload");
  return out;
}

}  // namespace nstr
