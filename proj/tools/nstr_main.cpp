#include <CLI11.hpp>

#include <iostream>

#include "nstr/commands.hpp"

namespace {

// Config-affecting flags shared by the training-style subcommands.
struct CommonArgs {
  std::string config_path;
  uint64_t seed = 0;
  std::string out_dir;
  std::string grad_mode;
  bool scalar_bottleneck = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "TOML run config")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "override config seed");
  cmd->add_option("--out-dir", args.out_dir, "override config out_dir");
  cmd->add_option("--grad-mode", args.grad_mode, "spectrum Jacobian mode")
      ->check(CLI::IsMember({"fd", "analytic"}));
  cmd->add_flag("--scalar-bottleneck", args.scalar_bottleneck,
                "feed the decoder the literal scalar sum");
}

nstr::RunConfig resolve(const CLI::App* cmd, const CommonArgs& args) {
  nstr::RunConfig cfg = nstr::load_config_file(args.config_path);
  if (cmd->count("--seed")) cfg.seed = args.seed;
  if (cmd->count("--out-dir")) cfg.out_dir = args.out_dir;
  if (cmd->count("--grad-mode")) cfg.train.grad_mode = args.grad_mode;
  if (cmd->count("--scalar-bottleneck")) cfg.model.scalar_bottleneck = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nstr: spectral-transport signal representation tool"};
  app.require_subcommand(1);

  CommonArgs train_args, compare_args, ablate_args;
  std::string ckpt_path, eval_out = "eval_out", fields_out = "fields_out";
  int probe_res = 32;
  int compare_seeds = 3, ablate_seeds = 3;
  std::string ablate_axis;

  CLI::App* train = app.add_subcommand("train", "fit a model per config");
  add_common(train, train_args);

  CLI::App* eval =
      app.add_subcommand("eval", "metrics + reconstruction from a checkpoint");
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out-dir", eval_out, "output directory");

  CLI::App* fields = app.add_subcommand("export-fields",
                                        "dump S, grad S, flow, residual maps");
  fields->add_option("--checkpoint", ckpt_path, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  fields->add_option("--probe-resolution", probe_res, "probe grid resolution");
  fields->add_option("--out-dir", fields_out, "output directory");

  CLI::App* compare = app.add_subcommand(
      "compare", "matched-parameter NSTR / Fourier-MLP / SIREN table");
  add_common(compare, compare_args);
  compare->add_option("--seeds", compare_seeds, "seeds per member");

  CLI::App* ablate = app.add_subcommand("ablate", "sweep one axis");
  add_common(ablate, ablate_args);
  ablate->add_option("--axis", ablate_axis, "pde | K | decoder")
      ->required()
      ->check(CLI::IsMember({"pde", "K", "decoder"}));
  ablate->add_option("--seeds", ablate_seeds, "seeds per setting");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return nstr::cmd_train(resolve(train, train_args));
    }
    if (eval->parsed()) {
      return nstr::cmd_eval(ckpt_path, eval_out);
    }
    if (fields->parsed()) {
      return nstr::cmd_export_fields(ckpt_path, probe_res, fields_out);
    }
    if (compare->parsed()) {
      nstr::RunConfig cfg = resolve(compare, compare_args);
      const std::string out =
          compare->count("--out-dir") ? compare_args.out_dir : cfg.out_dir;
      return nstr::cmd_compare(cfg, compare_seeds, out);
    }
    if (ablate->parsed()) {
      nstr::RunConfig cfg = resolve(ablate, ablate_args);
      const std::string out =
          ablate->count("--out-dir") ? ablate_args.out_dir : cfg.out_dir;
      return nstr::cmd_ablate(cfg, ablate_axis, ablate_seeds, out);
    }
  } catch (const nstr::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nstr::kExitDiverged;
  } catch (const nstr::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nstr::kExitConfig;
  } catch (const nstr::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nstr::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
