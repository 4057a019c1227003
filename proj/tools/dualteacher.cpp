#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "dualteacher/data.hpp"
#include "dualteacher/checkpoint.hpp"
#include "dualteacher/trainer.hpp"

namespace fs = std::filesystem;

namespace {

// --key value overrides applied on top of --config.
void add_override_options(CLI::App* cmd, std::vector<std::pair<std::string, std::string>>& overrides) {
  static const char* keys[] = {"mode",        "aug_pool",     "epochs",        "batch_labeled",
                               "batch_unlabeled", "lr",       "weight_decay",  "momentum",
                               "lambda_u",    "lambda_c",     "w_l",           "decay_kind",
                               "decay_rate",  "alpha_max",    "conf_threshold", "hidden_channels",
                               "num_blocks",  "seed",         "data_dir",      "manifest",
                               "run_dir",     "diag_batch",   "save_checkpoints",
                               "ramp_epochs"};
  for (const char* key : keys) {
    cmd->add_option_function<std::string>(
        std::string("--") + key,
        [&overrides, key](const std::string& value) { overrides.emplace_back(key, value); });
  }
}

dt::TrainConfig resolve_config(const std::string& config_path,
                               const std::vector<std::pair<std::string, std::string>>& overrides) {
  dt::TrainConfig cfg;
  if (!config_path.empty()) cfg = dt::load_train_config(config_path);
  for (const auto& [key, value] : overrides) dt::apply_config_line(cfg, key, value);
  if (const char* env = std::getenv("DUALTEACH_SEED")) cfg.seed = std::stoull(env);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual Teacher semi-supervised segmentation trainer"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic shape dataset and a partition");
  std::string gen_out = "data";
  dt::ShapeGenConfig gen_cfg;
  double gen_fraction = 0.125;
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--size", gen_cfg.h, "Image height and width")->check(CLI::Range(16, 4096));
  gen->add_option("--classes", gen_cfg.num_classes, "Class count including background");
  gen->add_option("--samples", gen_cfg.samples, "Training sample count");
  gen->add_option("--val-samples", gen_cfg.val_samples, "Validation sample count");
  gen->add_option("--noise", gen_cfg.noise, "Additive noise amplitude");
  gen->add_option("--seed", gen_cfg.seed, "Generation seed");
  gen->add_option("--fraction", gen_fraction, "Labeled fraction for the partition manifest");

  // train
  auto* train_cmd = app.add_subcommand("train", "Run the training loop");
  std::string train_config_path;
  std::vector<std::pair<std::string, std::string>> train_overrides;
  train_cmd->add_option("--config", train_config_path, "key = value config file");
  add_override_options(train_cmd, train_overrides);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the validation split");
  std::string eval_ckpt, eval_data, eval_manifest;
  int eval_hidden = 16, eval_blocks = 4;
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--data_dir", eval_data)->required();
  eval_cmd->add_option("--manifest", eval_manifest)->required();
  eval_cmd->add_option("--hidden_channels", eval_hidden);
  eval_cmd->add_option("--num_blocks", eval_blocks);

  // diagnose
  auto* diag_cmd = app.add_subcommand("diagnose", "Distance windows and teacher divergence reports");
  std::string diag_run;
  int diag_window = 5, diag_epoch = -1, diag_topk = 5;
  bool diag_dump_masks = false;
  diag_cmd->add_option("--run_dir", diag_run)->required();
  diag_cmd->add_option("--window", diag_window, "Window width in epochs");
  diag_cmd->add_option("--epoch", diag_epoch, "Epoch for the teacher divergence report");
  diag_cmd->add_option("--top_k", diag_topk);
  diag_cmd->add_flag("--dump-masks", diag_dump_masks, "Write example mix masks as PGM images");

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "Run several configs over seeds, report mean/std mIoU");
  std::vector<std::string> cmp_configs;
  std::vector<std::uint64_t> cmp_seeds = {1, 2, 3};
  std::string cmp_out = "compare_out";
  cmp_cmd->add_option("--config", cmp_configs, "Config files (repeatable)")->required();
  cmp_cmd->add_option("--seeds", cmp_seeds, "Seeds to run each config with");
  cmp_cmd->add_option("--out", cmp_out, "Output directory");

  try {
    app.parse(argc, argv);

    if (*gen) {
      gen_cfg.w = gen_cfg.h;
      dt::generate_dataset(gen_cfg, gen_out);
      dt::DatasetInfo info = dt::read_dataset_info(gen_out);
      auto manifest = dt::make_partition(info, gen_out, gen_fraction, gen_cfg.seed);
      dt::write_manifest(fs::path(gen_out) / "manifest.txt", manifest);
      std::cout << "wrote " << info.n_train << " train + " << info.n_val << " val samples to "
                << gen_out << " (labeled " << manifest.labeled.size() << ")\n";
    } else if (*train_cmd) {
      dt::TrainConfig cfg = resolve_config(train_config_path, train_overrides);
      dt::RunLog log = dt::train(cfg);
      std::cout << "final mIoU " << log.final_miou() << " after " << log.epochs.size()
                << " epochs; runlog at " << (fs::path(cfg.run_dir) / "runlog.csv").string() << "\n";
    } else if (*eval_cmd) {
      dt::ParamSet params = dt::load_checkpoint(eval_ckpt);
      dt::DatasetInfo info = dt::read_dataset_info(eval_data);
      auto manifest = dt::read_manifest(eval_manifest);
      dt::ModelConfig model{3, eval_hidden, eval_blocks, info.num_classes};
      auto [mean, ious] = dt::evaluate(model, params, eval_data, manifest.val);
      std::cout << "mIoU " << mean << "\n";
      for (std::size_t c = 0; c < ious.size(); ++c)
        std::cout << "class " << c << " IoU " << ious[c] << "\n";
    } else if (*diag_cmd) {
      auto report = dt::diagnose(diag_run, diag_window, diag_epoch, diag_topk);
      for (const auto& w : report.distance_windows)
        std::printf("epochs %d-%d: %.4f+-%.4f\n", w.first_epoch, w.last_epoch, w.mean, w.stddev);
      for (const auto& d : report.divergence)
        std::printf("class %d: %.4f vs %.4f (delta %.4f)\n", d.cls, d.iou_a, d.iou_b, d.delta);
      if (diag_dump_masks) {
        dt::Rng rng(1);
        dt::Tensor images({2, 3, 32, 32});
        dt::LabelMap labels(2, 32, 32);
        auto mixed = dt::cutmix(images, labels, rng);
        fs::create_directories(fs::path(diag_run) / "diagnostics");
        for (std::size_t i = 0; i < mixed.masks.size(); ++i)
          dt::write_pgm(fs::path(diag_run) / "diagnostics" / ("mask" + std::to_string(i) + ".pgm"),
                        mixed.masks[i].m.data(), mixed.masks[i].h, mixed.masks[i].w, 1);
      }
    } else if (*cmp_cmd) {
      std::vector<dt::TrainConfig> configs;
      for (const auto& p : cmp_configs) configs.push_back(dt::load_train_config(p));
      if (cmp_seeds.size() == 1) std::cerr << "warning: single seed, std reported as 0\n";
      auto rows = dt::compare(configs, cmp_seeds, cmp_out);
      for (const auto& r : rows)
        std::printf("%-24s %.4f +- %.4f (n=%zu)\n", r.label.c_str(), r.mean_miou, r.std_miou,
                    r.per_seed.size());
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
