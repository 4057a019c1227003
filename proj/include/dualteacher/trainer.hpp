#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dualteacher/augment.hpp"
#include "dualteacher/data.hpp"
#include "dualteacher/objectives.hpp"
#include "dualteacher/seg_model.hpp"
#include "dualteacher/teacher_bank.hpp"

namespace dt {

enum class Mode { SupervisedOnly, Single, Dual, Triple, Ensemble };

std::string mode_name(Mode m);
std::optional<Mode> mode_from_name(const std::string& name);

struct TrainConfig {
  Mode mode = Mode::Dual;
  std::vector<AugKind> aug_pool = {AugKind::CutMix, AugKind::ClassMix};
  int epochs = 30;
  int batch_labeled = 4;
  int batch_unlabeled = 4;
  float lr = 0.01f;
  float weight_decay = 1e-4f;
  float momentum = 0.9f;
  LossWeights weights;
  DecayRule decay{DecayRule::Kind::Uniform, 0.1f};
  float alpha_max = 0.99f;
  float conf_threshold = 0.6f;  // 0 disables pseudo-label filtering
  int ramp_epochs = 10;         // linear warm-up of lambda_u / lambda_c; 0 disables
  int hidden_channels = 16;
  int num_blocks = 4;
  std::uint64_t seed = 1;
  std::string data_dir;
  std::string manifest;
  std::string run_dir;
  int diag_batch = 64;
  bool save_checkpoints = true;

  int teacher_count() const;  // 0 for supervised-only
  SwitchPolicy policy() const;
  void validate() const;
};

// Line-oriented `key = value` config files; unknown keys are an error.
TrainConfig load_train_config(const std::filesystem::path& path);
void apply_config_line(TrainConfig& config, const std::string& key, const std::string& value);
void write_train_config(const std::filesystem::path& path, const TrainConfig& config);

struct EpochStats {
  int epoch = 0;
  double l_sup = 0.0, l_unsup = 0.0, l_cons = 0.0;
  double miou = 0.0;
  std::vector<double> class_iou;
  double pred_distance = 0.0;
  int active_teacher = -1;
  std::string aug = "none";
};

struct RunLog {
  std::vector<EpochStats> epochs;
  double final_miou() const { return epochs.empty() ? 0.0 : epochs.back().miou; }
};

void write_runlog(const std::filesystem::path& path, const RunLog& log);
RunLog read_runlog(const std::filesystem::path& path);

// Runs the full epoch loop: per-epoch strong-augmentation draw (no repeat),
// active teacher = epoch mod t_n, one pass over the unlabeled stream with the
// labeled stream cycled, validation, logging and checkpointing.
RunLog train(const TrainConfig& config);

// Full-image single-scale evaluation over the given ids.
std::pair<double, std::vector<double>> evaluate(const ModelConfig& config, const ParamSet& params,
                                                const std::filesystem::path& data_dir,
                                                std::span<const int> ids);

// Post-hoc reports from a finished run directory: windowed prediction-distance
// stats and the class-wise IoU divergence between teacher checkpoints.
struct DiagnoseReport {
  std::vector<WindowStat> distance_windows;
  std::vector<ClassDivergence> divergence;  // empty when < 2 teachers
};
DiagnoseReport diagnose(const std::filesystem::path& run_dir, int window_width = 5,
                        int divergence_epoch = -1, int top_k = 5);

struct CompareRow {
  std::string label;
  double mean_miou = 0.0, std_miou = 0.0;
  std::vector<double> per_seed;
};

// Runs each config across the given seeds and reports mean +- std final mIoU.
std::vector<CompareRow> compare(std::span<const TrainConfig> configs,
                                std::span<const std::uint64_t> seeds,
                                const std::filesystem::path& out_dir);

}  // namespace dt
