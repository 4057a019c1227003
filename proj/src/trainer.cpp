#include "dualteacher/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "dualteacher/checkpoint.hpp"
#include "dualteacher/kernels.hpp"

namespace dt {

namespace fs = std::filesystem;

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::SupervisedOnly: return "supervised_only";
    case Mode::Single: return "single";
    case Mode::Dual: return "dual";
    case Mode::Triple: return "triple";
    case Mode::Ensemble: return "ensemble";
  }
  return "?";
}

std::optional<Mode> mode_from_name(const std::string& name) {
  if (name == "supervised_only") return Mode::SupervisedOnly;
  if (name == "single") return Mode::Single;
  if (name == "dual") return Mode::Dual;
  if (name == "triple") return Mode::Triple;
  if (name == "ensemble") return Mode::Ensemble;
  return std::nullopt;
}

int TrainConfig::teacher_count() const {
  switch (mode) {
    case Mode::SupervisedOnly: return 0;
    case Mode::Single: return 1;
    case Mode::Dual: return 2;
    case Mode::Triple: return 3;
    case Mode::Ensemble: return 2;
  }
  return 0;
}

SwitchPolicy TrainConfig::policy() const {
  return mode == Mode::Ensemble ? SwitchPolicy::Ensemble : SwitchPolicy::RoundRobin;
}

void TrainConfig::validate() const {
  if (batch_labeled < 1) throw std::invalid_argument("config: batch_labeled must be >= 1");
  if (mode != Mode::SupervisedOnly && batch_unlabeled < 1)
    throw std::invalid_argument("config: batch_unlabeled must be >= 1");
  if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (mode != Mode::SupervisedOnly && aug_pool.empty())
    throw std::invalid_argument("config: empty augmentation pool");
  for (std::size_t i = 0; i < aug_pool.size(); ++i)
    for (std::size_t j = i + 1; j < aug_pool.size(); ++j)
      if (aug_pool[i] == aug_pool[j]) throw std::invalid_argument("config: duplicate pool entry");
  if (data_dir.empty() || manifest.empty()) throw std::invalid_argument("config: data_dir and manifest required");
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<AugKind> parse_pool(const std::string& value) {
  std::vector<AugKind> pool;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto kind = aug_from_name(item);
    if (!kind) throw std::invalid_argument("config: unknown augmentation '" + item + "'");
    pool.push_back(*kind);
  }
  return pool;
}

}  // namespace

void apply_config_line(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "mode") {
    auto m = mode_from_name(value);
    if (!m) throw std::invalid_argument("config: unknown mode '" + value + "'");
    c.mode = *m;
  } else if (key == "aug_pool") c.aug_pool = parse_pool(value);
  else if (key == "epochs") c.epochs = std::stoi(value);
  else if (key == "batch_labeled") c.batch_labeled = std::stoi(value);
  else if (key == "batch_unlabeled") c.batch_unlabeled = std::stoi(value);
  else if (key == "lr") c.lr = std::stof(value);
  else if (key == "weight_decay") c.weight_decay = std::stof(value);
  else if (key == "momentum") c.momentum = std::stof(value);
  else if (key == "lambda_u") c.weights.lambda_u = std::stof(value);
  else if (key == "lambda_c") c.weights.lambda_c = std::stof(value);
  else if (key == "w_l") c.weights.w_l = std::stof(value);
  else if (key == "decay_kind") {
    if (value == "uniform") c.decay.kind = DecayRule::Kind::Uniform;
    else if (value == "linear") c.decay.kind = DecayRule::Kind::Linear;
    else throw std::invalid_argument("config: decay_kind must be uniform or linear");
  } else if (key == "decay_rate") c.decay.rate = std::stof(value);
  else if (key == "alpha_max") c.alpha_max = std::stof(value);
  else if (key == "conf_threshold") c.conf_threshold = std::stof(value);
  else if (key == "ramp_epochs") c.ramp_epochs = std::stoi(value);
  else if (key == "hidden_channels") c.hidden_channels = std::stoi(value);
  else if (key == "num_blocks") c.num_blocks = std::stoi(value);
  else if (key == "seed") c.seed = std::stoull(value);
  else if (key == "data_dir") c.data_dir = value;
  else if (key == "manifest") c.manifest = value;
  else if (key == "run_dir") c.run_dir = value;
  else if (key == "diag_batch") c.diag_batch = std::stoi(value);
  else if (key == "save_checkpoints") c.save_checkpoints = (value == "1" || value == "true");
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

TrainConfig load_train_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path.string());
  TrainConfig c;
  std::string line;
  while (std::getline(is, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config: bad line '" + line + "'");
    apply_config_line(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

void write_train_config(const fs::path& path, const TrainConfig& c) {
  std::ofstream os(path, std::ios::trunc);
  os << "mode = " << mode_name(c.mode) << "\n";
  os << "aug_pool = ";
  for (std::size_t i = 0; i < c.aug_pool.size(); ++i)
    os << (i ? "," : "") << aug_name(c.aug_pool[i]);
  os << "\n";
  os << "epochs = " << c.epochs << "\n"
     << "batch_labeled = " << c.batch_labeled << "\n"
     << "batch_unlabeled = " << c.batch_unlabeled << "\n"
     << "lr = " << c.lr << "\n"
     << "weight_decay = " << c.weight_decay << "\n"
     << "momentum = " << c.momentum << "\n"
     << "lambda_u = " << c.weights.lambda_u << "\n"
     << "lambda_c = " << c.weights.lambda_c << "\n"
     << "w_l = " << c.weights.w_l << "\n"
     << "decay_kind = " << (c.decay.kind == DecayRule::Kind::Uniform ? "uniform" : "linear") << "\n"
     << "decay_rate = " << c.decay.rate << "\n"
     << "alpha_max = " << c.alpha_max << "\n"
     << "conf_threshold = " << c.conf_threshold << "\n"
     << "ramp_epochs = " << c.ramp_epochs << "\n"
     << "hidden_channels = " << c.hidden_channels << "\n"
     << "num_blocks = " << c.num_blocks << "\n"
     << "seed = " << c.seed << "\n"
     << "data_dir = " << c.data_dir << "\n"
     << "manifest = " << c.manifest << "\n"
     << "run_dir = " << c.run_dir << "\n"
     << "diag_batch = " << c.diag_batch << "\n"
     << "save_checkpoints = " << (c.save_checkpoints ? 1 : 0) << "\n";
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void write_runlog(const fs::path& path, const RunLog& log) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("runlog: cannot open " + path.string());
  const int c = log.epochs.empty() ? 0 : static_cast<int>(log.epochs[0].class_iou.size());
  os << "epoch,l_sup,l_unsup,l_cons,miou";
  for (int k = 0; k < c; ++k) os << ",iou_class" << k;
  os << ",pred_distance,active_teacher,aug_kind\n";
  for (const auto& e : log.epochs) {
    os << e.epoch << "," << fmt(e.l_sup) << "," << fmt(e.l_unsup) << "," << fmt(e.l_cons) << ","
       << fmt(e.miou);
    for (double v : e.class_iou) os << "," << fmt(v);
    os << "," << fmt(e.pred_distance) << "," << e.active_teacher << "," << e.aug << "\n";
  }
}

RunLog read_runlog(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("runlog: cannot open " + path.string());
  std::string header;
  std::getline(is, header);
  int cols = 1;
  for (char ch : header) cols += (ch == ',');
  const int classes = cols - 8;
  RunLog log;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    EpochStats e;
    auto take = [&]() {
      std::getline(ss, cell, ',');
      return cell;
    };
    e.epoch = std::stoi(take());
    e.l_sup = std::stod(take());
    e.l_unsup = std::stod(take());
    e.l_cons = std::stod(take());
    e.miou = std::stod(take());
    for (int k = 0; k < classes; ++k) e.class_iou.push_back(std::stod(take()));
    e.pred_distance = std::stod(take());
    e.active_teacher = std::stoi(take());
    e.aug = take();
    log.epochs.push_back(std::move(e));
  }
  return log;
}

std::pair<double, std::vector<double>> evaluate(const ModelConfig& config, const ParamSet& params,
                                                const fs::path& data_dir, std::span<const int> ids) {
  if (ids.empty()) throw std::invalid_argument("evaluate: empty split");
  ConfusionMatrix cm(config.num_classes);
  constexpr int kChunk = 16;
  for (std::size_t start = 0; start < ids.size(); start += kChunk) {
    std::size_t take = std::min<std::size_t>(kChunk, ids.size() - start);
    Batch b = load_batch(data_dir, std::span<const int>(ids.data() + start, take));
    Tensor logits = infer(config, params, b.images);
    Tensor probs(logits.shape);
    kernels::softmax_nchw(logits.data.data(), probs.data.data(), logits.shape[0], logits.shape[1],
                          logits.shape[2], logits.shape[3]);
    PseudoLabels pred = labels_from_softmax(probs);
    cm.update(pred.labels, b.labels);
  }
  auto [ious, mean] = miou(cm);
  return {mean, ious};
}

namespace {

struct StepLosses {
  double sup = 0.0, unsup = 0.0, cons = 0.0, total = 0.0;
};

struct TrainState {
  TrainConfig cfg;
  ModelConfig model;
  ParamSet student;
  std::unique_ptr<TeacherBank> bank;
  std::vector<std::vector<float>> velocity;
  // Independent streams so the supervised-only path consumes exactly the
  // same labeled-side draws as a semi-supervised run with zero weights.
  Rng rng_labeled_order, rng_labeled_aug, rng_unlabeled_order, rng_unlabeled_aug;
  Rng rng_pool, rng_mix, rng_depth;

  explicit TrainState(const TrainConfig& c)
      : cfg(c),
        rng_labeled_order(mix_seed(c.seed, 101)),
        rng_labeled_aug(mix_seed(c.seed, 102)),
        rng_unlabeled_order(mix_seed(c.seed, 103)),
        rng_unlabeled_aug(mix_seed(c.seed, 104)),
        rng_pool(mix_seed(c.seed, 105)),
        rng_mix(mix_seed(c.seed, 106)),
        rng_depth(mix_seed(c.seed, 107)) {}
};

void dump_nan_state(const fs::path& run_dir, const TrainState& st, int epoch, int step,
                    const StepLosses& losses) {
  std::error_code ec;
  fs::create_directories(run_dir / "diagnostics", ec);
  std::ofstream os(run_dir / "diagnostics" / "nan_dump.txt", std::ios::trunc);
  os << "non-finite loss at epoch " << epoch << " step " << step << "\n"
     << "l_sup=" << losses.sup << " l_unsup=" << losses.unsup << " l_cons=" << losses.cons << "\n";
  save_checkpoint(run_dir / "diagnostics" / "nan_student.dtck", st.student);
}

StepLosses semi_train_step(TrainState& st, int epoch, AugKind aug, BatchStream& labeled,
                           BatchStream& unlabeled) {
  const TrainConfig& cfg = st.cfg;
  Batch u;
  if (!unlabeled.next(u)) throw std::logic_error("train: unlabeled stream exhausted early");

  // (1) weak view of the unlabeled batch
  weak_augment(u.images, st.rng_unlabeled_aug);
  // (2) active teacher pseudo-labels the weak view
  PseudoLabels pl = st.bank->pseudo_label(u.images, epoch);
  if (cfg.conf_threshold > 0.0f) {
    for (std::size_t i = 0; i < pl.labels.data.size(); ++i)
      if (pl.confidence.data[i] < cfg.conf_threshold)
        pl.labels.data[i] = static_cast<std::uint8_t>(kIgnoreLabel);
  }
  // (3) strong mixing applied jointly to images and pseudo-labels
  MixedBatch mixed;
  switch (aug) {
    case AugKind::CutMix: mixed = cutmix(u.images, pl.labels, st.rng_mix); break;
    case AugKind::ClassMix: mixed = classmix(u.images, pl.labels, st.rng_mix); break;
    case AugKind::MixUp:
      mixed = mixup(u.images, one_hot(pl.labels, st.model.num_classes), st.rng_mix);
      break;
  }
  // (5-input) labeled weak view
  Batch l = labeled.next_cycled(st.rng_labeled_order);
  weak_augment(l.images, l.labels, st.rng_labeled_aug);
  // (6-input) sub-model depth mask
  DepthMask dm = sample_depth_mask(cfg.decay, st.model.num_blocks, st.rng_depth);

  // Confidence filtering can leave a batch with no usable pseudo-labels;
  // those terms drop out of the step instead of erroring.
  bool any_unsup;
  if (mixed.soft) {
    any_unsup = false;
    for (float v : mixed.soft_labels.data)
      if (v > 0.0f) {
        any_unsup = true;
        break;
      }
  } else {
    any_unsup = std::any_of(mixed.hard_labels.data.begin(), mixed.hard_labels.data.end(),
                            [](std::uint8_t v) { return v != kIgnoreLabel; });
  }
  const bool any_cons = std::any_of(pl.labels.data.begin(), pl.labels.data.end(),
                                    [](std::uint8_t v) { return v != kIgnoreLabel; });

  Tape tape;
  auto ids = params_on_tape(tape, st.student);
  const DepthMask full = DepthMask::all_keep(st.model.num_blocks);
  // (4) student on the strong view
  Tape::NodeId l_unsup = -1;
  if (any_unsup) {
    Tape::NodeId logits_u = model_forward(tape, st.model, ids, tape.leaf(mixed.images), full);
    l_unsup = mixed.soft ? unsup_loss_soft(tape, logits_u, mixed.soft_labels)
                         : unsup_loss(tape, logits_u, mixed.hard_labels);
  }
  // (5) student on the labeled weak view
  Tape::NodeId logits_l = model_forward(tape, st.model, ids, tape.leaf(l.images), full);
  Tape::NodeId l_sup = sup_loss(tape, logits_l, l.labels);
  // (6) sub-model on the same unlabeled weak view, teacher labels as targets
  Tape::NodeId l_cons = -1;
  if (any_cons) {
    Tape::NodeId logits_c = model_forward(tape, st.model, ids, tape.leaf(u.images), dm);
    l_cons = cons_loss(tape, logits_c, pl.labels);
  }

  // Unsupervised terms warm up linearly while the teachers are still poor.
  LossWeights eff = cfg.weights;
  if (cfg.ramp_epochs > 0) {
    const float ramp = std::min(1.0f, static_cast<float>(epoch + 1) / cfg.ramp_epochs);
    eff.lambda_u *= ramp;
    eff.lambda_c *= ramp;
  }
  Tape::NodeId total = total_loss(tape, l_sup, l_unsup, l_cons, eff);
  StepLosses out{tape.scalar(l_sup), l_unsup >= 0 ? tape.scalar(l_unsup) : 0.0,
                 l_cons >= 0 ? tape.scalar(l_cons) : 0.0, tape.scalar(total)};
  if (!std::isfinite(out.total)) {
    dump_nan_state(cfg.run_dir, st, epoch, -1, out);
    throw std::runtime_error("train: non-finite loss, state dumped");
  }
  // (7) one backward and SGD step on the combined objective
  st.student.zero_grads();
  tape.backward(total);
  accumulate_grads(tape, ids, st.student);
  sgd_step(st.student, cfg.lr, cfg.weight_decay, cfg.momentum, &st.velocity);
  // (8) EMA update of the epoch's teacher only. The ensemble baseline still
  // alternates which teacher is anchored so the pair stays distinct; only
  // the pseudo-labeling side averages them.
  st.bank->update(st.bank->active_teacher(epoch), st.student);
  return out;
}

StepLosses supervised_train_step(TrainState& st, BatchStream& labeled) {
  const TrainConfig& cfg = st.cfg;
  Batch l = labeled.next_cycled(st.rng_labeled_order);
  weak_augment(l.images, l.labels, st.rng_labeled_aug);

  Tape tape;
  auto ids = params_on_tape(tape, st.student);
  Tape::NodeId logits = model_forward(tape, st.model, ids, tape.leaf(l.images),
                                      DepthMask::all_keep(st.model.num_blocks));
  Tape::NodeId l_sup = sup_loss(tape, logits, l.labels);
  Tape::NodeId total = total_loss(tape, l_sup, -1, -1, cfg.weights);
  StepLosses out{tape.scalar(l_sup), 0.0, 0.0, tape.scalar(total)};
  if (!std::isfinite(out.total)) {
    dump_nan_state(cfg.run_dir, st, -1, -1, out);
    throw std::runtime_error("train: non-finite loss, state dumped");
  }
  st.student.zero_grads();
  tape.backward(total);
  accumulate_grads(tape, ids, st.student);
  sgd_step(st.student, cfg.lr, cfg.weight_decay, cfg.momentum, &st.velocity);
  return out;
}

}  // namespace

RunLog train(const TrainConfig& config) {
  config.validate();
  const fs::path data_dir = config.data_dir;
  const fs::path run_dir = config.run_dir;
  DatasetInfo info = read_dataset_info(data_dir);
  PartitionManifest manifest = read_manifest(config.manifest);
  if (manifest.labeled.empty()) throw std::runtime_error("train: manifest has no labeled ids");

  std::error_code ec;
  fs::create_directories(run_dir / "checkpoints", ec);
  fs::create_directories(run_dir / "diagnostics", ec);

  TrainState st(config);
  st.model = ModelConfig{3, config.hidden_channels, config.num_blocks, info.num_classes};
  st.model.validate();
  st.student = init_model(st.model, config.seed);
  const bool semi = config.mode != Mode::SupervisedOnly;
  if (semi)
    st.bank = std::make_unique<TeacherBank>(st.model, st.student, config.teacher_count(),
                                            config.policy(), config.alpha_max);
  write_train_config(run_dir / "config.txt", config);

  BatchStream labeled(data_dir, manifest.labeled, config.batch_labeled);
  // The unlabeled stream sets the epoch length in every mode so runs stay
  // step-for-step comparable; it falls back to the labeled ids when the
  // partition has no unlabeled samples (fraction = 1).
  std::vector<int> pace_ids = manifest.unlabeled.empty() ? manifest.labeled : manifest.unlabeled;
  BatchStream unlabeled(data_dir, pace_ids, config.batch_unlabeled);
  const int steps_per_epoch = unlabeled.batches_per_epoch();

  // Fixed held-out diagnostic batch for the prediction-distance series.
  std::vector<int> diag_ids(manifest.val.begin(),
                            manifest.val.begin() +
                                std::min<std::size_t>(config.diag_batch, manifest.val.size()));
  Batch diag;
  if (!diag_ids.empty()) diag = load_batch(data_dir, diag_ids);

  RunLog log;
  std::optional<AugKind> prev_aug;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochStats es;
    es.epoch = epoch;
    AugKind aug = AugKind::CutMix;
    if (semi) {
      aug = sample_epoch_aug(config.aug_pool, prev_aug, st.rng_pool);
      prev_aug = aug;
      es.aug = aug_name(aug);
      es.active_teacher =
          st.bank->policy() == SwitchPolicy::Ensemble ? -1 : st.bank->active_teacher(epoch);
    }
    unlabeled.begin_epoch(st.rng_unlabeled_order);

    double sum_sup = 0.0, sum_unsup = 0.0, sum_cons = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      StepLosses losses =
          semi ? semi_train_step(st, epoch, aug, labeled, unlabeled) : supervised_train_step(st, labeled);
      sum_sup += losses.sup;
      sum_unsup += losses.unsup;
      sum_cons += losses.cons;
    }
    es.l_sup = sum_sup / steps_per_epoch;
    es.l_unsup = sum_unsup / steps_per_epoch;
    es.l_cons = sum_cons / steps_per_epoch;

    auto [mean, ious] = evaluate(st.model, st.student, data_dir, manifest.val);
    es.miou = mean;
    es.class_iou = ious;

    if (semi && !diag_ids.empty()) {
      const int k = st.bank->policy() == SwitchPolicy::Ensemble ? 0 : st.bank->active_teacher(epoch);
      Tensor t_logits = infer(st.model, st.bank->teacher(k), diag.images);
      Tensor s_logits = infer(st.model, st.student, diag.images);
      Tensor t_probs(t_logits.shape), s_probs(s_logits.shape);
      kernels::softmax_nchw(t_logits.data.data(), t_probs.data.data(), t_logits.shape[0],
                            t_logits.shape[1], t_logits.shape[2], t_logits.shape[3]);
      kernels::softmax_nchw(s_logits.data.data(), s_probs.data.data(), s_logits.shape[0],
                            s_logits.shape[1], s_logits.shape[2], s_logits.shape[3]);
      es.pred_distance = prediction_distance(t_probs, s_probs);
    }

    if (config.save_checkpoints) {
      char name[64];
      std::snprintf(name, sizeof(name), "epoch_%03d_student.dtck", epoch);
      save_checkpoint(run_dir / "checkpoints" / name, st.student);
      if (semi)
        for (int k = 0; k < st.bank->count(); ++k) {
          std::snprintf(name, sizeof(name), "epoch_%03d_teacher%d.dtck", epoch, k);
          save_checkpoint(run_dir / "checkpoints" / name, st.bank->teacher(k));
        }
    }
    log.epochs.push_back(std::move(es));
  }

  write_runlog(run_dir / "runlog.csv", log);
  return log;
}

DiagnoseReport diagnose(const fs::path& run_dir, int window_width, int divergence_epoch, int top_k) {
  RunLog log = read_runlog(run_dir / "runlog.csv");
  if (log.epochs.empty()) throw std::runtime_error("diagnose: empty runlog");
  TrainConfig cfg = load_train_config(run_dir / "config.txt");

  DiagnoseReport report;
  std::vector<double> distances;
  for (const auto& e : log.epochs) distances.push_back(e.pred_distance);
  report.distance_windows = windowed_stats(distances, window_width);

  std::error_code ec;
  fs::create_directories(run_dir / "diagnostics", ec);
  {
    std::ofstream os(run_dir / "diagnostics" / "distance_windows.csv", std::ios::trunc);
    os << "first_epoch,last_epoch,avg,std\n";
    for (const auto& ws : report.distance_windows)
      os << ws.first_epoch << "," << ws.last_epoch << "," << fmt(ws.mean) << "," << fmt(ws.stddev)
         << "\n";
  }

  if (cfg.teacher_count() >= 2) {
    const int epoch = divergence_epoch >= 0 ? divergence_epoch
                                            : static_cast<int>(log.epochs.size()) - 1;
    DatasetInfo info = read_dataset_info(cfg.data_dir);
    PartitionManifest manifest = read_manifest(cfg.manifest);
    ModelConfig model{3, cfg.hidden_channels, cfg.num_blocks, info.num_classes};
    char name[64];
    std::snprintf(name, sizeof(name), "epoch_%03d_teacher0.dtck", epoch);
    ParamSet ta = load_checkpoint(run_dir / "checkpoints" / name);
    std::snprintf(name, sizeof(name), "epoch_%03d_teacher1.dtck", epoch);
    ParamSet tb = load_checkpoint(run_dir / "checkpoints" / name);
    auto eval_a = evaluate(model, ta, cfg.data_dir, manifest.val);
    auto eval_b = evaluate(model, tb, cfg.data_dir, manifest.val);
    report.divergence = class_iou_divergence(eval_a.second, eval_b.second, top_k);
    std::ofstream os(run_dir / "diagnostics" / "teacher_divergence.csv", std::ios::trunc);
    os << "class,iou_teacher0,iou_teacher1,delta\n";
    for (const auto& d : report.divergence)
      os << d.cls << "," << fmt(d.iou_a) << "," << fmt(d.iou_b) << "," << fmt(d.delta) << "\n";
  }
  return report;
}

std::vector<CompareRow> compare(std::span<const TrainConfig> configs,
                                std::span<const std::uint64_t> seeds, const fs::path& out_dir) {
  if (configs.size() < 2) throw std::invalid_argument("compare: need at least 2 configs");
  if (seeds.empty()) throw std::invalid_argument("compare: need at least 1 seed");
  for (std::size_t i = 1; i < configs.size(); ++i)
    if (configs[i].data_dir != configs[0].data_dir || configs[i].manifest != configs[0].manifest)
      throw std::invalid_argument("compare: configs must share dataset and manifest");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::vector<CompareRow> rows;
  for (const TrainConfig& base : configs) {
    CompareRow row;
    row.label = mode_name(base.mode) + "_aug" + std::to_string(base.aug_pool.size());
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      cfg.run_dir = (out_dir / (row.label + "_seed" + std::to_string(seed))).string();
      RunLog log = train(cfg);
      row.per_seed.push_back(log.final_miou());
    }
    double mean = 0.0;
    for (double v : row.per_seed) mean += v;
    mean /= static_cast<double>(row.per_seed.size());
    double var = 0.0;
    for (double v : row.per_seed) var += (v - mean) * (v - mean);
    row.mean_miou = mean;
    row.std_miou = row.per_seed.size() > 1 ? std::sqrt(var / row.per_seed.size()) : 0.0;
    rows.push_back(std::move(row));
  }
  std::ofstream os(out_dir / "compare.csv", std::ios::trunc);
  os << "label,mean_miou,std_miou,seeds\n";
  for (const auto& r : rows)
    os << r.label << "," << fmt(r.mean_miou) << "," << fmt(r.std_miou) << "," << r.per_seed.size()
       << "\n";
  return rows;
}

}  // namespace dt
