#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dualteacher/rng.hpp"
#include "dualteacher/tensor.hpp"

namespace dt {

// Synthetic shape-segmentation data: textured background (class 0) with 1-3
// hard-edged shapes whose class decides the geometry (circle / square /
// triangle), random position, scale and color, plus additive uniform noise.
struct ShapeGenConfig {
  int h = 64, w = 64;
  int num_classes = 4;
  int samples = 256;       // training samples; validation is generated separately
  int val_samples = 64;
  int min_shapes = 2, max_shapes = 5;
  float noise = 0.06f;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Sample {
  Tensor image;   // [3,H,W] in [0,1]
  LabelMap mask;  // [1? no: n=1] class ids
};

// Renders one sample deterministically from (seed, id).
Sample render_sample(const ShapeGenConfig& config, int id, bool validation);

// Writes samples/sample_XXXXX.dtim (train ids 0..samples-1, then val ids)
// plus dataset.txt describing the layout. Fully deterministic per seed.
void generate_dataset(const ShapeGenConfig& config, const std::filesystem::path& dir);

struct DatasetInfo {
  int n_train = 0, n_val = 0;
  int h = 0, w = 0, num_classes = 0;
  std::uint64_t seed = 0;
};
DatasetInfo read_dataset_info(const std::filesystem::path& dir);

// Single-sample container: "DTIM" | u32 version | u16 H | u16 W | u8 C |
// f32 image [3*H*W] LE | u8 mask [H*W].
void save_sample(const std::filesystem::path& path, const Sample& s, int num_classes);
Sample load_sample(const std::filesystem::path& path);
std::filesystem::path sample_path(const std::filesystem::path& dir, int id);

struct PartitionManifest {
  std::string dataset;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> labeled, unlabeled, val;
};

// Uniform random labeled subset of round(fraction * n_train) ids without
// replacement; the remainder is unlabeled; val ids come from the dataset.
PartitionManifest make_partition(const DatasetInfo& info, const std::string& dataset_id,
                                 double fraction, std::uint64_t seed);

void write_manifest(const std::filesystem::path& path, const PartitionManifest& m);
PartitionManifest read_manifest(const std::filesystem::path& path);

struct Batch {
  Tensor images;    // [B,3,H,W]
  LabelMap labels;  // [B,H,W]
  std::vector<int> ids;
};

Batch load_batch(const std::filesystem::path& dir, std::span<const int> ids);

// Without-replacement epoch iteration; the final partial batch is kept.
class BatchStream {
 public:
  BatchStream(std::filesystem::path dir, std::vector<int> ids, int batch_size);

  void begin_epoch(Rng& rng);  // reshuffles
  bool next(Batch& out);       // false at end of epoch
  // Cycling access for the labeled stream: reshuffles whenever exhausted.
  Batch next_cycled(Rng& rng);

  int batches_per_epoch() const;
  const std::vector<int>& ids() const { return ids_; }

 private:
  std::filesystem::path dir_;
  std::vector<int> ids_;
  std::vector<int> order_;
  int batch_size_;
  std::size_t cursor_ = 0;
};

// Plain image dumps for eyeballing.
void write_ppm(const std::filesystem::path& path, const Tensor& image3hw);
void write_pgm(const std::filesystem::path& path, const std::uint8_t* data, int h, int w, int maxval);

}  // namespace dt
