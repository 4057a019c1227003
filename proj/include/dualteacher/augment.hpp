#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualteacher/rng.hpp"
#include "dualteacher/tensor.hpp"

namespace dt {

enum class AugKind { CutMix, ClassMix, MixUp };

std::string aug_name(AugKind kind);
std::optional<AugKind> aug_from_name(const std::string& name);

// Uniform draw over pool \ {prev}; uniform over the pool when prev is absent.
// Throws when the no-repeat constraint is unsatisfiable (|pool| == 1 with prev set).
AugKind sample_epoch_aug(std::span<const AugKind> pool, std::optional<AugKind> prev, Rng& rng);

// Per-image weak transform: horizontal flip (p = 0.5) plus a shift of up to
// 4 pixels per axis. Zero fill for images, ignore_label fill for labels.
struct WeakAug {
  bool flip = false;
  int dx = 0, dy = 0;
};
WeakAug sample_weak_aug(Rng& rng);
void apply_weak_aug(const WeakAug& a, Tensor& images, int index);
void apply_weak_aug(const WeakAug& a, LabelMap& labels, int index);

// Applies an independently sampled WeakAug to every image (and its label).
void weak_augment(Tensor& images, Rng& rng);
void weak_augment(Tensor& images, LabelMap& labels, Rng& rng);

// Binary mix mask; 1 = take the pixel from the donor image.
struct MixMask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> m;

  std::uint8_t at(int y, int x) const { return m[static_cast<std::size_t>(y) * w + x]; }
  std::int64_t sum() const;
};

struct MixedBatch {
  Tensor images;            // [N,3,H,W]
  LabelMap hard_labels;     // CutMix / ClassMix
  Tensor soft_labels;       // [N,C,H,W], MixUp only
  bool soft = false;
  std::vector<MixMask> masks;    // per image; empty for MixUp
  std::vector<int> donors;       // donor index per image
  std::vector<float> lambdas;    // area / mix weight per image
};

// Intra-batch pairing: a sampled permutation with fixed points re-rolled once;
// a surviving fixed point pairs with the next index cyclically.
std::vector<int> mix_pairing(int n, Rng& rng);

// Rectangle mix. lambda_area ~ U(0,1); box sides floor(sqrt(1 - lambda) * dim),
// positioned uniformly fully inside the image.
MixedBatch cutmix(const Tensor& images, const LabelMap& labels, Rng& rng);

// Class-level mix: ceil(k/2) of the donor's k present classes, mask = their pixels.
MixedBatch classmix(const Tensor& images, const LabelMap& labels, Rng& rng);

// Convex mix of images and soft label maps with lambda ~ U(0,1) per image.
MixedBatch mixup(const Tensor& images, const Tensor& soft_labels, Rng& rng);

// One-hot expansion of a hard label map into [N,C,H,W].
Tensor one_hot(const LabelMap& labels, int num_classes);

}  // namespace dt
