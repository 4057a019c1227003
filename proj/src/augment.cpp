#include "dualteacher/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dt {

std::string aug_name(AugKind kind) {
  switch (kind) {
    case AugKind::CutMix: return "cutmix";
    case AugKind::ClassMix: return "classmix";
    case AugKind::MixUp: return "mixup";
  }
  return "?";
}

std::optional<AugKind> aug_from_name(const std::string& name) {
  if (name == "cutmix") return AugKind::CutMix;
  if (name == "classmix") return AugKind::ClassMix;
  if (name == "mixup") return AugKind::MixUp;
  return std::nullopt;
}

AugKind sample_epoch_aug(std::span<const AugKind> pool, std::optional<AugKind> prev, Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("sample_epoch_aug: empty pool");
  std::vector<AugKind> choices;
  for (AugKind k : pool)
    if (!prev || k != *prev) choices.push_back(k);
  if (choices.empty())
    throw std::runtime_error("sample_epoch_aug: no-repeat constraint unsatisfiable with pool of 1");
  return choices[rng.uniform_int(choices.size())];
}

WeakAug sample_weak_aug(Rng& rng) {
  WeakAug a;
  a.flip = rng.bernoulli(0.5);
  a.dx = static_cast<int>(rng.uniform_int(9)) - 4;
  a.dy = static_cast<int>(rng.uniform_int(9)) - 4;
  return a;
}

void apply_weak_aug(const WeakAug& a, Tensor& images, int index) {
  const int c = images.shape[1], h = images.shape[2], w = images.shape[3];
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  std::vector<float> src(plane);
  for (int ch = 0; ch < c; ++ch) {
    float* p = images.data.data() + (static_cast<std::int64_t>(index) * c + ch) * plane;
    std::copy(p, p + plane, src.begin());
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int sx = (a.flip ? (w - 1 - x) : x) - a.dx;
        int sy = y - a.dy;
        p[static_cast<std::int64_t>(y) * w + x] =
            (sy >= 0 && sy < h && sx >= 0 && sx < w) ? src[static_cast<std::int64_t>(sy) * w + sx]
                                                     : 0.0f;
      }
  }
}

void apply_weak_aug(const WeakAug& a, LabelMap& labels, int index) {
  const int h = labels.h, w = labels.w;
  std::vector<std::uint8_t> src(static_cast<std::size_t>(h) * w);
  std::uint8_t* p = labels.data.data() + static_cast<std::size_t>(index) * h * w;
  std::copy(p, p + src.size(), src.begin());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int sx = (a.flip ? (w - 1 - x) : x) - a.dx;
      int sy = y - a.dy;
      p[static_cast<std::size_t>(y) * w + x] =
          (sy >= 0 && sy < h && sx >= 0 && sx < w)
              ? src[static_cast<std::size_t>(sy) * w + sx]
              : static_cast<std::uint8_t>(kIgnoreLabel);
    }
}

void weak_augment(Tensor& images, Rng& rng) {
  for (int i = 0; i < images.shape[0]; ++i) apply_weak_aug(sample_weak_aug(rng), images, i);
}

void weak_augment(Tensor& images, LabelMap& labels, Rng& rng) {
  if (images.shape[0] != labels.n) throw std::invalid_argument("weak_augment: batch mismatch");
  for (int i = 0; i < images.shape[0]; ++i) {
    WeakAug a = sample_weak_aug(rng);
    apply_weak_aug(a, images, i);
    apply_weak_aug(a, labels, i);
  }
}

std::int64_t MixMask::sum() const {
  std::int64_t s = 0;
  for (std::uint8_t v : m) s += v;
  return s;
}

std::vector<int> mix_pairing(int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("mix_pairing: batch size must be >= 2");
  auto shuffle = [&rng, n]() {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(p[i], p[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);
    return p;
  };
  std::vector<int> perm = shuffle();
  bool has_fixed = false;
  for (int i = 0; i < n; ++i) has_fixed |= (perm[i] == i);
  if (has_fixed) perm = shuffle();  // one re-roll
  for (int i = 0; i < n; ++i)
    if (perm[i] == i) perm[i] = (i + 1) % n;  // surviving fixed points pair cyclically
  return perm;
}

namespace {
void paste_masked(Tensor& images, LabelMap& labels, const Tensor& src_images,
                  const LabelMap& src_labels, int dst, int donor, const MixMask& mask) {
  const int c = images.shape[1], h = images.shape[2], w = images.shape[3];
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(y, x)) continue;
      const std::int64_t off = static_cast<std::int64_t>(y) * w + x;
      for (int ch = 0; ch < c; ++ch)
        images.data[(static_cast<std::int64_t>(dst) * c + ch) * plane + off] =
            src_images.data[(static_cast<std::int64_t>(donor) * c + ch) * plane + off];
      labels.at(dst, y, x) = src_labels.at(donor, y, x);
    }
}
}  // namespace

MixedBatch cutmix(const Tensor& images, const LabelMap& labels, Rng& rng) {
  const int n = images.shape[0], h = images.shape[2], w = images.shape[3];
  if (n < 2) throw std::invalid_argument("cutmix: batch size must be >= 2");
  MixedBatch out;
  out.images = images;
  out.hard_labels = labels;
  out.donors = mix_pairing(n, rng);
  for (int i = 0; i < n; ++i) {
    double lambda = rng.uniform();
    double ratio = std::sqrt(1.0 - lambda);
    int bh = static_cast<int>(std::floor(ratio * h));
    int bw = static_cast<int>(std::floor(ratio * w));
    MixMask mask;
    mask.h = h;
    mask.w = w;
    mask.m.assign(static_cast<std::size_t>(h) * w, 0);
    if (bh > 0 && bw > 0) {
      int top = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(h - bh) + 1));
      int left = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(w - bw) + 1));
      for (int y = top; y < top + bh; ++y)
        std::fill_n(mask.m.begin() + static_cast<std::size_t>(y) * w + left, bw, std::uint8_t{1});
    }
    paste_masked(out.images, out.hard_labels, images, labels, i, out.donors[i], mask);
    out.masks.push_back(std::move(mask));
    out.lambdas.push_back(static_cast<float>(lambda));
  }
  return out;
}

MixedBatch classmix(const Tensor& images, const LabelMap& labels, Rng& rng) {
  const int n = images.shape[0], h = images.shape[2], w = images.shape[3];
  if (n < 2) throw std::invalid_argument("classmix: batch size must be >= 2");
  MixedBatch out;
  out.images = images;
  out.hard_labels = labels;
  out.donors = mix_pairing(n, rng);
  for (int i = 0; i < n; ++i) {
    const int donor = out.donors[i];
    bool present[256] = {};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) present[labels.at(donor, y, x)] = true;
    std::vector<int> classes;
    for (int c = 0; c < 256; ++c)
      if (present[c]) classes.push_back(c);
    const std::size_t take = (classes.size() + 1) / 2;
    // uniform without replacement
    for (std::size_t j = 0; j < take; ++j)
      std::swap(classes[j], classes[j + rng.uniform_int(classes.size() - j)]);
    bool selected[256] = {};
    for (std::size_t j = 0; j < take; ++j) selected[classes[j]] = true;

    MixMask mask;
    mask.h = h;
    mask.w = w;
    mask.m.assign(static_cast<std::size_t>(h) * w, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        mask.m[static_cast<std::size_t>(y) * w + x] = selected[labels.at(donor, y, x)] ? 1 : 0;
    paste_masked(out.images, out.hard_labels, images, labels, i, donor, mask);
    out.masks.push_back(std::move(mask));
    out.lambdas.push_back(0.0f);
  }
  return out;
}

MixedBatch mixup(const Tensor& images, const Tensor& soft_labels, Rng& rng) {
  const int n = images.shape[0];
  if (n < 2) throw std::invalid_argument("mixup: batch size must be >= 2");
  if (soft_labels.shape[0] != n) throw std::invalid_argument("mixup: label batch mismatch");
  MixedBatch out;
  out.soft = true;
  out.images = images;
  out.soft_labels = soft_labels;
  out.donors = mix_pairing(n, rng);
  const std::int64_t img_stride = images.size() / n;
  const std::int64_t lbl_stride = soft_labels.size() / n;
  for (int i = 0; i < n; ++i) {
    const float lambda = static_cast<float>(rng.uniform());
    const int d = out.donors[i];
    for (std::int64_t j = 0; j < img_stride; ++j)
      out.images.data[i * img_stride + j] =
          lambda * images.data[i * img_stride + j] + (1.0f - lambda) * images.data[d * img_stride + j];
    for (std::int64_t j = 0; j < lbl_stride; ++j)
      out.soft_labels.data[i * lbl_stride + j] = lambda * soft_labels.data[i * lbl_stride + j] +
                                                 (1.0f - lambda) * soft_labels.data[d * lbl_stride + j];
    out.lambdas.push_back(lambda);
  }
  return out;
}

Tensor one_hot(const LabelMap& labels, int num_classes) {
  Tensor t({labels.n, num_classes, labels.h, labels.w});
  const std::int64_t plane = static_cast<std::int64_t>(labels.h) * labels.w;
  for (int i = 0; i < labels.n; ++i)
    for (std::int64_t p = 0; p < plane; ++p) {
      std::uint8_t c = labels.data[i * plane + p];
      if (c < num_classes) t.data[(static_cast<std::int64_t>(i) * num_classes + c) * plane + p] = 1.0f;
    }
  return t;
}

}  // namespace dt
