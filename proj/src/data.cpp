#include "dualteacher/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dt {

namespace fs = std::filesystem;

void ShapeGenConfig::validate() const {
  if (h < 16 || w < 16) throw std::invalid_argument("ShapeGenConfig: H, W must be >= 16");
  if (num_classes < 2 || num_classes > 254)
    throw std::invalid_argument("ShapeGenConfig: num_classes out of range");
  if (samples < 2) throw std::invalid_argument("ShapeGenConfig: need at least 2 samples");
  if (min_shapes < 0 || max_shapes < min_shapes)
    throw std::invalid_argument("ShapeGenConfig: bad shape count range");
}

namespace {

void render_background(Tensor& img, int h, int w, Rng& rng) {
  // Smooth two-tone gradient with a random orientation.
  float base[3], slope[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.25f + 0.5f * static_cast<float>(rng.uniform());
    slope[c] = 0.3f * static_cast<float>(rng.uniform() * 2.0 - 1.0);
  }
  double ang = rng.uniform() * 2.0 * 3.14159265358979;
  float cx = static_cast<float>(std::cos(ang)), sy = static_cast<float>(std::sin(ang));
  for (int c = 0; c < 3; ++c) {
    float* p = img.data.data() + static_cast<std::int64_t>(c) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float t = (cx * x / w + sy * y / h);
        p[static_cast<std::int64_t>(y) * w + x] = base[c] + slope[c] * t;
      }
  }
}

enum class ShapeGeom { Circle, Square, Triangle };

bool inside(ShapeGeom g, int y, int x, int cy, int cx, int r) {
  switch (g) {
    case ShapeGeom::Circle: {
      int dy = y - cy, dx = x - cx;
      return dy * dy + dx * dx <= r * r;
    }
    case ShapeGeom::Square:
      return std::abs(y - cy) <= r && std::abs(x - cx) <= r;
    case ShapeGeom::Triangle:
      // apex up: vertices (cx, cy-r), (cx-r, cy+r), (cx+r, cy+r)
      return y >= cy - r && y <= cy + r && std::abs(x - cx) * 2 <= (y - cy + r);
  }
  return false;
}

}  // namespace

Sample render_sample(const ShapeGenConfig& config, int id, bool validation) {
  config.validate();
  const int h = config.h, w = config.w;
  std::uint64_t stream = validation ? mix_seed(config.seed, 0x76616cULL) : config.seed;
  Rng rng(mix_seed(stream, 0x1000000ULL + static_cast<std::uint64_t>(id)));

  Sample s;
  s.image = Tensor({3, h, w});
  s.mask = LabelMap(1, h, w);
  render_background(s.image, h, w, rng);

  const int span = config.max_shapes - config.min_shapes + 1;
  const int count = config.min_shapes + static_cast<int>(rng.uniform_int(span));
  // Radii stay small relative to the toy net's receptive field so the class
  // geometry is visible to every shape pixel.
  const int rmin = std::max(3, h / 8), rmax = std::max(rmin + 1, h / 6);
  for (int sidx = 0; sidx < count; ++sidx) {
    int cls = 1 + static_cast<int>(rng.uniform_int(config.num_classes - 1));
    ShapeGeom geom = static_cast<ShapeGeom>((cls - 1) % 3);
    int r = rmin + static_cast<int>(rng.uniform_int(rmax - rmin + 1));
    int cy = r + static_cast<int>(rng.uniform_int(std::max(1, h - 2 * r)));
    int cx = r + static_cast<int>(rng.uniform_int(std::max(1, w - 2 * r)));
    // Class-tinted color with heavy jitter: the tint makes the class
    // learnable by a small net while the jitter keeps a few labeled examples
    // from covering the full color range of a class.
    static const float kTint[3][3] = {{0.9f, 0.15f, 0.15f}, {0.15f, 0.9f, 0.15f},
                                      {0.15f, 0.15f, 0.9f}};
    const float* tint = kTint[(cls - 1) % 3];
    float mixw = 0.3f + 0.25f * static_cast<float>(rng.uniform());
    float color[3];
    for (int c = 0; c < 3; ++c)
      color[c] = mixw * tint[c] + (1.0f - mixw) * static_cast<float>(rng.uniform());
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
      for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x) {
        if (!inside(geom, y, x, cy, cx, r)) continue;
        for (int c = 0; c < 3; ++c)
          s.image.data[(static_cast<std::int64_t>(c) * h + y) * w + x] = color[c];
        s.mask.at(0, y, x) = static_cast<std::uint8_t>(cls);
      }
  }

  for (float& v : s.image.data) {
    v += config.noise * static_cast<float>(rng.uniform() * 2.0 - 1.0);
    v = std::clamp(v, 0.0f, 1.0f);
  }
  return s;
}

std::filesystem::path sample_path(const fs::path& dir, int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%05d.dtim", id);
  return dir / buf;
}

namespace {
template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("dtim: truncated file");
  return v;
}
constexpr std::uint32_t kDtimVersion = 1;
}  // namespace

void save_sample(const fs::path& path, const Sample& s, int num_classes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("dtim: cannot open " + path.string());
  os.write("DTIM", 4);
  write_raw<std::uint32_t>(os, kDtimVersion);
  write_raw<std::uint16_t>(os, static_cast<std::uint16_t>(s.mask.h));
  write_raw<std::uint16_t>(os, static_cast<std::uint16_t>(s.mask.w));
  write_raw<std::uint8_t>(os, static_cast<std::uint8_t>(num_classes));
  os.write(reinterpret_cast<const char*>(s.image.data.data()),
           static_cast<std::streamsize>(s.image.data.size() * sizeof(float)));
  os.write(reinterpret_cast<const char*>(s.mask.data.data()),
           static_cast<std::streamsize>(s.mask.data.size()));
  if (!os) throw std::runtime_error("dtim: write failed for " + path.string());
}

Sample load_sample(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("dtim: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DTIM", 4) != 0)
    throw std::runtime_error("dtim: bad magic in " + path.string());
  if (read_raw<std::uint32_t>(is) != kDtimVersion)
    throw std::runtime_error("dtim: unsupported version");
  int h = read_raw<std::uint16_t>(is);
  int w = read_raw<std::uint16_t>(is);
  (void)read_raw<std::uint8_t>(is);  // class count, informational
  Sample s;
  s.image = Tensor({3, h, w});
  s.mask = LabelMap(1, h, w);
  is.read(reinterpret_cast<char*>(s.image.data.data()),
          static_cast<std::streamsize>(s.image.data.size() * sizeof(float)));
  is.read(reinterpret_cast<char*>(s.mask.data.data()),
          static_cast<std::streamsize>(s.mask.data.size()));
  if (!is) throw std::runtime_error("dtim: truncated sample " + path.string());
  return s;
}

void generate_dataset(const ShapeGenConfig& config, const fs::path& dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  for (int id = 0; id < config.samples; ++id)
    save_sample(sample_path(dir, id), render_sample(config, id, false), config.num_classes);
  for (int v = 0; v < config.val_samples; ++v)
    save_sample(sample_path(dir, config.samples + v), render_sample(config, v, true),
                config.num_classes);
  std::ofstream os(dir / "dataset.txt", std::ios::trunc);
  if (!os) throw std::runtime_error("generate_dataset: cannot write dataset.txt");
  os << "n_train = " << config.samples << "\n"
     << "n_val = " << config.val_samples << "\n"
     << "h = " << config.h << "\n"
     << "w = " << config.w << "\n"
     << "num_classes = " << config.num_classes << "\n"
     << "seed = " << config.seed << "\n";
}

DatasetInfo read_dataset_info(const fs::path& dir) {
  std::ifstream is(dir / "dataset.txt");
  if (!is) throw std::runtime_error("read_dataset_info: missing dataset.txt in " + dir.string());
  DatasetInfo info;
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    std::uint64_t value = std::stoull(line.substr(eq + 1));
    if (key == "n_train") info.n_train = static_cast<int>(value);
    else if (key == "n_val") info.n_val = static_cast<int>(value);
    else if (key == "h") info.h = static_cast<int>(value);
    else if (key == "w") info.w = static_cast<int>(value);
    else if (key == "num_classes") info.num_classes = static_cast<int>(value);
    else if (key == "seed") info.seed = value;
  }
  return info;
}

PartitionManifest make_partition(const DatasetInfo& info, const std::string& dataset_id,
                                 double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("make_partition: fraction must be in (0,1]");
  const int n_labeled = static_cast<int>(std::lround(fraction * info.n_train));
  if (n_labeled == 0) throw std::invalid_argument("make_partition: fraction yields zero labeled samples");

  std::vector<int> ids(info.n_train);
  for (int i = 0; i < info.n_train; ++i) ids[i] = i;
  Rng rng(mix_seed(seed, 0x706172ULL));
  for (int i = info.n_train - 1; i > 0; --i)
    std::swap(ids[i], ids[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);

  PartitionManifest m;
  m.dataset = dataset_id;
  m.fraction = fraction;
  m.seed = seed;
  m.labeled.assign(ids.begin(), ids.begin() + n_labeled);
  m.unlabeled.assign(ids.begin() + n_labeled, ids.end());
  std::sort(m.labeled.begin(), m.labeled.end());
  std::sort(m.unlabeled.begin(), m.unlabeled.end());
  for (int v = 0; v < info.n_val; ++v) m.val.push_back(info.n_train + v);
  return m;
}

void write_manifest(const fs::path& path, const PartitionManifest& m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_manifest: cannot open " + path.string());
  os << "dataset = " << m.dataset << "\n"
     << "fraction = " << m.fraction << "\n"
     << "seed = " << m.seed << "\n";
  os << "[labeled]\n";
  for (int id : m.labeled) os << id << "\n";
  os << "[unlabeled]\n";
  for (int id : m.unlabeled) os << id << "\n";
  os << "[val]\n";
  for (int id : m.val) os << id << "\n";
}

PartitionManifest read_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_manifest: cannot open " + path.string());
  PartitionManifest m;
  std::vector<int>* section = nullptr;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line == "[labeled]") { section = &m.labeled; continue; }
    if (line == "[unlabeled]") { section = &m.unlabeled; continue; }
    if (line == "[val]") { section = &m.val; continue; }
    if (section) {
      section->push_back(std::stoi(line));
    } else {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq);
      key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
      std::string val = line.substr(eq + 1);
      val.erase(std::remove_if(val.begin(), val.end(), ::isspace), val.end());
      if (key == "dataset") m.dataset = val;
      else if (key == "fraction") m.fraction = std::stod(val);
      else if (key == "seed") m.seed = std::stoull(val);
    }
  }
  return m;
}

Batch load_batch(const fs::path& dir, std::span<const int> ids) {
  if (ids.empty()) throw std::invalid_argument("load_batch: empty id list");
  Batch b;
  b.ids.assign(ids.begin(), ids.end());
  Sample first = load_sample(sample_path(dir, ids[0]));
  const int h = first.mask.h, w = first.mask.w;
  const int n = static_cast<int>(ids.size());
  b.images = Tensor({n, 3, h, w});
  b.labels = LabelMap(n, h, w);
  const std::int64_t img_stride = static_cast<std::int64_t>(3) * h * w;
  const std::int64_t lbl_stride = static_cast<std::int64_t>(h) * w;
  for (int i = 0; i < n; ++i) {
    Sample s = (i == 0) ? std::move(first) : load_sample(sample_path(dir, ids[i]));
    std::copy(s.image.data.begin(), s.image.data.end(), b.images.data.begin() + i * img_stride);
    std::copy(s.mask.data.begin(), s.mask.data.end(), b.labels.data.begin() + i * lbl_stride);
  }
  return b;
}

BatchStream::BatchStream(fs::path dir, std::vector<int> ids, int batch_size)
    : dir_(std::move(dir)), ids_(std::move(ids)), batch_size_(batch_size) {
  if (batch_size_ < 1) throw std::invalid_argument("BatchStream: batch size must be >= 1");
  if (ids_.empty()) throw std::invalid_argument("BatchStream: empty split");
  order_ = ids_;
}

void BatchStream::begin_epoch(Rng& rng) {
  order_ = ids_;
  for (std::size_t i = order_.size() - 1; i > 0; --i)
    std::swap(order_[i], order_[rng.uniform_int(i + 1)]);
  cursor_ = 0;
}

bool BatchStream::next(Batch& out) {
  if (cursor_ >= order_.size()) return false;
  std::size_t take = std::min<std::size_t>(batch_size_, order_.size() - cursor_);
  out = load_batch(dir_, std::span<const int>(order_.data() + cursor_, take));
  cursor_ += take;
  return true;
}

Batch BatchStream::next_cycled(Rng& rng) {
  Batch b;
  if (!next(b)) {
    begin_epoch(rng);
    next(b);
  }
  return b;
}

int BatchStream::batches_per_epoch() const {
  return static_cast<int>((ids_.size() + batch_size_ - 1) / batch_size_);
}

void write_ppm(const fs::path& path, const Tensor& image3hw) {
  const int h = image3hw.shape[1], w = image3hw.shape[2];
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << "P6\n" << w << " " << h << "\n255\n";
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  for (std::int64_t p = 0; p < plane; ++p)
    for (int c = 0; c < 3; ++c) {
      float v = std::clamp(image3hw.data[c * plane + p], 0.0f, 1.0f);
      os.put(static_cast<char>(std::lround(v * 255.0f)));
    }
}

void write_pgm(const fs::path& path, const std::uint8_t* data, int h, int w, int maxval) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << "P5\n" << w << " " << h << "\n" << maxval << "\n";
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(h) * w);
}

}  // namespace dt
