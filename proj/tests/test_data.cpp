#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "dualteacher/checkpoint.hpp"
#include "dualteacher/data.hpp"
#include "dualteacher/seg_model.hpp"

namespace fs = std::filesystem;
using dt::Batch;
using dt::Rng;
using dt::Sample;
using dt::ShapeGenConfig;

namespace {

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("render_sample is deterministic and train/val streams differ") {
  ShapeGenConfig cfg;
  cfg.h = cfg.w = 16;
  Sample a = dt::render_sample(cfg, 3, false);
  Sample b = dt::render_sample(cfg, 3, false);
  CHECK(a.image.data == b.image.data);
  CHECK(a.mask.data == b.mask.data);

  Sample c = dt::render_sample(cfg, 4, false);
  Sample v = dt::render_sample(cfg, 3, true);
  CHECK(a.image.data != c.image.data);
  CHECK(a.image.data != v.image.data);

  // pixels in range, labels in range, at least two classes present
  std::set<int> classes;
  for (float p : a.image.data) {
    CHECK(p >= 0.0f);
    CHECK(p <= 1.0f);
  }
  for (auto l : a.mask.data) {
    CHECK(l < cfg.num_classes);
    classes.insert(l);
  }
  CHECK(classes.size() >= 2);
}

TEST_CASE("generate_dataset twice produces byte-identical files") {
  ShapeGenConfig cfg;
  cfg.h = cfg.w = 16;
  cfg.samples = 6;
  cfg.val_samples = 2;
  cfg.seed = 77;
  fs::path d1 = temp_dir("dt_gen_a"), d2 = temp_dir("dt_gen_b");
  dt::generate_dataset(cfg, d1);
  dt::generate_dataset(cfg, d2);
  int count = 0;
  for (const auto& entry : fs::directory_iterator(d1)) {
    fs::path other = d2 / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
    ++count;
  }
  CHECK(count == 6 + 2 + 1);  // samples + val + dataset.txt

  dt::DatasetInfo info = dt::read_dataset_info(d1);
  CHECK(info.n_train == 6);
  CHECK(info.n_val == 2);
  CHECK(info.h == 16);
  CHECK(info.w == 16);
  CHECK(info.num_classes == 4);
  CHECK(info.seed == 77);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("sample files round-trip exactly") {
  ShapeGenConfig cfg;
  cfg.h = 16;
  cfg.w = 18;
  Sample s = dt::render_sample(cfg, 0, false);
  fs::path dir = temp_dir("dt_dtim");
  dt::save_sample(dir / "s.dtim", s, cfg.num_classes);
  Sample r = dt::load_sample(dir / "s.dtim");
  CHECK(r.image.shape == s.image.shape);
  CHECK(r.image.data == s.image.data);
  CHECK(r.mask.data == s.mask.data);

  std::ofstream(dir / "bad.dtim") << "not a sample";
  CHECK_THROWS(dt::load_sample(dir / "bad.dtim"));
  CHECK_THROWS(dt::load_sample(dir / "missing.dtim"));
  fs::remove_all(dir);
}

TEST_CASE("partition splits 1/8 of 256 into 32 labeled, disjoint and sorted") {
  dt::DatasetInfo info;
  info.n_train = 256;
  info.n_val = 64;
  auto m = dt::make_partition(info, "ds", 1.0 / 8.0, 5);
  CHECK(m.labeled.size() == 32);
  CHECK(m.unlabeled.size() == 224);
  CHECK(m.val.size() == 64);
  CHECK(std::is_sorted(m.labeled.begin(), m.labeled.end()));
  CHECK(std::is_sorted(m.unlabeled.begin(), m.unlabeled.end()));
  std::set<int> all(m.labeled.begin(), m.labeled.end());
  all.insert(m.unlabeled.begin(), m.unlabeled.end());
  CHECK(all.size() == 256);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 255);
  CHECK(m.val.front() == 256);
  CHECK(m.val.back() == 256 + 63);

  // deterministic per seed, different across seeds
  CHECK(dt::make_partition(info, "ds", 1.0 / 8.0, 5).labeled == m.labeled);
  CHECK(dt::make_partition(info, "ds", 1.0 / 8.0, 6).labeled != m.labeled);
  CHECK_THROWS(dt::make_partition(info, "ds", 0.0, 5));
  CHECK_THROWS(dt::make_partition(info, "ds", 1.5, 5));
}

TEST_CASE("manifest files round-trip") {
  dt::DatasetInfo info;
  info.n_train = 20;
  info.n_val = 4;
  auto m = dt::make_partition(info, "tiny", 0.25, 9);
  fs::path dir = temp_dir("dt_manifest");
  dt::write_manifest(dir / "m.txt", m);
  auto r = dt::read_manifest(dir / "m.txt");
  CHECK(r.dataset == m.dataset);
  CHECK(r.fraction == doctest::Approx(m.fraction));
  CHECK(r.seed == m.seed);
  CHECK(r.labeled == m.labeled);
  CHECK(r.unlabeled == m.unlabeled);
  CHECK(r.val == m.val);
  CHECK_THROWS(dt::read_manifest(dir / "absent.txt"));
  fs::remove_all(dir);
}

TEST_CASE("batch streams cover each id exactly once per epoch, partial batch kept") {
  ShapeGenConfig cfg;
  cfg.h = cfg.w = 16;
  cfg.samples = 7;
  cfg.val_samples = 0;
  fs::path dir = temp_dir("dt_stream");
  dt::generate_dataset(cfg, dir);

  std::vector<int> ids = {0, 1, 2, 3, 4, 5, 6};
  dt::BatchStream stream(dir, ids, 3);
  CHECK(stream.batches_per_epoch() == 3);  // 3 + 3 + 1

  Rng rng(21);
  stream.begin_epoch(rng);
  Batch b;
  std::vector<int> seen;
  std::vector<std::size_t> sizes;
  while (stream.next(b)) {
    sizes.push_back(b.ids.size());
    seen.insert(seen.end(), b.ids.begin(), b.ids.end());
    CHECK(b.images.shape[0] == static_cast<std::int64_t>(b.ids.size()));
    CHECK(b.labels.n == static_cast<int>(b.ids.size()));
  }
  CHECK(sizes == std::vector<std::size_t>{3, 3, 1});
  std::sort(seen.begin(), seen.end());
  CHECK(seen == ids);

  // batch contents match the per-id samples
  stream.begin_epoch(rng);
  stream.next(b);
  for (std::size_t i = 0; i < b.ids.size(); ++i) {
    Sample s = dt::load_sample(dt::sample_path(dir, b.ids[i]));
    for (int j = 0; j < 3 * 16 * 16; ++j)
      CHECK(b.images.data[i * 3 * 16 * 16 + j] == s.image.data[j]);
  }

  // cycling restarts with a reshuffle and never returns an empty batch
  dt::BatchStream cyc(dir, {0, 1}, 2);
  for (int t = 0; t < 5; ++t) CHECK(cyc.next_cycled(rng).ids.size() == 2);

  CHECK_THROWS(dt::BatchStream(dir, {}, 2));
  CHECK_THROWS(dt::BatchStream(dir, ids, 0));
  fs::remove_all(dir);
}

TEST_CASE("checkpoints restore every parameter bit-exactly") {
  dt::ModelConfig cfg{3, 8, 2, 4};
  dt::ParamSet p = dt::init_model(cfg, 31);
  fs::path dir = temp_dir("dt_ckpt");
  dt::save_checkpoint(dir / "m.ckpt", p);
  dt::ParamSet r = dt::load_checkpoint(dir / "m.ckpt");
  REQUIRE(r.same_structure(p));
  for (std::size_t i = 0; i < p.count(); ++i) {
    CHECK(r.name(i) == p.name(i));
    CHECK(r.tensor(i).data == p.tensor(i).data);
  }
  CHECK_THROWS(dt::load_checkpoint(dir / "missing.ckpt"));
  fs::remove_all(dir);
}

TEST_CASE("image dumps carry the expected netpbm headers") {
  fs::path dir = temp_dir("dt_img");
  dt::Tensor img({3, 2, 3});
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = i / 18.0f;
  dt::write_ppm(dir / "i.ppm", img);
  auto ppm = slurp(dir / "i.ppm");
  CHECK(std::string(ppm.begin(), ppm.begin() + 2) == "P6");
  CHECK(ppm.size() > 2 * 3 * 3);

  std::uint8_t mask[6] = {0, 1, 2, 3, 0, 1};
  dt::write_pgm(dir / "m.pgm", mask, 2, 3, 3);
  auto pgm = slurp(dir / "m.pgm");
  CHECK(std::string(pgm.begin(), pgm.begin() + 2) == "P5");
  CHECK(std::equal(mask, mask + 6, pgm.end() - 6));
  fs::remove_all(dir);
}
