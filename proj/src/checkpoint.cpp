#include "dualteacher/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace dt {

namespace {

template <typename T>
void write_le(std::ostream& os, T v) {
  // Little-endian host assumed (x86/aarch64); raw write keeps files bit-stable.
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
  os.write("DTCK", 4);
  write_le<std::uint32_t>(os, kCheckpointVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.count()));
  for (std::size_t i = 0; i < params.count(); ++i) {
    const std::string& name = params.name(i);
    const Tensor& t = params.tensor(i);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int e : t.shape) write_le<std::uint64_t>(os, static_cast<std::uint64_t>(e));
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DTCK", 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  auto version = read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version");
  auto count = read_le<std::uint32_t>(is);
  ParamSet ps;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_len = read_le<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    auto rank = read_le<std::uint32_t>(is);
    std::vector<int> shape(rank);
    for (auto& e : shape) e = static_cast<int>(read_le<std::uint64_t>(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
    ps.add(name, std::move(t));
  }
  return ps;
}

}  // namespace dt
