#include "coldbrew/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace coldbrew {

namespace {

constexpr char kMagic[4] = {'C', 'B', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw InvalidInput("truncated checkpoint");
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.data.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.data.cols()));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * static_cast<Eigen::Index>(sizeof(float))));
  }
  if (!out) throw InvalidInput("failed writing " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("missing checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw InvalidInput("not a checkpoint file: " + path.string());
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) throw InvalidInput("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t count = get_u32(in);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name.resize(get_u32(in));
    in.read(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    t.data.resize(rows, cols);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(static_cast<std::size_t>(rows) * cols * sizeof(float)));
    if (!in) throw InvalidInput("truncated checkpoint " + path.string());
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace coldbrew
