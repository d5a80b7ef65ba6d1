#include "rrgat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "rrgat/errors.hpp"

namespace rrgat {
namespace {

constexpr char kMagic[4] = {'R', 'R', 'C', 'P'};

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw data_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw data_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const std::map<std::string, TensorPtr>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw data_error("checkpoint: cannot open for writing: " + path);

  os.write(kMagic, 4);
  put_u32(os, kCheckpointVersion);
  put_u64(os, config_json.size());
  os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  put_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, 2);
    put_u64(os, t->rows());
    put_u64(os, t->cols());
    for (std::size_t i = 0; i < t->size(); ++i) put_f64(os, t->data()[i]);
  }
  if (!os) throw data_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw data_error("checkpoint: cannot open: " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw data_error("checkpoint: bad magic in " + path);

  Checkpoint ck;
  ck.version = get_u32(is);
  if (ck.version != kCheckpointVersion)
    throw data_error("checkpoint: unsupported version " + std::to_string(ck.version));

  const std::uint64_t cfg_len = get_u64(is);
  ck.config_json.resize(cfg_len);
  is.read(ck.config_json.data(), static_cast<std::streamsize>(cfg_len));
  if (!is) throw data_error("checkpoint: truncated config block");

  const std::uint32_t count = get_u32(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw data_error("checkpoint: truncated tensor name");
    const std::uint32_t rank = get_u32(is);
    if (rank != 2) throw data_error("checkpoint: unsupported tensor rank");
    const std::uint64_t rows = get_u64(is);
    const std::uint64_t cols = get_u64(is);
    auto t = Tensor::zeros(rows, cols);
    for (std::size_t i = 0; i < t->size(); ++i) t->data()[i] = get_f64(is);
    ck.tensors[name] = std::move(t);
  }
  return ck;
}

}  // namespace rrgat
