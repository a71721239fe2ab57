//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace hbgsa::nn {
namespace {

constexpr std::array<char, 4> kMagic { 'H', 'B', 'G', 'S' };

void put_u32(std::ostream &os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i)
    b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), b.size());
}

std::uint32_t get_u32(std::istream &is, const char *what) {
  std::array<unsigned char, 4> b;
  if (!is.read(reinterpret_cast<char *>(b.data()), b.size()))
    throw DataError(std::string("checkpoint truncated while reading ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8)
         | (static_cast<std::uint32_t>(b[2]) << 16)
         | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

template <class T>
void write_checkpoint(std::ostream &os, const ParamStore<T> &params) {
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const auto &p: params) {
    put_u32(os, static_cast<std::uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(os, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d: p->value.shape())
      put_u32(os, static_cast<std::uint32_t>(d));
    for (T v: p->value.values())
      put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!os)
    throw DataError("failed to write checkpoint");
}

ParamStore<float> read_checkpoint(std::istream &is) {
  std::array<char, 4> magic;
  if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    throw DataError("not a checkpoint file (bad magic)");
  const std::uint32_t version = get_u32(is, "version");
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version "
                    + std::to_string(version));
  const std::uint32_t count = get_u32(is, "parameter count");
  ParamStore<float> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(is, "name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len))
      throw DataError("checkpoint truncated in parameter name");
    const std::uint32_t rank = get_u32(is, "rank");
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r)
      shape.push_back(get_u32(is, "dimension"));
    Tensor<float> value(shape);
    for (auto &v: value.values())
      v = std::bit_cast<float>(get_u32(is, "values"));
    params.add(std::move(name), std::move(value));
  }
  return params;
}

template <class T>
void save_checkpoint(const std::filesystem::path &path,
                     const ParamStore<T> &params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw DataError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(os, params);
}

ParamStore<float> load_checkpoint(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw DataError("cannot open checkpoint: " + path.string());
  return read_checkpoint(is);
}

template void write_checkpoint<float>(std::ostream &, const ParamStore<float> &);
template void write_checkpoint<double>(std::ostream &,
                                       const ParamStore<double> &);
template void save_checkpoint<float>(const std::filesystem::path &,
                                     const ParamStore<float> &);
template void save_checkpoint<double>(const std::filesystem::path &,
                                      const ParamStore<double> &);

}  // namespace hbgsa::nn
