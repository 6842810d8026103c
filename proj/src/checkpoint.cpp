#include "hrank/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>

namespace hrank {

namespace {

constexpr char kMagic[4] = {'H', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
  return v;
}

}  // namespace

void save_checkpoint(const NamedTensors& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, params.size());
  for (const auto& [name, t] : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.values().size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

void load_checkpoint(NamedTensors params, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 4) != std::string(kMagic, 4))
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  std::map<std::string, Tensor> by_name;
  for (auto& [name, t] : params) by_name.emplace(name, t);

  const auto count = get<std::uint64_t>(in, path);
  if (count != by_name.size())
    throw std::runtime_error("checkpoint: " + path + " holds " + std::to_string(count) +
                             " arrays, model expects " + std::to_string(by_name.size()));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = get<std::uint32_t>(in, path);
    const auto cols = get<std::uint32_t>(in, path);
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: unexpected array '" + name + "' in " + path);
    Tensor& t = it->second;
    if (t.rows() != static_cast<int>(rows) || t.cols() != static_cast<int>(cols))
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': file has [" +
                               std::to_string(rows) + "x" + std::to_string(cols) +
                               "], model has " + shape_str(t));
    auto& vals = t.mutable_values();
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated file " + path);
  }
}

}  // namespace hrank
