#pragma once
// Named trainable tensors plus their binary on-disk format.
//
// File layout (all integers little-endian):
//   "CSPT" | u32 version | u8 precision (4|8) | u64 config_hash | u64 seed
//   | u32 tensor_count | tensors... | u64 fnv1a64 checksum of everything above
// Each tensor: u32 name_len | name bytes | u32 ndim | u64 dims... | raw values.
// Loads refuse version/precision mismatches and checksum failures outright;
// there is no silent cast between single- and double-precision stores.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "convsat/tensor.hpp"

namespace convsat {

static_assert(std::endian::native == std::endian::little,
              "parameter files assume a little-endian host");

inline std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                             std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

template <typename T>
class ParamStore {
  static_assert(std::is_floating_point_v<T>);

 public:
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  Tensor<T>& add(const std::string& name, std::vector<std::size_t> shape) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter \"" + name + "\"");
    index_[name] = names_.size();
    names_.push_back(name);
    tensors_.emplace_back(std::move(shape));
    return tensors_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  Tensor<T>& get(const std::string& name) {
    return tensors_[checked_index(name)];
  }
  const Tensor<T>& get(const std::string& name) const {
    return tensors_[checked_index(name)];
  }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t count() const { return tensors_.size(); }
  Tensor<T>& at(std::size_t i) { return tensors_[i]; }
  const Tensor<T>& at(std::size_t i) const { return tensors_[i]; }

  // Same names/shapes, all values zero: the gradient buffer for this store.
  ParamStore zeros_like() const {
    ParamStore z;
    z.seed = seed;
    z.config_hash = config_hash;
    for (std::size_t i = 0; i < names_.size(); ++i) z.add(names_[i], tensors_[i].shape);
    return z;
  }

  void zero_all() {
    for (auto& t : tensors_) t.fill(T(0));
  }

  bool operator==(const ParamStore& o) const {
    if (seed != o.seed || config_hash != o.config_hash || names_ != o.names_) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      if (tensors_[i].shape != o.tensors_[i].shape) return false;
      // bitwise, not value, comparison: -0.0 vs 0.0 or NaN payloads matter here
      if (std::memcmp(tensors_[i].data.data(), o.tensors_[i].data.data(),
                      tensors_[i].size() * sizeof(T)) != 0)
        return false;
    }
    return true;
  }

 private:
  std::size_t checked_index(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown parameter \"" + name + "\"");
    return it->second;
  }

  std::vector<std::string> names_;  // insertion order; iteration is deterministic
  std::vector<Tensor<T>> tensors_;
  std::map<std::string, std::size_t> index_;
};

namespace detail {

constexpr char kParamMagic[4] = {'C', 'S', 'P', 'T'};
constexpr std::uint32_t kParamVersion = 1;

template <typename V>
void put(std::string& buf, const V& v) {
  static_assert(std::is_trivially_copyable_v<V>);
  buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename V>
V take(const std::string& buf, std::size_t& off) {
  if (off + sizeof(V) > buf.size()) throw std::runtime_error("parameter file truncated");
  V v;
  std::memcpy(&v, buf.data() + off, sizeof v);
  off += sizeof v;
  return v;
}

}  // namespace detail

template <typename T>
std::string serialize_params(const ParamStore<T>& store) {
  using namespace detail;
  std::string buf;
  buf.append(kParamMagic, sizeof kParamMagic);
  put(buf, kParamVersion);
  put(buf, static_cast<std::uint8_t>(sizeof(T)));
  put(buf, store.config_hash);
  put(buf, store.seed);
  put(buf, static_cast<std::uint32_t>(store.count()));
  for (std::size_t i = 0; i < store.count(); ++i) {
    const std::string& name = store.names()[i];
    const Tensor<T>& t = store.at(i);
    put(buf, static_cast<std::uint32_t>(name.size()));
    buf.append(name);
    put(buf, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) put(buf, static_cast<std::uint64_t>(d));
    buf.append(reinterpret_cast<const char*>(t.data.data()), t.size() * sizeof(T));
  }
  put(buf, fnv1a64(buf.data(), buf.size()));
  return buf;
}

template <typename T>
ParamStore<T> deserialize_params(const std::string& buf) {
  using namespace detail;
  if (buf.size() < sizeof kParamMagic + sizeof(std::uint64_t) ||
      std::memcmp(buf.data(), kParamMagic, sizeof kParamMagic) != 0)
    throw std::runtime_error("not a parameter file (bad magic)");
  const std::size_t body = buf.size() - sizeof(std::uint64_t);
  std::size_t off = body;
  if (take<std::uint64_t>(buf, off) != fnv1a64(buf.data(), body))
    throw std::runtime_error("parameter file checksum mismatch (corrupt or truncated)");

  off = sizeof kParamMagic;
  const auto version = take<std::uint32_t>(buf, off);
  if (version != kParamVersion)
    throw std::runtime_error("unsupported parameter file version " + std::to_string(version));
  const auto precision = take<std::uint8_t>(buf, off);
  if (precision != sizeof(T))
    throw std::runtime_error("parameter file holds " + std::to_string(precision * 8) +
                             "-bit values but this build expects " +
                             std::to_string(sizeof(T) * 8) + "-bit; no implicit conversion");
  ParamStore<T> store;
  store.config_hash = take<std::uint64_t>(buf, off);
  store.seed = take<std::uint64_t>(buf, off);
  const auto count = take<std::uint32_t>(buf, off);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = take<std::uint32_t>(buf, off);
    if (off + name_len > body) throw std::runtime_error("parameter file truncated");
    std::string name(buf.data() + off, name_len);
    off += name_len;
    const auto ndim = take<std::uint32_t>(buf, off);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(take<std::uint64_t>(buf, off));
    Tensor<T>& t = store.add(name, shape);
    const std::size_t bytes = t.size() * sizeof(T);
    if (off + bytes > body) throw std::runtime_error("parameter file truncated");
    std::memcpy(t.data.data(), buf.data() + off, bytes);
    off += bytes;
  }
  if (off != body) throw std::runtime_error("parameter file has trailing bytes");
  return store;
}

template <typename T>
void save_params(const ParamStore<T>& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string buf = serialize_params(store);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

template <typename T>
ParamStore<T> load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_params<T>(buf);
}

}  // namespace convsat
