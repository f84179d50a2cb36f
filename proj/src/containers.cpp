#include "covsync/containers.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "covsync/error.hpp"

namespace covsync {

namespace {

constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename T>
void put(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));  // little-endian hosts
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("container: truncated stream");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

struct Header {
  std::string magic;
  std::uint32_t height = 0, width = 0, tag = 0;
};

void write_container(std::ostream& os, const char magic[5], std::uint32_t height,
                     std::uint32_t width, std::uint32_t tag, const std::string& payload) {
  std::string head;
  head.append(magic, 4);
  put(head, kVersion);
  put(head, height);
  put(head, width);
  put(head, tag);
  os.write(head.data(), static_cast<std::streamsize>(head.size()));
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  std::string trailer;
  put(trailer, fnv1a64(payload));
  os.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
  if (!os) throw FormatError("container: write failed");
}

Header read_container(std::istream& is, const char expect_magic[5], std::string& payload) {
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string bytes = buf.str();
  std::size_t pos = 0;
  if (bytes.size() < 20 + 8) throw FormatError("container: stream too short");
  Header h;
  h.magic = bytes.substr(0, 4);
  pos = 4;
  if (h.magic != expect_magic)
    throw FormatError("container: magic '" + h.magic + "', expected '" + expect_magic + "'");
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw FormatError("container: unsupported version");
  h.height = take<std::uint32_t>(bytes, pos);
  h.width = take<std::uint32_t>(bytes, pos);
  h.tag = take<std::uint32_t>(bytes, pos);
  if (h.width == 0 || h.height == 0 || h.width % 8 != 0 || h.height % 8 != 0)
    throw FormatError("container: dimensions must be nonzero multiples of 8");
  if (bytes.size() < pos + 8) throw FormatError("container: truncated stream");
  payload = bytes.substr(pos, bytes.size() - pos - 8);
  std::size_t cpos = bytes.size() - 8;
  const auto declared = take<std::uint64_t>(bytes, cpos);
  if (declared != fnv1a64(payload)) throw FormatError("container: checksum mismatch");
  return h;
}

}  // namespace

void save_qdct(std::ostream& os, const QuantizedDctImage& img) {
  std::string payload;
  payload.reserve(128 + static_cast<std::size_t>(img.coeff.size()) * 2);
  for (auto q : img.qtable) put(payload, q);
  for (Eigen::Index i = 0; i < img.coeff.size(); ++i) put(payload, img.coeff[i]);
  write_container(os, "QDCT", static_cast<std::uint32_t>(img.height),
                  static_cast<std::uint32_t>(img.width), 0, payload);
}

QuantizedDctImage load_qdct(std::istream& is) {
  std::string payload;
  const Header h = read_container(is, "QDCT", payload);
  QuantizedDctImage img;
  img.width = static_cast<int>(h.width);
  img.height = static_cast<int>(h.height);
  const Eigen::Index n = static_cast<Eigen::Index>(img.n_blocks()) * kModesPerBlock;
  if (payload.size() != 128 + static_cast<std::size_t>(n) * 2)
    throw FormatError("QDCT1: payload length does not match dimensions");
  std::size_t pos = 0;
  for (auto& q : img.qtable) {
    q = take<std::uint16_t>(payload, pos);
    if (q < 1) throw FormatError("QDCT1: quantization step below 1");
  }
  img.coeff.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) img.coeff[i] = take<std::int16_t>(payload, pos);
  return img;
}

void save_costs(std::ostream& os, const CostMap& costs) {
  std::string payload;
  payload.reserve(static_cast<std::size_t>(costs.size()) * 4);
  for (Eigen::Index i = 0; i < costs.size(); ++i) {
    const float v = costs.wet[i] ? static_cast<float>(kWetCost)
                                 : static_cast<float>(costs.cost[i]);
    put(payload, v);
  }
  write_container(os, "COST", static_cast<std::uint32_t>(costs.height),
                  static_cast<std::uint32_t>(costs.width), 0, payload);
}

CostMap load_costs(std::istream& is) {
  std::string payload;
  const Header h = read_container(is, "COST", payload);
  CostMap m;
  m.width = static_cast<int>(h.width);
  m.height = static_cast<int>(h.height);
  const Eigen::Index n = static_cast<Eigen::Index>(h.width / 8) * (h.height / 8) * 64;
  if (payload.size() != static_cast<std::size_t>(n) * 4)
    throw FormatError("COST1: payload length does not match dimensions");
  m.cost.resize(n);
  m.wet.resize(n);
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const float v = take<float>(payload, pos);
    if (std::isnan(v)) throw FormatError("COST1: NaN cost at coefficient " + std::to_string(i));
    if (v < 0.0f)
      throw FormatError("COST1: negative cost at coefficient " + std::to_string(i));
    m.wet[i] = v >= static_cast<float>(kWetCost);
    m.cost[i] = m.wet[i] ? kWetCost : static_cast<double>(v);
  }
  return m;
}

CostMap load_costs(std::istream& is, int width, int height) {
  CostMap m = load_costs(is);
  if (m.width != width || m.height != height)
    throw FormatError("COST1: dimensions " + std::to_string(m.width) + "x" +
                      std::to_string(m.height) + " do not match expected " +
                      std::to_string(width) + "x" + std::to_string(height));
  return m;
}

void save_changes(std::ostream& os, const ChangeMap& changes) {
  std::string payload;
  const Eigen::Index n = changes.change.size();
  payload.reserve(static_cast<std::size_t>(n) * 5);
  for (Eigen::Index i = 0; i < n; ++i) put(payload, changes.change[i]);
  for (Eigen::Index i = 0; i < n; ++i) put(payload, static_cast<float>(changes.latent[i]));
  write_container(os, "CHG_", static_cast<std::uint32_t>(changes.height),
                  static_cast<std::uint32_t>(changes.width), 0, payload);
}

ChangeMap load_changes(std::istream& is) {
  std::string payload;
  const Header h = read_container(is, "CHG_", payload);
  ChangeMap m;
  m.width = static_cast<int>(h.width);
  m.height = static_cast<int>(h.height);
  const Eigen::Index n = static_cast<Eigen::Index>(h.width / 8) * (h.height / 8) * 64;
  if (payload.size() != static_cast<std::size_t>(n) * 5)
    throw FormatError("CHG1: payload length does not match dimensions");
  m.change.resize(n);
  m.latent.resize(n);
  std::size_t pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    m.change[i] = take<std::int8_t>(payload, pos);
    if (m.change[i] < -1 || m.change[i] > 1)
      throw FormatError("CHG1: change outside {-1,0,+1} at coefficient " + std::to_string(i));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    m.latent[i] = static_cast<double>(take<float>(payload, pos));
  return m;
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open for writing: " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw FormatError("rename failed: " + path);
}

namespace {

template <typename Saver, typename Obj>
void save_file_atomic(const std::string& path, Saver saver, const Obj& obj) {
  std::ostringstream os(std::ios::binary);
  saver(os, obj);
  atomic_write_file(path, os.str());
}

template <typename Loader>
auto load_file(const std::string& path, Loader loader) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open: " + path);
  return loader(f);
}

}  // namespace

void save_qdct_file(const std::string& path, const QuantizedDctImage& img) {
  save_file_atomic(path, [](std::ostream& os, const QuantizedDctImage& x) { save_qdct(os, x); },
                   img);
}
QuantizedDctImage load_qdct_file(const std::string& path) {
  return load_file(path, [](std::istream& is) { return load_qdct(is); });
}
void save_costs_file(const std::string& path, const CostMap& costs) {
  save_file_atomic(path, [](std::ostream& os, const CostMap& x) { save_costs(os, x); }, costs);
}
CostMap load_costs_file(const std::string& path) {
  return load_file(path, [](std::istream& is) { return load_costs(is); });
}
void save_changes_file(const std::string& path, const ChangeMap& changes) {
  save_file_atomic(path, [](std::ostream& os, const ChangeMap& x) { save_changes(os, x); },
                   changes);
}
ChangeMap load_changes_file(const std::string& path) {
  return load_file(path, [](std::istream& is) { return load_changes(is); });
}

std::string sniff_magic(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return {};
  char m[4];
  if (!f.read(m, 4)) return {};
  const std::string s(m, 4);
  if (s == "QDCT" || s == "COST" || s == "CHG_") return s;
  return {};
}

}  // namespace covsync
