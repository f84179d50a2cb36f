#include "covsync/lattice.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "covsync/error.hpp"

namespace covsync {

int mode_group(int mode_index) {
  const int r = mode_index / 8, c = mode_index % 8;
  return (((c - r) % 8 + 8) % 8) / 2;
}

LatticeId lattice_of(int block_x, int block_y, Mode mode) {
  if (mode.r < 0 || mode.r >= 8 || mode.c < 0 || mode.c >= 8)
    throw ParameterError("lattice_of: mode outside 8x8 block");
  const int g = mode_group(mode.index());
  return ((block_x + block_y) % 2 == 0) ? g : g + 4;
}

const std::array<int, 8>& NeighborTable::expected_counts() {
  static const std::array<int, 8> counts = {0, 2, 4, 6, 32, 34, 36, 38};
  return counts;
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xF];
  return s;
}

std::string describe(int lattice, int mode, const NeighborRef* ref = nullptr) {
  std::string s = "lattice " + std::to_string(lattice) + ", mode (" + std::to_string(mode / 8) +
                  "," + std::to_string(mode % 8) + ")";
  if (ref)
    s += ", entry block " + std::to_string(ref->block_ref) + " mode (" +
         std::to_string(ref->mode / 8) + "," + std::to_string(ref->mode % 8) + ")";
  return s;
}

}  // namespace

NeighborTable NeighborTable::from_json(const nlohmann::json& doc) {
  NeighborTable t;
  try {
    if (doc.at("format").get<std::string>() != "dct-lattice-neighbor-tables")
      throw ValidationError("neighbor tables: unexpected format tag");
    const auto& off = doc.at("block_offsets");
    for (int b = 0; b <= 4; ++b) {
      const auto& o = off.at(std::to_string(b));
      t.offsets_[b] = {o.at(0).get<int>(), o.at(1).get<int>()};
    }
    t.declared_checksum_ = doc.at("checksum_fnv1a64").get<std::string>();

    std::string canon;
    for (const auto& lat : doc.at("lattices")) {
      const int id = lat.at("id").get<int>();
      if (id < 0 || id > 7) throw ValidationError("neighbor tables: lattice id outside [0,8)");
      for (const auto& jm : lat.at("modes")) {
        const int r = jm.at("mode").at(0).get<int>(), c = jm.at("mode").at(1).get<int>();
        const int m = r * 8 + c;
        canon += "L" + std::to_string(id) + "|" + std::to_string(r) + "," + std::to_string(c) + ":";
        bool first = true;
        for (const auto& je : jm.at("entries")) {
          NeighborRef ref;
          ref.block_ref = static_cast<std::uint8_t>(je.at(0).get<int>());
          const int er = je.at(1).get<int>(), ec = je.at(2).get<int>();
          ref.mode = static_cast<std::uint8_t>(er * 8 + ec);
          t.table_[id][m].push_back(ref);
          if (!first) canon += ";";
          canon += "b" + std::to_string(ref.block_ref) + "(" + std::to_string(er) + "," +
                   std::to_string(ec) + ")";
          first = false;
        }
        canon += "\n";
      }
    }
    if (!canon.empty()) canon.pop_back();  // generator joins with '\n'
    t.checksum_ = hex64(fnv1a64(canon));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("neighbor tables: malformed asset: ") + e.what());
  }

  TableCheck check = t.validate();
  if (!check.ok) throw ValidationError("neighbor tables: " + check.failures.front());
  return t;
}

NeighborTable NeighborTable::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open neighbor tables: " + path);
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("neighbor tables: invalid JSON: ") + e.what());
  }
  return from_json(doc);
}

TableCheck NeighborTable::validate() const {
  TableCheck out;
  auto fail = [&](const std::string& msg) {
    out.ok = false;
    out.failures.push_back(msg);
  };

  if (checksum_ != declared_checksum_)
    fail("checksum mismatch: content " + checksum_ + " vs declared " + declared_checksum_);

  static const std::array<std::array<int, 2>, 5> expected_offsets = {
      {{0, 0}, {-1, 0}, {0, -1}, {0, 1}, {1, 0}}};
  if (offsets_ != expected_offsets) fail("block offset mapping differs from 0/up/left/right/down");

  for (int id = 0; id < 8; ++id) {
    const int g = id % 4;
    int populated = 0;
    for (int m = 0; m < 64; ++m) {
      const auto& refs = table_[id][m];
      if (mode_group(m) != g) {
        if (!refs.empty())
          fail(describe(id, m) + ": mode listed under a lattice of another group");
        continue;
      }
      ++populated;
      if (static_cast<int>(refs.size()) != expected_counts()[id])
        fail(describe(id, m) + ": " + std::to_string(refs.size()) + " entries, expected " +
             std::to_string(expected_counts()[id]));

      std::array<int, 5> per_block{};
      for (const auto& ref : refs) {
        if (ref.block_ref > 4) {
          fail(describe(id, m, &ref) + ": block ref outside [0,4]");
          continue;
        }
        ++per_block[ref.block_ref];
        // causality: the referenced coefficient must sit in an earlier lattice
        const bool same_parity = ref.block_ref == 0;
        const int ref_lattice =
            mode_group(ref.mode) + ((id >= 4) == same_parity ? 4 : 0);
        if (ref_lattice >= id)
          fail(describe(id, m, &ref) + ": references lattice " + std::to_string(ref_lattice) +
               ", not strictly earlier");
      }
      if (id >= 4) {
        for (int b = 1; b <= 4; ++b)
          if (per_block[b] != 8)
            fail(describe(id, m) + ": " + std::to_string(per_block[b]) +
                 " entries for neighbor block " + std::to_string(b) + ", expected 8");
        const int intra_expected = (id - 4) * 2;
        if (per_block[0] != intra_expected)
          fail(describe(id, m) + ": " + std::to_string(per_block[0]) +
               " intra entries, expected " + std::to_string(intra_expected));
      } else if (per_block[1] + per_block[2] + per_block[3] + per_block[4] != 0) {
        fail(describe(id, m) + ": even-parity lattice with inter-block entries");
      }
    }
    if (populated != 16)
      fail("lattice " + std::to_string(id) + ": " + std::to_string(populated) +
           " modes populated, expected 16");
  }
  return out;
}

Schedule::Schedule(int blocks_w, int blocks_h, const NeighborTable& table)
    : bw_(blocks_w), bh_(blocks_h), table_(&table) {
  if (blocks_w < 1 || blocks_h < 1) throw SizeError("Schedule: empty block grid");
  for (int by = 0; by < bh_; ++by)
    for (int bx = 0; bx < bw_; ++bx)
      for (int m = 0; m < 64; ++m) {
        const LatticeId id = lattice_of(bx, by, Mode::from_index(m));
        members_[id].push_back((by * bw_ + bx) * 64 + m);
      }
}

LatticeId Schedule::lattice_of_linear(int linear) const {
  const int block = linear / 64, m = linear % 64;
  return lattice_of(block % bw_, block / bw_, Mode::from_index(m));
}

void Schedule::gather_neighbors(int linear, std::vector<Neighbor>& out) const {
  out.clear();
  const int block = linear / 64, m = linear % 64;
  const int bx = block % bw_, by = block / bw_;
  const LatticeId id = lattice_of(bx, by, Mode::from_index(m));
  for (const auto& ref : table_->neighbors(id, m)) {
    const auto off = table_->block_offset(ref.block_ref);
    const int ny = by + off[0], nx = bx + off[1];
    if (ny < 0 || ny >= bh_ || nx < 0 || nx >= bw_) continue;  // border truncation
    Neighbor nb;
    nb.linear = (ny * bw_ + nx) * 64 + ref.mode;
    nb.dy = static_cast<std::int8_t>(off[0]);
    nb.dx = static_cast<std::int8_t>(off[1]);
    nb.mode = ref.mode;
    out.push_back(nb);
  }
}

}  // namespace covsync
