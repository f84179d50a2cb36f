#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace covsync {

struct Mode {
  int r = 0;
  int c = 0;
  int index() const { return r * 8 + c; }
  static Mode from_index(int m) { return {m / 8, m % 8}; }
};

using LatticeId = int;  // 0..7

/// Mode group 0..3: floor(((c - r) mod 8) / 2).
int mode_group(int mode_index);

/// Lattice of a coefficient: group for even-parity blocks, group+4 for odd.
LatticeId lattice_of(int block_x, int block_y, Mode mode);

// Relative block naming used by the neighbor tables:
// 0 = current, 1 = up, 2 = left, 3 = right, 4 = down.
struct NeighborRef {
  std::uint8_t block_ref = 0;  // 0..4
  std::uint8_t mode = 0;       // 0..63
};

struct TableCheck {
  bool ok = true;
  std::vector<std::string> failures;  // each names (lattice, mode, entry)
};

// Conditioning tables for the 8 lattices, loaded from the machine-readable
// asset.  Immutable after load; safe to share across threads.
class NeighborTable {
 public:
  /// Parses and validates; throws ValidationError naming the first failure.
  static NeighborTable load_file(const std::string& path);
  static NeighborTable from_json(const nlohmann::json& doc);

  const std::vector<NeighborRef>& neighbors(LatticeId id, int mode_index) const {
    return table_[id][mode_index];
  }
  /// (dy,dx) offset of a BlockRef value.
  std::array<int, 2> block_offset(int block_ref) const { return offsets_[block_ref]; }
  const std::string& checksum() const { return checksum_; }
  static const std::array<int, 8>& expected_counts();

  /// Full structural re-check (counts, group membership, causality, checksum).
  TableCheck validate() const;

 private:
  std::array<std::array<std::vector<NeighborRef>, 64>, 8> table_{};
  std::array<std::array<int, 2>, 5> offsets_{};
  std::string checksum_;
  std::string declared_checksum_;
};

// Iteration plan over a block grid: lattices 0..7 in order, then the member
// coefficients of each lattice; neighbor lists are truncated at the image
// borders.  Linear coefficient index = (by*blocks_w + bx)*64 + mode.
class Schedule {
 public:
  Schedule(int blocks_w, int blocks_h, const NeighborTable& table);

  int blocks_w() const { return bw_; }
  int blocks_h() const { return bh_; }
  int n_coefficients() const { return bw_ * bh_ * 64; }

  const std::vector<int>& lattice_members(LatticeId id) const { return members_[id]; }

  struct Neighbor {
    int linear = 0;       // coefficient index of the conditioning neighbor
    std::int8_t dy = 0;   // block offset of the neighbor relative to current
    std::int8_t dx = 0;
    std::uint8_t mode = 0;
  };
  /// Truncated neighbor list of one coefficient (border refs removed).
  void gather_neighbors(int linear, std::vector<Neighbor>& out) const;

  LatticeId lattice_of_linear(int linear) const;

 private:
  int bw_, bh_;
  const NeighborTable* table_;
  std::array<std::vector<int>, 8> members_;
};

}  // namespace covsync
