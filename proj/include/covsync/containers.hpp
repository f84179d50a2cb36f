#pragma once

#include <iosfwd>
#include <string>

#include "covsync/costmap.hpp"
#include "covsync/devpipe.hpp"
#include "covsync/syncembed.hpp"

namespace covsync {

// Little-endian binary containers.  Layout shared by all three:
//   magic[4] | u32 version | u32 height | u32 width | u32 payload tag
//   payload bytes
//   u64 FNV-1a checksum of the payload
// QDCT1: payload = 64 x u16 qtable, then i16 coefficients in block raster
//        order, modes row-major within each block.
// COST1: payload = one f32 symmetric cost per coefficient; >= 1e10 is wet.
// CHG1:  payload = i8 changes, then f32 latent values.

void save_qdct(std::ostream& os, const QuantizedDctImage& img);
QuantizedDctImage load_qdct(std::istream& is);
void save_qdct_file(const std::string& path, const QuantizedDctImage& img);
QuantizedDctImage load_qdct_file(const std::string& path);

void save_costs(std::ostream& os, const CostMap& costs);
/// Reads a COST1 stream and checks it against the expected dimensions.
CostMap load_costs(std::istream& is, int width, int height);
CostMap load_costs(std::istream& is);
void save_costs_file(const std::string& path, const CostMap& costs);
CostMap load_costs_file(const std::string& path);

void save_changes(std::ostream& os, const ChangeMap& changes);
ChangeMap load_changes(std::istream& is);
void save_changes_file(const std::string& path, const ChangeMap& changes);
ChangeMap load_changes_file(const std::string& path);

/// Writes via a temp file in the same directory, then renames.
void atomic_write_file(const std::string& path, const std::string& bytes);

/// Magic of a container file ("QDCT", "COST", "CHG_"), or empty if unknown.
std::string sniff_magic(const std::string& path);

}  // namespace covsync
