#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mamba/layers.hpp"

namespace mamba {

// Versioned weights container, magic "FINC1". Per layer: kind tag,
// activation tag, then each parameter as name, frozen flag, shape list and
// raw little-endian 64-bit values. Round-trips bit-exactly.
void write_layers(std::ostream& out, const std::vector<Layer>& layers);
std::vector<Layer> read_layers(std::istream& in);

void save_layers(const std::string& path, const std::vector<Layer>& layers);
std::vector<Layer> load_layers(const std::string& path);

// Raw little-endian helpers shared by the binary containers.
namespace wire {
void put_u8(std::ostream& out, uint8_t v);
void put_u32(std::ostream& out, uint32_t v);
void put_u64(std::ostream& out, uint64_t v);
void put_f64(std::ostream& out, double v);
void put_string(std::ostream& out, const std::string& s);
uint8_t get_u8(std::istream& in);
uint32_t get_u32(std::istream& in);
uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
std::string get_string(std::istream& in);
} // namespace wire

// FNV-1a over a file's bytes; used for dataset fingerprints.
uint64_t fnv1a_file(const std::string& path);
uint64_t fnv1a_bytes(const void* data, size_t n, uint64_t seed = 14695981039346656037ULL);

} // namespace mamba
