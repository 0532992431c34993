#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

// Little-endian primitives for the CVEC / CIDX / CRTR file formats.
namespace core::binio {

void write_u8(std::ostream& out, std::uint8_t v);
void write_u16(std::ostream& out, std::uint16_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_magic(std::ostream& out, const char (&magic)[5]);
// u16 length prefix followed by the raw bytes; throws if longer than 65535.
void write_short_string(std::ostream& out, const std::string& s);

std::uint8_t read_u8(std::istream& in);
std::uint16_t read_u16(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what);
std::string read_short_string(std::istream& in);

}  // namespace core::binio
