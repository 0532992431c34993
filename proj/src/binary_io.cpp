#include "core/binary_io.hpp"

#include <bit>
#include <cstring>

#include "core/error.hpp"

namespace core::binio {

namespace {

template <typename U>
void write_le(std::ostream& out, U v) {
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, sizeof(U));
  if (!out) throw IoError("write failed");
}

template <typename U>
U read_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  in.read(reinterpret_cast<char*>(buf), sizeof(U));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(U))) throw ValidationError("unexpected end of file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u8(std::ostream& out, std::uint8_t v) { write_le(out, v); }
void write_u16(std::ostream& out, std::uint16_t v) { write_le(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
void write_f32(std::ostream& out, float v) { write_le(out, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }

void write_magic(std::ostream& out, const char (&magic)[5]) {
  out.write(magic, 4);
  if (!out) throw IoError("write failed");
}

void write_short_string(std::ostream& out, const std::string& s) {
  if (s.size() > 0xffff) throw ValidationError("id longer than 65535 bytes: " + s.substr(0, 32) + "...");
  write_u16(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw IoError("write failed");
}

std::uint8_t read_u8(std::istream& in) { return read_le<std::uint8_t>(in); }
std::uint16_t read_u16(std::istream& in) { return read_le<std::uint16_t>(in); }
std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
float read_f32(std::istream& in) { return std::bit_cast<float>(read_le<std::uint32_t>(in)); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
  char buf[4];
  in.read(buf, 4);
  if (in.gcount() != 4 || std::memcmp(buf, magic, 4) != 0) {
    throw ValidationError(what + ": bad magic, expected " + std::string(magic, 4));
  }
}

std::string read_short_string(std::istream& in) {
  auto n = read_u16(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (in.gcount() != n) throw ValidationError("unexpected end of file in string");
  return s;
}

}  // namespace core::binio
