#include "symfs/serialize.hpp"

#include <bit>
#include <istream>
#include <ostream>

#include "symfs/error.hpp"

namespace symfs {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
  out.write(bytes, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw FormatError("head checkpoint truncated in header");
  return static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
         static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("head checkpoint truncated in parameters");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_head(std::ostream& out, const ClassifierHead& head) {
  put_u32(out, kHeadMagic);
  put_u32(out, static_cast<std::uint32_t>(head.kind()));
  put_u32(out, static_cast<std::uint32_t>(head.classes()));
  put_u32(out, static_cast<std::uint32_t>(head.input_dim()));
  for (const auto& p : head.parameters())
    for (double v : p) put_f64(out, v);
}

std::unique_ptr<ClassifierHead> load_head(std::istream& in, const HeadSpec& spec) {
  if (get_u32(in) != kHeadMagic) throw FormatError("not a head checkpoint (bad magic)");
  const auto kind = get_u32(in);
  if (kind != static_cast<std::uint32_t>(spec.kind)) throw FormatError("head checkpoint kind mismatch");
  const std::size_t n = get_u32(in);
  const std::size_t d = get_u32(in);
  // Allocate a head of the right shape, then overwrite its parameters.
  auto head = init_head(spec, n, d, 0);
  for (auto p : head->parameters())
    for (double& v : p) v = get_f64(in);
  return head;
}

}  // namespace symfs
