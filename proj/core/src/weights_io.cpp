#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "lane/enet.hpp"
#include "lane/error.hpp"

namespace lane {

namespace {

constexpr std::array<char, 4> kAfwMagic{'A', 'F', 'W', '1'};

template <typename T>
void put_le(std::ostream& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof())
      throw Error(ErrorKind::Truncated, std::string("AFW1: truncated ") + what);
    v |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void write_weights(std::ostream& out, const WeightStore& w) {
  out.write(kAfwMagic.data(), 4);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.size()));
  for (const auto& [name, t] : w) {
    if (name.size() > 0xFFFF)
      throw Error(ErrorKind::InvalidArgument, "AFW1: name too long: " + name);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_aft(out, t);
  }
}

WeightStore read_weights(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4))
    throw Error(ErrorKind::Truncated, "AFW1: truncated magic");
  if (magic != kAfwMagic) throw Error(ErrorKind::BadMagic, "AFW1: bad magic");
  const auto count = get_le<std::uint32_t>(in, "entry count");
  WeightStore w;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint16_t>(in, "name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len))
      throw Error(ErrorKind::Truncated, "AFW1: truncated name");
    TensorF32 t;
    try {
      t = read_aft(in);
    } catch (const Error& e) {
      throw Error(e.kind(), "AFW1 entry '" + name + "': " + e.what());
    }
    if (!w.emplace(name, std::move(t)).second)
      throw Error(ErrorKind::Integrity, "AFW1: duplicate entry " + name);
  }
  return w;
}

void save_weights(const WeightStore& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + path);
  write_weights(out, w);
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

WeightStore load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open: " + path);
  return read_weights(in);
}

WeightStore load_weights(const std::string& path, const ArchSpec& spec) {
  WeightStore w = load_weights(path);
  validate_weights(spec, w);
  return w;
}

}  // namespace lane
