#include "lane/tensor.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "lane/error.hpp"

namespace lane {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::UnknownName: return "unknown-name";
    case ErrorKind::MissingSlot: return "missing-slot";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

std::size_t product(const Dims& dims) {
  std::size_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

std::string to_string(const Dims& dims) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ',';
    os << dims[i];
  }
  os << ')';
  return os.str();
}

namespace {

void check_dims(const Dims& dims) {
  if (dims.empty())
    throw Error(ErrorKind::InvalidArgument, "tensor rank must be >= 1");
  for (auto d : dims)
    if (d == 0)
      throw Error(ErrorKind::InvalidArgument,
                  "tensor dims must be >= 1, got " + to_string(dims));
}

}  // namespace

TensorF32::TensorF32() : dims_{1}, data_(1, 0.0f) {}

TensorF32::TensorF32(Dims dims, float fill) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(product(dims_), fill);
}

TensorF32::TensorF32(Dims dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (product(dims_) != data_.size())
    throw Error(ErrorKind::ShapeMismatch,
                "buffer length " + std::to_string(data_.size()) +
                    " does not match dims " + to_string(dims_));
}

std::size_t TensorF32::dim(std::size_t axis) const {
  if (axis >= dims_.size())
    throw Error(ErrorKind::ShapeMismatch,
                "axis " + std::to_string(axis) + " out of range for " +
                    to_string(dims_));
  return dims_[axis];
}

TensorF32 TensorF32::reshaped(Dims dims) const {
  return TensorF32(std::move(dims), data_);
}

void require_rank(const TensorF32& t, std::size_t rank, const char* what) {
  if (t.rank() != rank)
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + ": expected rank " + std::to_string(rank) +
                    ", got " + to_string(t.dims()));
}

void require_same_dims(const TensorF32& a, const TensorF32& b,
                       const char* what) {
  if (a.dims() != b.dims())
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": " +
                                              to_string(a.dims()) + " vs " +
                                              to_string(b.dims()));
}

// ---------------------------------------------------------------------------
// AFT1

namespace {

constexpr std::array<char, 4> kAftMagic{'A', 'F', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw Error(ErrorKind::Truncated, "AFT1: truncated header");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 |
         std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

}  // namespace

void write_aft(std::ostream& out, const TensorF32& t) {
  out.write(kAftMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
  } else {
    for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
}

TensorF32 read_aft(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4))
    throw Error(ErrorKind::Truncated, "AFT1: truncated magic");
  if (magic != kAftMagic)
    throw Error(ErrorKind::BadMagic, "AFT1: bad magic");
  const std::uint32_t rank = get_u32(in);
  if (rank == 0 || rank > 8)
    throw Error(ErrorKind::Integrity,
                "AFT1: unsupported rank " + std::to_string(rank));
  Dims dims(rank);
  std::size_t count = 1;
  for (auto& d : dims) {
    d = get_u32(in);
    if (d == 0) throw Error(ErrorKind::Integrity, "AFT1: zero dimension");
    if (count > std::numeric_limits<std::size_t>::max() / 4 / d)
      throw Error(ErrorKind::Integrity, "AFT1: dims overflow");
    count *= d;
  }
  std::vector<float> data(count);
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(count * sizeof(float))))
      throw Error(ErrorKind::Truncated, "AFT1: truncated payload");
  } else {
    for (auto& f : data) f = std::bit_cast<float>(get_u32(in));
  }
  return TensorF32(std::move(dims), std::move(data));
}

void save_aft(const std::string& path, const TensorF32& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + path);
  write_aft(out, t);
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

TensorF32 load_aft(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open: " + path);
  return read_aft(in);
}

}  // namespace lane
