#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lane {

using Dims = std::vector<std::size_t>;

std::size_t product(const Dims& dims);
std::string to_string(const Dims& dims);

/// Dense float32 array. Rank-4 tensors are (N, C, H, W), row-major; maps are
/// usually stored as (C, H, W). Every dim is >= 1 and the buffer length
/// always equals the product of the dims.
class TensorF32 {
 public:
  TensorF32();
  explicit TensorF32(Dims dims, float fill = 0.0f);
  TensorF32(Dims dims, std::vector<float> data);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // Rank-4 accessors.
  std::size_t n() const { return dim(0); }
  std::size_t c() const { return dim(1); }
  std::size_t h() const { return dim(2); }
  std::size_t w() const { return dim(3); }
  std::size_t offset(std::size_t n, std::size_t c, std::size_t h,
                     std::size_t w) const {
    return ((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w;
  }
  float& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[offset(n, c, h, w)];
  }
  float at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[offset(n, c, h, w)];
  }

  /// Same buffer, new dims. Element count must not change.
  TensorF32 reshaped(Dims dims) const;

  friend bool operator==(const TensorF32&, const TensorF32&) = default;

 private:
  Dims dims_;
  std::vector<float> data_;
};

void require_rank(const TensorF32& t, std::size_t rank, const char* what);
void require_same_dims(const TensorF32& a, const TensorF32& b, const char* what);

// AFT1 blob: "AFT1", u32 rank, rank x u32 dims, raw little-endian f32 data.
void write_aft(std::ostream& out, const TensorF32& t);
TensorF32 read_aft(std::istream& in);
void save_aft(const std::string& path, const TensorF32& t);
TensorF32 load_aft(const std::string& path);

}  // namespace lane
