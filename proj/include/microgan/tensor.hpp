#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "microgan/error.hpp"

namespace microgan {

using Shape = std::vector<int64_t>;

inline std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

inline int64_t shape_numel(const Shape& shape) {
  if (shape.empty()) fail(ErrorKind::Size, "tensor shape must be nonempty");
  int64_t n = 1;
  for (int64_t e : shape) {
    if (e < 1)
      fail(ErrorKind::Size,
           "tensor extents must be >= 1, got shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

// Dense row-major tensor over a scalar type (float for training, double for
// gradient checking). Strides are derived from the shape, so every in-range
// index maps to exactly one buffer element.
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, S fill = S(0)) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(shape_numel(shape_)), fill);
    init_strides();
  }

  Tensor(Shape shape, std::vector<S> buffer)
      : shape_(std::move(shape)), data_(std::move(buffer)) {
    int64_t want = shape_numel(shape_);
    if (static_cast<int64_t>(data_.size()) != want)
      fail(ErrorKind::Size, "buffer holds " + std::to_string(data_.size()) +
                                " values but shape " + shape_str(shape_) +
                                " wants " + std::to_string(want));
    init_strides();
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, S value) {
    return Tensor(std::move(shape), value);
  }

  bool defined() const { return !shape_.empty(); }
  const Shape& shape() const { return shape_; }
  const std::vector<int64_t>& strides() const { return strides_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }

  S& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const S& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // rank-4 (NCHW) accessor; kernels use raw pointers, this is for call sites
  // that favour clarity
  S& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) *
                                         shape_[3] +
                                     w)];
  }
  const S& at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) *
                                         shape_[3] +
                                     w)];
  }

  void fill(S value) {
    for (S& v : data_) v = value;
  }

  bool all_finite() const {
    for (S v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  template <typename T>
  Tensor<T> cast() const {
    std::vector<T> out(data_.size());
    for (size_t i = 0; i < data_.size(); ++i)
      out[i] = static_cast<T>(data_[i]);
    return Tensor<T>(shape_, std::move(out));
  }

 private:
  void init_strides() {
    strides_.assign(shape_.size(), 1);
    for (int i = static_cast<int>(shape_.size()) - 2; i >= 0; --i)
      strides_[static_cast<size_t>(i)] =
          strides_[static_cast<size_t>(i) + 1] * shape_[static_cast<size_t>(i) + 1];
  }

  Shape shape_;
  std::vector<int64_t> strides_;
  std::vector<S> data_;
};

// Geometry of a (transposed) convolution. Weights carry no bias term
// anywhere in this project, mirroring bias=False throughout both networks.
struct ConvSpec {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  int64_t kh = 0, kw = 0;
  int64_t sh = 1, sw = 1;
  int64_t ph = 0, pw = 0;
  bool transposed = false;

  static ConvSpec conv(int64_t cin, int64_t cout, int64_t k, int64_t s,
                       int64_t p) {
    return ConvSpec{cin, cout, k, k, s, s, p, p, false};
  }

  static ConvSpec conv_transpose(int64_t cin, int64_t cout, int64_t k,
                                 int64_t s, int64_t p) {
    return ConvSpec{cin, cout, k, k, s, s, p, p, true};
  }

  void validate() const {
    if (in_channels < 1 || out_channels < 1)
      fail(ErrorKind::Spec, "conv spec needs at least one channel each way");
    if (kh < 1 || kw < 1) fail(ErrorKind::Spec, "conv kernel must be >= 1x1");
    if (sh < 1 || sw < 1) fail(ErrorKind::Spec, "conv stride must be >= 1");
    if (ph < 0 || pw < 0) fail(ErrorKind::Spec, "conv padding must be >= 0");
  }

  // direct: floor((in + 2p - k) / s) + 1; transposed: (in - 1) s - 2p + k
  int64_t out_extent(int64_t in, int64_t k, int64_t s, int64_t p) const {
    if (transposed) return (in - 1) * s - 2 * p + k;
    int64_t span = in + 2 * p - k;
    if (span < 0) return 0;
    return span / s + 1;
  }
  int64_t out_h(int64_t in_h) const { return out_extent(in_h, kh, sh, ph); }
  int64_t out_w(int64_t in_w) const { return out_extent(in_w, kw, sw, pw); }
};

}  // namespace microgan
