// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include "relrot/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace relrot {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << n << ", " << c << ", " << h << ", " << w << ')';
  return os.str();
}

Tensor& Tensor::operator+=(const Tensor& o) {
  if (!(o.shape_ == shape_)) throw std::invalid_argument("Tensor +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw std::invalid_argument("concat_channels: " + sa.str() + " vs " + sb.str());
  }
  Tensor out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    auto dst = out.item(n);
    const auto ia = a.item(n), ib = b.item(n);
    std::copy(ia.begin(), ia.end(), dst.begin());
    std::copy(ib.begin(), ib.end(), dst.begin() + static_cast<std::ptrdiff_t>(ia.size()));
  }
  return out;
}

void split_channels(const Tensor& t, int first_c, Tensor& a, Tensor& b) {
  const Shape s = t.shape();
  a = Tensor(Shape{s.n, first_c, s.h, s.w});
  b = Tensor(Shape{s.n, s.c - first_c, s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    const auto src = t.item(n);
    auto da = a.item(n), db = b.item(n);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(da.size()), da.begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(da.size()), src.end(), db.begin());
  }
}

Tensor concat_batch(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.c != sb.c || sa.h != sb.h || sa.w != sb.w) {
    throw std::invalid_argument("concat_batch: " + sa.str() + " vs " + sb.str());
  }
  Tensor out(Shape{sa.n + sb.n, sa.c, sa.h, sa.w});
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

Tensor slice_batch(const Tensor& t, int begin, int count) {
  const Shape s = t.shape();
  if (begin < 0 || count < 0 || begin + count > s.n) throw std::invalid_argument("slice_batch: range");
  Tensor out(Shape{count, s.c, s.h, s.w});
  const auto first = t.data().begin() + static_cast<std::ptrdiff_t>(begin * s.item_size());
  std::copy(first, first + static_cast<std::ptrdiff_t>(out.size()), out.data().begin());
  return out;
}

}  // namespace relrot
