#include "core/tensor.hpp"

#include <algorithm>
#include <limits>

namespace d3fcnn {

template <typename T>
Tensor<T> Tensor<T>::slice(const std::vector<Range>& ranges) const {
  if (int(ranges.size()) != rank())
    throw ShapeError("slice: need one range per axis");
  Shape out_shape(shape_.size());
  for (size_t d = 0; d < ranges.size(); ++d) {
    const auto& r = ranges[d];
    if (r.start < 0 || r.len < 1 || r.start + r.len > shape_[d])
      throw ShapeError("slice: range out of bounds");
    out_shape[d] = r.len;
  }
  Tensor out(out_shape);
  const Shape st = strides();
  const int n = rank();
  // iterate output indices odometer-style
  Shape idx(out_shape.size(), 0);
  std::int64_t written = 0;
  const std::int64_t total = out.size();
  while (written < total) {
    std::int64_t src = 0;
    for (int d = 0; d < n; ++d) src += (ranges[size_t(d)].start + idx[size_t(d)]) * st[size_t(d)];
    // innermost axis is contiguous in both: copy a run
    const std::int64_t run = out_shape[size_t(n - 1)];
    std::copy_n(data_.data() + src, size_t(run), out.data() + written);
    written += run;
    for (int d = n - 2; d >= 0; --d) {
      if (++idx[size_t(d)] < out_shape[size_t(d)]) break;
      idx[size_t(d)] = 0;
    }
    if (n == 1) break;
  }
  return out;
}

namespace {

template <typename T, typename F>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, F f, const char* opname) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(opname) + ": shape mismatch");
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

// Canonicalize reduction axes: sorted, unique, in range.
std::vector<int> check_axes(std::vector<int> axes, int rank) {
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  for (int a : axes)
    if (a < 0 || a >= rank) throw ShapeError("reduce: invalid axis");
  if (axes.empty()) throw ShapeError("reduce: no axes given");
  return axes;
}

struct ReducePlan {
  Shape out_shape;
  std::vector<std::int64_t> keep_stride_in; // per output element walk
  std::vector<std::int64_t> red_extents;
  std::vector<std::int64_t> red_strides;
};

template <typename T>
ReducePlan plan_reduction(const Tensor<T>& x, const std::vector<int>& axes) {
  ReducePlan p;
  const Shape st = x.strides();
  std::vector<bool> reduced(size_t(x.rank()), false);
  for (int a : axes) reduced[size_t(a)] = true;
  for (int d = 0; d < x.rank(); ++d) {
    if (reduced[size_t(d)]) {
      p.red_extents.push_back(x.extent(d));
      p.red_strides.push_back(st[size_t(d)]);
    } else {
      p.out_shape.push_back(x.extent(d));
      p.keep_stride_in.push_back(st[size_t(d)]);
    }
  }
  return p;
}

// Visit every (kept-index, reduced-subspace) pair; f(out_flat, in_flat).
template <typename F>
void for_each_reduced(const ReducePlan& p, F f) {
  const size_t nk = p.out_shape.size();
  const size_t nr = p.red_extents.size();
  std::vector<std::int64_t> kidx(nk, 0);
  std::int64_t out_flat = 0;
  while (true) {
    std::int64_t base = 0;
    for (size_t d = 0; d < nk; ++d) base += kidx[d] * p.keep_stride_in[d];
    std::vector<std::int64_t> ridx(nr, 0);
    while (true) {
      std::int64_t in_flat = base;
      for (size_t d = 0; d < nr; ++d) in_flat += ridx[d] * p.red_strides[d];
      f(out_flat, in_flat);
      size_t d = nr;
      while (d > 0) {
        --d;
        if (++ridx[d] < p.red_extents[d]) break;
        ridx[d] = 0;
        if (d == 0) goto red_done;
      }
      if (nr == 0) break;
    }
  red_done:
    ++out_flat;
    size_t d = nk;
    bool done = true;
    while (d > 0) {
      --d;
      if (++kidx[d] < p.out_shape[d]) {
        done = false;
        break;
      }
      kidx[d] = 0;
    }
    if (nk == 0 || done) break;
  }
}

} // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, [](T x, T y) { return x + y; }, "add");
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, [](T x, T y) { return x - y; }, "sub");
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, [](T x, T y) { return x * y; }, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

template <typename T>
Tensor<T> cwise_max(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::int64_t i = 0; i < a.size(); ++i) out[i] = std::max(a[i], s);
  return out;
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& x, std::vector<int> axes) {
  axes = check_axes(std::move(axes), x.rank());
  ReducePlan p = plan_reduction(x, axes);
  std::vector<double> acc(size_t(std::max<std::int64_t>(1, Tensor<T>(p.out_shape).size())), 0.0);
  for_each_reduced(p, [&](std::int64_t o, std::int64_t i) { acc[size_t(o)] += double(x[i]); });
  Tensor<T> out(p.out_shape);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = T(acc[size_t(i)]);
  return out;
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& x, std::vector<int> axes) {
  axes = check_axes(std::move(axes), x.rank());
  std::int64_t count = 1;
  for (int a : axes) count *= x.extent(a);
  Tensor<T> s = reduce_sum(x, axes);
  for (std::int64_t i = 0; i < s.size(); ++i) s[i] = T(double(s[i]) / double(count));
  return s;
}

template <typename T>
Tensor<T> reduce_max(const Tensor<T>& x, std::vector<int> axes) {
  axes = check_axes(std::move(axes), x.rank());
  ReducePlan p = plan_reduction(x, axes);
  Tensor<T> out(p.out_shape, std::numeric_limits<T>::lowest());
  for_each_reduced(p, [&](std::int64_t o, std::int64_t i) { out[o] = std::max(out[o], x[i]); });
  return out;
}

template <typename T>
Tensor<std::int64_t> argmax(const Tensor<T>& x, int axis) {
  ReducePlan p = plan_reduction(x, check_axes({axis}, x.rank()));
  Tensor<std::int64_t> out(p.out_shape, 0);
  const std::int64_t stride = p.red_strides[0];
  const std::int64_t extent = p.red_extents[0];
  const size_t nk = p.out_shape.size();
  std::vector<std::int64_t> kidx(nk, 0);
  std::int64_t out_flat = 0;
  while (true) {
    std::int64_t base = 0;
    for (size_t d = 0; d < nk; ++d) base += kidx[d] * p.keep_stride_in[d];
    T m = x[base];
    std::int64_t mi = 0;
    for (std::int64_t k = 1; k < extent; ++k) {
      const T v = x[base + k * stride];
      if (v > m) { // strict: ties keep the lowest index
        m = v;
        mi = k;
      }
    }
    out[out_flat++] = mi;
    size_t d = nk;
    bool done = true;
    while (d > 0) {
      --d;
      if (++kidx[d] < p.out_shape[d]) {
        done = false;
        break;
      }
      kidx[d] = 0;
    }
    if (nk == 0 || done) break;
  }
  return out;
}

#define D3FCNN_INSTANTIATE(T)                                              \
  template class Tensor<T>;                                                \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> scale(const Tensor<T>&, T);                           \
  template Tensor<T> cwise_max(const Tensor<T>&, T);                       \
  template Tensor<T> reduce_sum(const Tensor<T>&, std::vector<int>);       \
  template Tensor<T> reduce_mean(const Tensor<T>&, std::vector<int>);      \
  template Tensor<T> reduce_max(const Tensor<T>&, std::vector<int>);       \
  template Tensor<std::int64_t> argmax(const Tensor<T>&, int);

D3FCNN_INSTANTIATE(float)
D3FCNN_INSTANTIATE(double)

#undef D3FCNN_INSTANTIATE

// labels and index caches move through the same container
template class Tensor<std::int64_t>;

} // namespace d3fcnn
