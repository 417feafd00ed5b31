#include "core/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace mf::ops {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

bool want_tape(const Tensor& out) {
  if (GradTape::active() == nullptr || !out.requires_grad()) return false;
  out.node()->produced = true;
  return true;
}

void record(GradTape::BackwardFn fn) { GradTape::active()->record(std::move(fn)); }

// Suffix-of-shape broadcast check; returns the repeat count for the leading
// axes (1 when shapes are equal).
std::int64_t broadcast_repeats(const Tensor& a, const Tensor& b,
                               const char* opname) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sb.size() > sa.size() ||
      !std::equal(sb.rbegin(), sb.rend(), sa.rbegin()))
    throw ShapeError(std::string(opname) + ": shape " + a.shape_str() +
                     " vs " + b.shape_str());
  return a.numel() / b.numel();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: shape " + a.shape_str() + " vs " + b.shape_str());
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n}, a.requires_grad() || b.requires_grad());
  MMap(out.data(), m, n).noalias() = CMap(a.data(), m, k) * CMap(b.data(), k, n);
  if (want_tape(out)) {
    auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
    record([an, bn, on, m, k, n](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      CMap gm(g, m, n);
      if (an->requires_grad)
        MMap(ctx.accumulate_into(an.get()), m, k).noalias() +=
            gm * CMap(bn->data.data(), k, n).transpose();
      if (bn->requires_grad)
        MMap(ctx.accumulate_into(bn.get()), k, n).noalias() +=
            CMap(an->data.data(), m, k).transpose() * gm;
      ctx.finalize(on.get());
    });
  }
  return out;
}

// x [..., in] -> [..., out]: flattened-row matmul plus bias, one tensor.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || b.rank() != 1 || b.dim(0) != w.dim(1) ||
      x.dim(-1) != w.dim(0))
    throw ShapeError("affine: input " + x.shape_str() + " vs weight " +
                     w.shape_str() + " / bias " + b.shape_str());
  const int in = w.dim(0), out_w = w.dim(1);
  const auto rows = static_cast<int>(x.numel() / in);
  std::vector<int> out_shape = x.shape();
  out_shape.back() = out_w;
  Tensor out = Tensor::zeros(out_shape, x.requires_grad() || w.requires_grad() ||
                                            b.requires_grad());
  MMap om(out.data(), rows, out_w);
  om.noalias() = CMap(x.data(), rows, in) * CMap(w.data(), in, out_w);
  om.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b.data(), out_w);
  if (want_tape(out)) {
    auto xn = x.node_ptr(), wn = w.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
    record([xn, wn, bn, on, rows, in, out_w](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      CMap gm(g, rows, out_w);
      if (xn->requires_grad)
        MMap(ctx.accumulate_into(xn.get()), rows, in).noalias() +=
            gm * CMap(wn->data.data(), in, out_w).transpose();
      if (wn->requires_grad)
        MMap(ctx.accumulate_into(wn.get()), in, out_w).noalias() +=
            CMap(xn->data.data(), rows, in).transpose() * gm;
      if (bn->requires_grad)
        Eigen::Map<Eigen::RowVectorXd>(ctx.accumulate_into(bn.get()), out_w) +=
            gm.colwise().sum();
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor bmm(const Tensor& a, const Tensor& b, double alpha) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) ||
      a.dim(2) != b.dim(1))
    throw ShapeError("bmm: shape " + a.shape_str() + " vs " + b.shape_str());
  const int bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  Tensor out = Tensor::zeros({bs, m, n}, a.requires_grad() || b.requires_grad());
  for (int i = 0; i < bs; ++i)
    MMap(out.data() + static_cast<std::size_t>(i) * m * n, m, n).noalias() =
        alpha * (CMap(a.data() + static_cast<std::size_t>(i) * m * k, m, k) *
                 CMap(b.data() + static_cast<std::size_t>(i) * k * n, k, n));
  if (want_tape(out)) {
    auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
    record([an, bn, on, bs, m, k, n, alpha](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      for (int i = 0; i < bs; ++i) {
        CMap gm(g + static_cast<std::size_t>(i) * m * n, m, n);
        if (an->requires_grad)
          MMap(ctx.accumulate_into(an.get()) + static_cast<std::size_t>(i) * m * k, m, k)
              .noalias() += alpha *
              (gm * CMap(bn->data.data() + static_cast<std::size_t>(i) * k * n, k, n).transpose());
        if (bn->requires_grad)
          MMap(ctx.accumulate_into(bn.get()) + static_cast<std::size_t>(i) * k * n, k, n)
              .noalias() += alpha *
              (CMap(an->data.data() + static_cast<std::size_t>(i) * m * k, m, k).transpose() * gm);
      }
      ctx.finalize(on.get());
    });
  }
  return out;
}

namespace {

enum class BinKind { Add, Sub, Mul };

Tensor binary_op(const Tensor& a, const Tensor& b, BinKind kind,
                 const char* opname) {
  const std::int64_t reps = broadcast_repeats(a, b, opname);
  const std::int64_t nb = b.numel();
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || b.requires_grad());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::int64_t r = 0; r < reps; ++r) {
    const std::int64_t base = r * nb;
    switch (kind) {
      case BinKind::Add:
        for (std::int64_t i = 0; i < nb; ++i) po[base + i] = pa[base + i] + pb[i];
        break;
      case BinKind::Sub:
        for (std::int64_t i = 0; i < nb; ++i) po[base + i] = pa[base + i] - pb[i];
        break;
      case BinKind::Mul:
        for (std::int64_t i = 0; i < nb; ++i) po[base + i] = pa[base + i] * pb[i];
        break;
    }
  }
  if (want_tape(out)) {
    auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
    record([an, bn, on, kind, reps, nb](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      if (an->requires_grad) {
        double* da = ctx.accumulate_into(an.get());
        const std::int64_t na = reps * nb;
        if (kind == BinKind::Mul) {
          for (std::int64_t r = 0; r < reps; ++r)
            for (std::int64_t i = 0; i < nb; ++i)
              da[r * nb + i] += g[r * nb + i] * bn->data[static_cast<std::size_t>(i)];
        } else {
          for (std::int64_t i = 0; i < na; ++i) da[i] += g[i];
        }
      }
      if (bn->requires_grad) {
        double* db = ctx.accumulate_into(bn.get());
        for (std::int64_t r = 0; r < reps; ++r) {
          const std::int64_t base = r * nb;
          switch (kind) {
            case BinKind::Add:
              for (std::int64_t i = 0; i < nb; ++i) db[i] += g[base + i];
              break;
            case BinKind::Sub:
              for (std::int64_t i = 0; i < nb; ++i) db[i] -= g[base + i];
              break;
            case BinKind::Mul:
              for (std::int64_t i = 0; i < nb; ++i)
                db[i] += g[base + i] * an->data[static_cast<std::size_t>(base + i)];
              break;
          }
        }
      }
      ctx.finalize(on.get());
    });
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, BinKind::Mul, "mul"); }

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const std::int64_t n = a.numel();
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * c;
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, c, n](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      for (std::int64_t i = 0; i < n; ++i) da[i] += g[i] * c;
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const std::int64_t n = a.numel();
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + c;
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, n](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      for (std::int64_t i = 0; i < n; ++i) da[i] += g[i];
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const std::int64_t n = a.numel();
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) {
    double x = pa[i];
    po[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                     : std::exp(x) / (1.0 + std::exp(x));
  }
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, n](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      const double* y = on->data.data();
      for (std::int64_t i = 0; i < n; ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const std::int64_t n = a.numel();
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, n](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      const double* x = an->data.data();
      for (std::int64_t i = 0; i < n; ++i)
        if (x[i] > 0.0) da[i] += g[i];
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  if (shape_numel(shape) != a.numel())
    throw ShapeError("reshape: " + a.shape_str() + " to " + shape_to_string(shape));
  Tensor out = Tensor::wrap(std::move(shape), a.vec(), a.requires_grad());
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    const std::int64_t n = a.numel();
    record([an, on, n](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      for (std::int64_t i = 0; i < n; ++i) da[i] += g[i];
      ctx.finalize(on.get());
    });
  }
  return out;
}

namespace {

// shared machinery for index-remap ops: out[i] = in[map[i]]
Tensor remap_op(const Tensor& a, std::vector<int> out_shape,
                std::shared_ptr<std::vector<std::int64_t>> map) {
  Tensor out = Tensor::zeros(std::move(out_shape), a.requires_grad());
  const double* pa = a.data();
  double* po = out.data();
  const auto& m = *map;
  for (std::size_t i = 0; i < m.size(); ++i) po[i] = pa[m[i]];
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, map](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      const auto& mm = *map;
      for (std::size_t i = 0; i < mm.size(); ++i) da[mm[i]] += g[i];
      ctx.finalize(on.get());
    });
  }
  return out;
}

std::vector<std::int64_t> permute_source_indices(const std::vector<int>& in_shape,
                                                 const std::vector<int>& perm) {
  const int r = static_cast<int>(in_shape.size());
  std::vector<int> out_shape(r);
  for (int i = 0; i < r; ++i) out_shape[i] = in_shape[perm[i]];
  std::vector<std::int64_t> in_strides(r, 1);
  for (int i = r - 2; i >= 0; --i) in_strides[i] = in_strides[i + 1] * in_shape[i + 1];
  std::int64_t total = 1;
  for (int d : out_shape) total *= d;
  std::vector<std::int64_t> map(static_cast<std::size_t>(total));
  std::vector<int> idx(r, 0);
  for (std::int64_t flat = 0; flat < total; ++flat) {
    std::int64_t src = 0;
    for (int i = 0; i < r; ++i) src += static_cast<std::int64_t>(idx[i]) * in_strides[perm[i]];
    map[static_cast<std::size_t>(flat)] = src;
    for (int i = r - 1; i >= 0; --i) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  return map;
}

}  // namespace

Tensor permute(const Tensor& a, const std::vector<int>& perm) {
  const int r = a.rank();
  if (static_cast<int>(perm.size()) != r)
    throw ShapeError("permute: axis list size " + std::to_string(perm.size()) +
                     " for rank " + std::to_string(r));
  std::vector<bool> seen(static_cast<std::size_t>(r), false);
  for (int p : perm) {
    if (p < 0 || p >= r || seen[static_cast<std::size_t>(p)])
      throw ShapeError("permute: invalid axis permutation");
    seen[static_cast<std::size_t>(p)] = true;
  }
  std::vector<int> out_shape(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i)
    out_shape[static_cast<std::size_t>(i)] = a.dim(perm[static_cast<std::size_t>(i)]);
  auto map = std::make_shared<std::vector<std::int64_t>>(
      permute_source_indices(a.shape(), perm));
  return remap_op(a, std::move(out_shape), std::move(map));
}

Tensor split_heads(const Tensor& x, int n_heads, bool transpose_last) {
  if (x.rank() != 3) throw ShapeError("split_heads: input " + x.shape_str());
  const int b = x.dim(0), t = x.dim(1), d = x.dim(2);
  if (d % n_heads != 0)
    throw ShapeError("split_heads: width " + std::to_string(d) +
                     " not divisible by " + std::to_string(n_heads) + " heads");
  const int dh = d / n_heads;
  auto map = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(x.numel()));
  std::size_t o = 0;
  if (!transpose_last) {  // [b, t, h, dh] -> [b*h, t, dh]
    for (int bi = 0; bi < b; ++bi)
      for (int h = 0; h < n_heads; ++h)
        for (int ti = 0; ti < t; ++ti)
          for (int c = 0; c < dh; ++c)
            (*map)[o++] = (static_cast<std::int64_t>(bi) * t + ti) * d + h * dh + c;
    return remap_op(x, {b * n_heads, t, dh}, std::move(map));
  }
  for (int bi = 0; bi < b; ++bi)  // -> [b*h, dh, t], keys ready for q . k^T
    for (int h = 0; h < n_heads; ++h)
      for (int c = 0; c < dh; ++c)
        for (int ti = 0; ti < t; ++ti)
          (*map)[o++] = (static_cast<std::int64_t>(bi) * t + ti) * d + h * dh + c;
  return remap_op(x, {b * n_heads, dh, t}, std::move(map));
}

Tensor merge_heads(const Tensor& x, int batch, int n_heads) {
  if (x.rank() != 3 || x.dim(0) != batch * n_heads)
    throw ShapeError("merge_heads: input " + x.shape_str());
  const int t = x.dim(1), dh = x.dim(2);
  auto map = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(x.numel()));
  std::size_t o = 0;
  for (int bi = 0; bi < batch; ++bi)
    for (int ti = 0; ti < t; ++ti)
      for (int h = 0; h < n_heads; ++h)
        for (int c = 0; c < dh; ++c)
          (*map)[o++] = ((static_cast<std::int64_t>(bi) * n_heads + h) * t + ti) * dh + c;
  return remap_op(x, {batch, t, n_heads * dh}, std::move(map));
}

Tensor concat_lastdim(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank())
    throw ShapeError("concat: rank mismatch " + a.shape_str() + " vs " + b.shape_str());
  const int r = a.rank();
  for (int i = 0; i + 1 < r; ++i)
    if (a.dim(i) != b.dim(i))
      throw ShapeError("concat: shape " + a.shape_str() + " vs " + b.shape_str());
  const int da = a.dim(r - 1), db = b.dim(r - 1);
  std::vector<int> out_shape = a.shape();
  out_shape.back() = da + db;
  const std::int64_t rows = a.numel() / da;
  Tensor out = Tensor::zeros(out_shape, a.requires_grad() || b.requires_grad());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::int64_t row = 0; row < rows; ++row) {
    std::memcpy(po + row * (da + db), pa + row * da, sizeof(double) * da);
    std::memcpy(po + row * (da + db) + da, pb + row * db, sizeof(double) * db);
  }
  if (want_tape(out)) {
    auto an = a.node_ptr(), bn = b.node_ptr(), on = out.node_ptr();
    record([an, bn, on, rows, da, db](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      if (an->requires_grad) {
        double* ga = ctx.accumulate_into(an.get());
        for (std::int64_t row = 0; row < rows; ++row)
          for (int i = 0; i < da; ++i) ga[row * da + i] += g[row * (da + db) + i];
      }
      if (bn->requires_grad) {
        double* gb = ctx.accumulate_into(bn.get());
        for (std::int64_t row = 0; row < rows; ++row)
          for (int i = 0; i < db; ++i) gb[row * db + i] += g[row * (da + db) + da + i];
      }
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor expand_last(const Tensor& a, int d) {
  if (d <= 0) throw ShapeError("expand_last: non-positive width");
  std::vector<int> out_shape = a.shape();
  out_shape.push_back(d);
  const std::int64_t n = a.numel();
  Tensor out = Tensor::zeros(out_shape, a.requires_grad());
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) po[i * d + j] = pa[i];
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, n, d](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      for (std::int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += g[i * d + j];
        da[i] += s;
      }
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  const std::int64_t n = a.numel();
  double s = 0.0;
  const double* pa = a.data();
  for (std::int64_t i = 0; i < n; ++i) s += pa[i];
  Tensor out = Tensor::from_data({1}, {s}, a.requires_grad());
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, n](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      for (std::int64_t i = 0; i < n; ++i) da[i] += g[0];
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor masked_softmax(const Tensor& a, const Tensor& mask_bias) {
  if (mask_bias.defined()) {
    if (mask_bias.requires_grad())
      throw ContractError("masked_softmax: mask bias must be constant");
    broadcast_repeats(a, mask_bias, "masked_softmax");
  }
  const int d = a.dim(-1);
  const std::int64_t rows = a.numel() / d;
  const std::int64_t mask_rows = mask_bias.defined() ? mask_bias.numel() / d : 0;
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const double* pa = a.data();
  const double* pm = mask_bias.defined() ? mask_bias.data() : nullptr;
  double* po = out.data();
  for (std::int64_t row = 0; row < rows; ++row) {
    const double* x = pa + row * d;
    const double* m = pm ? pm + (row % mask_rows) * d : nullptr;
    double* y = po + row * d;
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
      y[i] = m ? x[i] + m[i] : x[i];
      mx = std::max(mx, y[i]);
    }
    double denom = 0.0;
    for (int i = 0; i < d; ++i) {
      y[i] = std::exp(y[i] - mx);
      denom += y[i];
    }
    if (!std::isfinite(denom) || denom <= 0.0)
      throw NumericError("softmax: non-finite input row");
    for (int i = 0; i < d; ++i) y[i] /= denom;
  }
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, rows, d](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      const double* y = on->data.data();
      for (std::int64_t row = 0; row < rows; ++row) {
        const double* yr = y + row * d;
        const double* gr = g + row * d;
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += gr[i] * yr[i];
        double* dr = da + row * d;
        for (int i = 0; i < d; ++i) dr[i] += yr[i] * (gr[i] - dot);
      }
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor softmax_lastdim(const Tensor& a) { return masked_softmax(a, Tensor()); }

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias) {
  constexpr double kEps = 1e-6;
  const int d = a.dim(-1);
  if (gain.rank() != 1 || bias.rank() != 1 || gain.dim(0) != d || bias.dim(0) != d)
    throw ShapeError("layer_norm: gain/bias " + gain.shape_str() + "/" +
                     bias.shape_str() + " for input " + a.shape_str());
  const std::int64_t rows = a.numel() / d;
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad() || gain.requires_grad() ||
                                            bias.requires_grad());
  // normalized values and inverse stddev are needed again in backward
  auto xhat = std::make_shared<std::vector<double>>(a.vec().size());
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows));
  const double* pa = a.data();
  const double* pg = gain.data();
  const double* pb = bias.data();
  double* po = out.data();
  for (std::int64_t row = 0; row < rows; ++row) {
    const double* x = pa + row * d;
    double mean = 0.0;
    for (int i = 0; i < d; ++i) mean += x[i];
    mean /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= d;
    const double s = 1.0 / std::sqrt(var + kEps);
    (*inv_std)[static_cast<std::size_t>(row)] = s;
    double* xh = xhat->data() + row * d;
    double* y = po + row * d;
    for (int i = 0; i < d; ++i) {
      xh[i] = (x[i] - mean) * s;
      y[i] = xh[i] * pg[i] + pb[i];
    }
  }
  if (want_tape(out)) {
    auto an = a.node_ptr(), gn = gain.node_ptr(), bn = bias.node_ptr(), on = out.node_ptr();
    record([an, gn, bn, on, xhat, inv_std, rows, d](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      if (gn->requires_grad) {
        double* dg = ctx.accumulate_into(gn.get());
        for (std::int64_t row = 0; row < rows; ++row)
          for (int i = 0; i < d; ++i) dg[i] += g[row * d + i] * (*xhat)[row * d + i];
      }
      if (bn->requires_grad) {
        double* db = ctx.accumulate_into(bn.get());
        for (std::int64_t row = 0; row < rows; ++row)
          for (int i = 0; i < d; ++i) db[i] += g[row * d + i];
      }
      if (an->requires_grad) {
        double* da = ctx.accumulate_into(an.get());
        const double* gaind = gn->data.data();
        for (std::int64_t row = 0; row < rows; ++row) {
          const double* gr = g + row * d;
          const double* xh = xhat->data() + row * d;
          const double s = (*inv_std)[static_cast<std::size_t>(row)];
          double sum_h = 0.0, sum_hx = 0.0;
          for (int i = 0; i < d; ++i) {
            const double h = gr[i] * gaind[i];
            sum_h += h;
            sum_hx += h * xh[i];
          }
          for (int i = 0; i < d; ++i) {
            const double h = gr[i] * gaind[i];
            da[row * d + i] += s * (h - sum_h / d - xh[i] * sum_hx / d);
          }
        }
      }
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, const IdMatrix& ids) {
  if (table.rank() != 2)
    throw ShapeError("embedding_lookup: table " + table.shape_str());
  const int v = table.dim(0), d = table.dim(1);
  for (int id : ids.ids)
    if (id < 0 || id >= v)
      throw IndexError("embedding_lookup: id " + std::to_string(id) +
                       " outside table of " + std::to_string(v) + " rows");
  Tensor out = Tensor::zeros({ids.rows, ids.cols, d}, table.requires_grad());
  const double* pt = table.data();
  double* po = out.data();
  const std::int64_t positions = static_cast<std::int64_t>(ids.rows) * ids.cols;
  for (std::int64_t p = 0; p < positions; ++p)
    std::memcpy(po + p * d, pt + static_cast<std::int64_t>(ids.ids[static_cast<std::size_t>(p)]) * d,
                sizeof(double) * d);
  if (want_tape(out)) {
    auto tn = table.node_ptr(), on = out.node_ptr();
    auto idcopy = std::make_shared<std::vector<int>>(ids.ids);
    record([tn, on, idcopy, d](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* dt = ctx.accumulate_into(tn.get());
      for (std::size_t p = 0; p < idcopy->size(); ++p) {
        double* row = dt + static_cast<std::int64_t>((*idcopy)[p]) * d;
        const double* gr = g + static_cast<std::int64_t>(p) * d;
        for (int i = 0; i < d; ++i) row[i] += gr[i];
      }
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, const IdMatrix& targets, int pad_id,
                     double label_smoothing) {
  if (logits.rank() != 3)
    throw ShapeError("cross_entropy: logits " + logits.shape_str());
  const int b = logits.dim(0), t = logits.dim(1), v = logits.dim(2);
  if (targets.rows != b || targets.cols != t)
    throw ShapeError("cross_entropy: targets " + std::to_string(targets.rows) +
                     "x" + std::to_string(targets.cols) + " for logits " +
                     logits.shape_str());
  for (int id : targets.ids)
    if (id < 0 || id >= v)
      throw IndexError("cross_entropy: target id " + std::to_string(id) +
                       " outside vocabulary of " + std::to_string(v));
  const std::int64_t positions = static_cast<std::int64_t>(b) * t;
  // per-position softmax probabilities, reused by the gradient
  auto probs = std::make_shared<std::vector<double>>(logits.vec().size());
  std::int64_t live = 0;
  double total = 0.0;
  const double* pl = logits.data();
  for (std::int64_t p = 0; p < positions; ++p) {
    if (targets.ids[static_cast<std::size_t>(p)] == pad_id) continue;
    ++live;
    const double* x = pl + p * v;
    double m = x[0];
    for (int i = 1; i < v; ++i) m = std::max(m, x[i]);
    double denom = 0.0;
    double* pr = probs->data() + p * v;
    for (int i = 0; i < v; ++i) {
      pr[i] = std::exp(x[i] - m);
      denom += pr[i];
    }
    if (!std::isfinite(denom) || denom <= 0.0)
      throw NumericError("cross_entropy: non-finite logits row");
    const double lse = m + std::log(denom);
    for (int i = 0; i < v; ++i) pr[i] /= denom;
    const int tgt = targets.ids[static_cast<std::size_t>(p)];
    if (label_smoothing == 0.0) {
      total += lse - x[tgt];
    } else {
      double mean_logit = 0.0;
      for (int i = 0; i < v; ++i) mean_logit += x[i];
      total += lse - (1.0 - label_smoothing) * x[tgt] -
               label_smoothing * mean_logit / v;
    }
  }
  if (live == 0) throw ContractError("cross_entropy: every position is padding");
  Tensor out = Tensor::from_data({1}, {total / static_cast<double>(live)},
                                 logits.requires_grad());
  if (want_tape(out)) {
    auto ln = logits.node_ptr(), on = out.node_ptr();
    auto tgts = std::make_shared<IdMatrix>(targets);
    record([ln, on, tgts, probs, pad_id, label_smoothing, v, positions, live](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      const double w = g[0] / static_cast<double>(live);
      double* dl = ctx.accumulate_into(ln.get());
      for (std::int64_t p = 0; p < positions; ++p) {
        const int tgt = tgts->ids[static_cast<std::size_t>(p)];
        if (tgt == pad_id) continue;
        const double* pr = probs->data() + p * v;
        double* dr = dl + p * v;
        for (int i = 0; i < v; ++i) {
          double q = label_smoothing / v + (i == tgt ? 1.0 - label_smoothing : 0.0);
          dr[i] += w * (pr[i] - q);
        }
      }
      ctx.finalize(on.get());
    });
  }
  return out;
}

Tensor dropout(const Tensor& a, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ContractError("dropout: rate " + std::to_string(rate) + " outside [0, 1)");
  if (!training || rate == 0.0) return a;
  const std::int64_t n = a.numel();
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n));
  Tensor out = Tensor::zeros(a.shape(), a.requires_grad());
  const double* pa = a.data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) {
    const double m = rng.next_double() < rate ? 0.0 : keep_scale;
    (*mask)[static_cast<std::size_t>(i)] = m;
    po[i] = pa[i] * m;
  }
  if (want_tape(out)) {
    auto an = a.node_ptr(), on = out.node_ptr();
    record([an, on, mask, n](BackwardCtx& ctx) {
      const double* g = ctx.incoming(on.get());
      if (!g) return;
      double* da = ctx.accumulate_into(an.get());
      for (std::int64_t i = 0; i < n; ++i)
        da[i] += g[i] * (*mask)[static_cast<std::size_t>(i)];
      ctx.finalize(on.get());
    });
  }
  return out;
}

}  // namespace mf::ops
