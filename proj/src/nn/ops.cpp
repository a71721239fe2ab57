//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#include "hbgsa/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

namespace hbgsa::nn {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
Eigen::Map<RowMat<T>> mat(Tensor<T> &t, std::size_t rows, std::size_t cols) {
  return { t.data(), static_cast<Eigen::Index>(rows),
           static_cast<Eigen::Index>(cols) };
}

template <class T>
Eigen::Map<const RowMat<T>> mat(const Tensor<T> &t, std::size_t rows,
                                std::size_t cols) {
  return { t.data(), static_cast<Eigen::Index>(rows),
           static_cast<Eigen::Index>(cols) };
}

template <class T>
Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> vec(Tensor<T> &t) {
  return { t.data(), static_cast<Eigen::Index>(t.size()) };
}

template <class T>
Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> vec(const Tensor<T> &t) {
  return { t.data(), static_cast<Eigen::Index>(t.size()) };
}

[[noreturn]] void shape_mismatch(const char *op, const Shape &a,
                                 const Shape &b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a)
                   + " and " + shape_str(b));
}

void require_rank(const char *op, const Shape &s, std::size_t rank) {
  if (s.size() != rank)
    throw ShapeError(std::string(op) + ": expected rank "
                     + std::to_string(rank) + ", got " + shape_str(s));
}

// Below this many rows, products are evaluated one row at a time so each
// output row depends only on its input row (bitwise, independent of the row's
// position in the batch).
constexpr std::size_t kRowwiseThreshold = 32;

template <class T>
void rowwise_product(const Tensor<T> &x, const Tensor<T> &w, Tensor<T> &y,
                     std::size_t m, std::size_t k, std::size_t n) {
  auto X = mat(x, m, k);
  auto W = mat(w, k, n);
  auto Y = mat(y, m, n);
  if (m <= kRowwiseThreshold) {
    for (std::size_t i = 0; i < m; ++i)
      Y.row(i).noalias() = X.row(i) * W;
  } else {
    Y.noalias() = X * W;
  }
}

}  // namespace

template <class T>
Var add(Graph<T> &g, Var a, Var b) {
  const auto &va = g.value(a);
  const auto &vb = g.value(b);
  if (va.shape() != vb.shape())
    shape_mismatch("add", va.shape(), vb.shape());
  Tensor<T> out = va;
  vec(out) += vec(vb);
  return g.emplace(std::move(out), { a, b }, [a, b](Graph<T> &g, Var self) {
    const auto &dy = g.grad(self);
    if (g.requires_grad(a))
      vec(g.grad(a)) += vec(dy);
    if (g.requires_grad(b))
      vec(g.grad(b)) += vec(dy);
  });
}

template <class T>
Var scale(Graph<T> &g, Var a, T factor) {
  Tensor<T> out = g.value(a);
  vec(out) *= factor;
  return g.emplace(std::move(out), { a }, [a, factor](Graph<T> &g, Var self) {
    vec(g.grad(a)) += factor * vec(g.grad(self));
  });
}

template <class T>
Var mul(Graph<T> &g, Var a, Var b) {
  const auto &va = g.value(a);
  const auto &vb = g.value(b);
  if (va.shape() != vb.shape())
    shape_mismatch("mul", va.shape(), vb.shape());
  Tensor<T> out = va;
  vec(out).array() *= vec(vb).array();
  return g.emplace(std::move(out), { a, b }, [a, b](Graph<T> &g, Var self) {
    const auto &dy = g.grad(self);
    if (g.requires_grad(a))
      vec(g.grad(a)).array() += vec(dy).array() * vec(g.value(b)).array();
    if (g.requires_grad(b))
      vec(g.grad(b)).array() += vec(dy).array() * vec(g.value(a)).array();
  });
}

template <class T>
Var sum(Graph<T> &g, Var a) {
  T total = vec(g.value(a)).sum();
  return g.emplace(Tensor<T>::scalar(total), { a },
                   [a](Graph<T> &g, Var self) {
                     T dy = g.grad(self)[0];
                     vec(g.grad(a)).array() += dy;
                   });
}

template <class T>
Var matmul(Graph<T> &g, Var a, Var b) {
  const auto &va = g.value(a);
  const auto &vb = g.value(b);
  require_rank("matmul", va.shape(), 2);
  require_rank("matmul", vb.shape(), 2);
  const std::size_t m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  if (vb.dim(0) != k)
    shape_mismatch("matmul", va.shape(), vb.shape());
  Tensor<T> out({ m, n });
  rowwise_product(va, vb, out, m, k, n);
  return g.emplace(std::move(out), { a, b },
                   [a, b, m, k, n](Graph<T> &g, Var self) {
                     auto dY = mat(g.grad(self), m, n);
                     if (g.requires_grad(a))
                       mat(g.grad(a), m, k).noalias() +=
                           dY * mat(g.value(b), k, n).transpose();
                     if (g.requires_grad(b))
                       mat(g.grad(b), k, n).noalias() +=
                           mat(g.value(a), m, k).transpose() * dY;
                   });
}

template <class T>
Var matmul_nt(Graph<T> &g, Var a, Var b) {
  const auto &va = g.value(a);
  const auto &vb = g.value(b);
  require_rank("matmul_nt", va.shape(), 2);
  require_rank("matmul_nt", vb.shape(), 2);
  const std::size_t m = va.dim(0), k = va.dim(1), n = vb.dim(0);
  if (vb.dim(1) != k)
    shape_mismatch("matmul_nt", va.shape(), vb.shape());
  Tensor<T> out({ m, n });
  mat(out, m, n).noalias() = mat(va, m, k) * mat(vb, n, k).transpose();
  return g.emplace(std::move(out), { a, b },
                   [a, b, m, k, n](Graph<T> &g, Var self) {
                     auto dY = mat(g.grad(self), m, n);
                     if (g.requires_grad(a))
                       mat(g.grad(a), m, k).noalias() +=
                           dY * mat(g.value(b), n, k);
                     if (g.requires_grad(b))
                       mat(g.grad(b), n, k).noalias() +=
                           dY.transpose() * mat(g.value(a), m, k);
                   });
}

template <class T>
Var linear(Graph<T> &g, Var x, Var weight, Var bias) {
  const auto &vx = g.value(x);
  const auto &vw = g.value(weight);
  require_rank("linear", vw.shape(), 2);
  if (vx.rank() == 0 || vx.shape().back() != vw.dim(0))
    shape_mismatch("linear", vx.shape(), vw.shape());
  const std::size_t in = vw.dim(0), out_dim = vw.dim(1);
  const std::size_t m = vx.size() / in;
  if (bias.valid() && g.value(bias).shape() != Shape { out_dim })
    shape_mismatch("linear", vw.shape(), g.value(bias).shape());

  Shape out_shape = vx.shape();
  out_shape.back() = out_dim;
  Tensor<T> out(out_shape);
  rowwise_product(vx, vw, out, m, in, out_dim);
  if (bias.valid())
    mat(out, m, out_dim).rowwise() += vec(g.value(bias)).transpose();

  return g.emplace(std::move(out), { x, weight, bias },
                   [x, weight, bias, m, in, out_dim](Graph<T> &g, Var self) {
                     auto dY = mat(g.grad(self), m, out_dim);
                     if (g.requires_grad(x))
                       mat(g.grad(x), m, in).noalias() +=
                           dY * mat(g.value(weight), in, out_dim).transpose();
                     if (g.requires_grad(weight))
                       mat(g.grad(weight), in, out_dim).noalias() +=
                           mat(g.value(x), m, in).transpose() * dY;
                     if (bias.valid() && g.requires_grad(bias))
                       vec(g.grad(bias)) += dY.colwise().sum().transpose();
                   });
}

namespace {

// Column block k of row t holds input row t + (k - half) * dilation.
template <class T>
void im2col(const Tensor<T> &x, Tensor<T> &cols, std::size_t len,
            std::size_t cin, std::size_t ksize, int dilation) {
  // Column c * K + k holds tap k of channel c, which matches the row-major
  // [C_out, C_in, K] kernel layout so the kernels multiply without a copy.
  const auto half = static_cast<std::ptrdiff_t>(ksize / 2);
  const std::size_t width = ksize * cin;
  cols.fill(T(0));
  for (std::size_t t = 0; t < len; ++t) {
    T *row = cols.data() + t * width;
    for (std::size_t k = 0; k < ksize; ++k) {
      std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t)
                           + (static_cast<std::ptrdiff_t>(k) - half) * dilation;
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(len))
        continue;
      const T *in = x.data() + src * cin;
      for (std::size_t c = 0; c < cin; ++c)
        row[c * ksize + k] = in[c];
    }
  }
}

}  // namespace

template <class T>
Var conv1d(Graph<T> &g, Var x, Var kernels, Var bias, int dilation) {
  const auto &vx = g.value(x);
  const auto &vw = g.value(kernels);
  require_rank("conv1d", vx.shape(), 2);
  require_rank("conv1d", vw.shape(), 3);
  const std::size_t len = vx.dim(0), cin = vx.dim(1);
  const std::size_t cout = vw.dim(0), ksize = vw.dim(2);
  if (vw.dim(1) != cin)
    shape_mismatch("conv1d", vx.shape(), vw.shape());
  if (ksize % 2 == 0)
    throw ConfigError("conv1d: kernel size must be odd, got "
                      + std::to_string(ksize));
  if (dilation < 1)
    throw ConfigError("conv1d: dilation must be >= 1, got "
                      + std::to_string(dilation));
  if (bias.valid() && g.value(bias).shape() != Shape { cout })
    shape_mismatch("conv1d", vw.shape(), g.value(bias).shape());

  const std::size_t width = ksize * cin;
  Tensor<T> cols({ len, width });
  im2col(vx, cols, len, cin, ksize, dilation);
  Tensor<T> out({ len, cout });
  mat(out, len, cout).noalias() =
      mat(cols, len, width) * mat(vw, cout, width).transpose();
  if (bias.valid())
    mat(out, len, cout).rowwise() += vec(g.value(bias)).transpose();

  return g.emplace(
      std::move(out), { x, kernels, bias },
      [=](Graph<T> &g, Var self) {
        auto dY = mat(g.grad(self), len, cout);
        if (g.requires_grad(kernels)) {
          Tensor<T> cols({ len, width });
          im2col(g.value(x), cols, len, cin, ksize, dilation);
          mat(g.grad(kernels), cout, width).noalias() +=
              dY.transpose() * mat(cols, len, width);
        }
        if (g.requires_grad(x)) {
          RowMat<T> dcols = dY * mat(g.value(kernels), cout, width);
          auto &dx = g.grad(x);
          const auto half = static_cast<std::ptrdiff_t>(ksize / 2);
          for (std::size_t t = 0; t < len; ++t) {
            const T *src = dcols.data() + t * width;
            for (std::size_t k = 0; k < ksize; ++k) {
              std::ptrdiff_t dst =
                  static_cast<std::ptrdiff_t>(t)
                  + (static_cast<std::ptrdiff_t>(k) - half) * dilation;
              if (dst < 0 || dst >= static_cast<std::ptrdiff_t>(len))
                continue;
              T *d = dx.data() + dst * cin;
              for (std::size_t c = 0; c < cin; ++c)
                d[c] += src[c * ksize + k];
            }
          }
        }
        if (bias.valid() && g.requires_grad(bias))
          vec(g.grad(bias)) += dY.colwise().sum().transpose();
      });
}

template <class T>
Var layer_norm(Graph<T> &g, Var x, Var gamma, Var beta, T eps) {
  const auto &vx = g.value(x);
  const std::size_t d = vx.cols(), rows = vx.rows();
  if (g.value(gamma).shape() != Shape { d })
    shape_mismatch("layer_norm", vx.shape(), g.value(gamma).shape());
  if (g.value(beta).shape() != Shape { d })
    shape_mismatch("layer_norm", vx.shape(), g.value(beta).shape());

  Tensor<T> xhat(vx.shape());
  Tensor<T> inv_std({ rows });
  Tensor<T> out(vx.shape());
  const auto &gm = g.value(gamma);
  const auto &bt = g.value(beta);
  for (std::size_t r = 0; r < rows; ++r) {
    const T *row = vx.data() + r * d;
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j)
      mean += row[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j)
      var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      T h = (row[j] - mean) * inv;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gm[j] + bt[j];
    }
  }

  return g.emplace(
      std::move(out), { x, gamma, beta },
      [x, gamma, beta, d, rows, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Graph<T> &g, Var self) {
        const auto &dy = g.grad(self);
        if (g.requires_grad(gamma)) {
          auto &dg = g.grad(gamma);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j)
              dg[j] += dy[r * d + j] * xhat[r * d + j];
        }
        if (g.requires_grad(beta)) {
          auto &db = g.grad(beta);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j)
              db[j] += dy[r * d + j];
        }
        if (g.requires_grad(x)) {
          const auto &gm = g.value(gamma);
          auto &dx = g.grad(x);
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_dh = 0, mean_dh_h = 0;
            for (std::size_t j = 0; j < d; ++j) {
              T dh = dy[r * d + j] * gm[j];
              mean_dh += dh;
              mean_dh_h += dh * xhat[r * d + j];
            }
            mean_dh /= static_cast<T>(d);
            mean_dh_h /= static_cast<T>(d);
            for (std::size_t j = 0; j < d; ++j) {
              T dh = dy[r * d + j] * gm[j];
              dx[r * d + j] +=
                  inv_std[r] * (dh - mean_dh - xhat[r * d + j] * mean_dh_h);
            }
          }
        }
      });
}

template <class T>
Var gelu(Graph<T> &g, Var x) {
  constexpr T kC = T(0.7978845608028654);  // sqrt(2/pi)
  constexpr T kA = T(0.044715);
  const auto &vx = g.value(x);
  Tensor<T> out(vx.shape());
  Tensor<T> th(vx.shape());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    T v = vx[i];
    T t = std::tanh(kC * (v + kA * v * v * v));
    th[i] = t;
    out[i] = T(0.5) * v * (T(1) + t);
  }
  return g.emplace(std::move(out), { x },
                   [x, th = std::move(th)](Graph<T> &g, Var self) {
                     const auto &vx = g.value(x);
                     const auto &dy = g.grad(self);
                     auto &dx = g.grad(x);
                     for (std::size_t i = 0; i < vx.size(); ++i) {
                       T v = vx[i], t = th[i];
                       T d = T(0.5) * (T(1) + t)
                             + T(0.5) * v * (T(1) - t * t) * kC
                                   * (T(1) + T(3) * kA * v * v);
                       dx[i] += dy[i] * d;
                     }
                   });
}

template <class T>
Var relu(Graph<T> &g, Var x) {
  Tensor<T> out = g.value(x);
  for (auto &v: out.values())
    v = v > T(0) ? v : T(0);
  return g.emplace(std::move(out), { x }, [x](Graph<T> &g, Var self) {
    const auto &vx = g.value(x);
    const auto &dy = g.grad(self);
    auto &dx = g.grad(x);
    for (std::size_t i = 0; i < vx.size(); ++i)
      if (vx[i] > T(0))
        dx[i] += dy[i];
  });
}

template <class T>
Var prelu(Graph<T> &g, Var x, Var slope) {
  if (g.value(slope).size() != 1)
    throw ShapeError("prelu: slope must hold one element, got "
                     + shape_str(g.value(slope).shape()));
  const T a = g.value(slope)[0];
  Tensor<T> out = g.value(x);
  for (auto &v: out.values())
    v = v > T(0) ? v : a * v;
  return g.emplace(std::move(out), { x, slope },
                   [x, slope](Graph<T> &g, Var self) {
                     const auto &vx = g.value(x);
                     const auto &dy = g.grad(self);
                     const T a = g.value(slope)[0];
                     if (g.requires_grad(x)) {
                       auto &dx = g.grad(x);
                       for (std::size_t i = 0; i < vx.size(); ++i)
                         dx[i] += dy[i] * (vx[i] > T(0) ? T(1) : a);
                     }
                     if (g.requires_grad(slope)) {
                       T da = 0;
                       for (std::size_t i = 0; i < vx.size(); ++i)
                         if (!(vx[i] > T(0)))
                           da += dy[i] * vx[i];
                       g.grad(slope)[0] += da;
                     }
                   });
}

template <class T>
Var softmax_rows(Graph<T> &g, Var x) {
  const auto &vx = g.value(x);
  const std::size_t d = vx.cols(), rows = vx.rows();
  Tensor<T> out(vx.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T *in = vx.data() + r * d;
    T *o = out.data() + r * d;
    T mx = *std::max_element(in, in + d);
    T total = 0;
    for (std::size_t j = 0; j < d; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (std::size_t j = 0; j < d; ++j)
      o[j] /= total;
  }
  return g.emplace(std::move(out), { x }, [x, d, rows](Graph<T> &g, Var self) {
    const auto &y = g.value(self);
    const auto &dy = g.grad(self);
    auto &dx = g.grad(x);
    for (std::size_t r = 0; r < rows; ++r) {
      const T *yr = y.data() + r * d;
      const T *dyr = dy.data() + r * d;
      T dot = 0;
      for (std::size_t j = 0; j < d; ++j)
        dot += yr[j] * dyr[j];
      T *dxr = dx.data() + r * d;
      for (std::size_t j = 0; j < d; ++j)
        dxr[j] += yr[j] * (dyr[j] - dot);
    }
  });
}

template <class T>
Var dropout(Graph<T> &g, Var x, double p, std::mt19937_64 &rng) {
  if (p < 0.0 || p >= 1.0)
    throw ConfigError("dropout: p must lie in [0, 1), got "
                      + std::to_string(p));
  if (p == 0.0)
    return x;
  const auto &vx = g.value(x);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  Tensor<T> mask(vx.shape());
  std::bernoulli_distribution keep(1.0 - p);
  for (auto &m: mask.values())
    m = keep(rng) ? keep_scale : T(0);
  Tensor<T> out = vx;
  vec(out).array() *= vec(mask).array();
  return g.emplace(std::move(out), { x },
                   [x, mask = std::move(mask)](Graph<T> &g, Var self) {
                     vec(g.grad(x)).array() +=
                         vec(g.grad(self)).array() * vec(mask).array();
                   });
}

template <class T>
Var adaptive_max_pool(Graph<T> &g, Var x, std::size_t rows) {
  const auto &vx = g.value(x);
  require_rank("adaptive_max_pool", vx.shape(), 2);
  const std::size_t len = rows == 0 ? vx.dim(0) : rows, c = vx.dim(1);
  if (len == 0)
    throw ShapeError("adaptive_max_pool: empty sequence");
  if (len > vx.dim(0))
    throw ShapeError("adaptive_max_pool: " + std::to_string(len)
                     + " rows requested from " + std::to_string(vx.dim(0)));
  Tensor<T> out({ c });
  std::vector<std::size_t> argmax(c, 0);
  for (std::size_t j = 0; j < c; ++j)
    out[j] = vx[j];
  for (std::size_t t = 1; t < len; ++t) {
    const T *row = vx.data() + t * c;
    for (std::size_t j = 0; j < c; ++j) {
      if (row[j] > out[j]) {
        out[j] = row[j];
        argmax[j] = t;
      }
    }
  }
  return g.emplace(std::move(out), { x },
                   [x, c, argmax = std::move(argmax)](Graph<T> &g, Var self) {
                     const auto &dy = g.grad(self);
                     auto &dx = g.grad(x);
                     for (std::size_t j = 0; j < c; ++j)
                       dx[argmax[j] * c + j] += dy[j];
                   });
}

template <class T>
Var embedding(Graph<T> &g, Var table, std::span<const std::int32_t> indices) {
  const auto &vt = g.value(table);
  require_rank("embedding", vt.shape(), 2);
  const std::size_t vocab = vt.dim(0), d = vt.dim(1);
  std::vector<std::int32_t> idx(indices.begin(), indices.end());
  Tensor<T> out({ idx.size(), d });
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab)
      throw ShapeError("embedding: index " + std::to_string(idx[i])
                       + " outside table of " + std::to_string(vocab)
                       + " rows");
    std::copy_n(vt.data() + idx[i] * d, d, out.data() + i * d);
  }
  return g.emplace(std::move(out), { table },
                   [table, d, idx = std::move(idx)](Graph<T> &g, Var self) {
                     const auto &dy = g.grad(self);
                     auto &dt = g.grad(table);
                     for (std::size_t i = 0; i < idx.size(); ++i)
                       for (std::size_t j = 0; j < d; ++j)
                         dt[idx[i] * d + j] += dy[i * d + j];
                   });
}

template <class T>
Var concat(Graph<T> &g, std::span<const Var> parts) {
  std::vector<Var> ps(parts.begin(), parts.end());
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (Var p: ps) {
    require_rank("concat", g.value(p).shape(), 1);
    offsets.push_back(total);
    total += g.value(p).size();
  }
  Tensor<T> out({ total });
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto &v = g.value(ps[i]);
    std::copy_n(v.data(), v.size(), out.data() + offsets[i]);
  }
  return g.emplace(std::move(out), std::span<const Var>(ps),
                   [ps, offsets](Graph<T> &g, Var self) {
                     const auto &dy = g.grad(self);
                     for (std::size_t i = 0; i < ps.size(); ++i) {
                       if (!g.requires_grad(ps[i]))
                         continue;
                       auto &dx = g.grad(ps[i]);
                       for (std::size_t j = 0; j < dx.size(); ++j)
                         dx[j] += dy[offsets[i] + j];
                     }
                   });
}

template <class T>
Var stack(Graph<T> &g, std::span<const Var> scalars) {
  for (Var s: scalars)
    if (g.value(s).shape() != Shape { 1 })
      throw ShapeError("stack: expected single-element tensors, got "
                       + shape_str(g.value(s).shape()));
  return concat(g, scalars);
}

template <class T>
Var neighbor_sum(Graph<T> &g, Var h,
                 const std::vector<std::vector<int>> &neighbors) {
  const auto &vh = g.value(h);
  require_rank("neighbor_sum", vh.shape(), 2);
  const std::size_t n = vh.dim(0), d = vh.dim(1);
  if (neighbors.size() != n)
    throw ShapeError("neighbor_sum: " + std::to_string(neighbors.size())
                     + " neighbor lists for " + std::to_string(n) + " nodes");
  Tensor<T> out({ n, d });
  for (std::size_t i = 0; i < n; ++i) {
    T *o = out.data() + i * d;
    for (int j: neighbors[i]) {
      if (j < 0 || static_cast<std::size_t>(j) >= n)
        throw ShapeError("neighbor_sum: neighbor index " + std::to_string(j)
                         + " out of range");
      const T *src = vh.data() + j * d;
      for (std::size_t c = 0; c < d; ++c)
        o[c] += src[c];
    }
  }
  return g.emplace(std::move(out), { h },
                   [h, d, neighbors](Graph<T> &g, Var self) {
                     const auto &dy = g.grad(self);
                     auto &dh = g.grad(h);
                     for (std::size_t i = 0; i < neighbors.size(); ++i)
                       for (int j: neighbors[i])
                         for (std::size_t c = 0; c < d; ++c)
                           dh[j * d + c] += dy[i * d + c];
                   });
}

template <class T>
Var self_attention_1d(Graph<T> &g, Var x, Var wq, Var wk, Var wv) {
  const auto &vx = g.value(x);
  require_rank("self_attention_1d", vx.shape(), 2);
  const std::size_t d = vx.dim(1);
  for (Var w: { wq, wk, wv })
    if (g.value(w).shape() != Shape { d, d })
      shape_mismatch("self_attention_1d", vx.shape(), g.value(w).shape());
  Var q = matmul(g, x, wq);
  Var k = matmul(g, x, wk);
  Var v = matmul(g, x, wv);
  Var logits = scale(g, matmul_nt(g, q, k),
                     static_cast<T>(1.0 / std::sqrt(static_cast<double>(d))));
  Var weights = softmax_rows(g, logits);
  return add(g, matmul(g, weights, v), x);
}

#define HBGSA_INSTANTIATE_OPS(T)                                              \
  template Var add<T>(Graph<T> &, Var, Var);                                  \
  template Var scale<T>(Graph<T> &, Var, T);                                  \
  template Var mul<T>(Graph<T> &, Var, Var);                                  \
  template Var sum<T>(Graph<T> &, Var);                                       \
  template Var matmul<T>(Graph<T> &, Var, Var);                               \
  template Var matmul_nt<T>(Graph<T> &, Var, Var);                            \
  template Var linear<T>(Graph<T> &, Var, Var, Var);                          \
  template Var conv1d<T>(Graph<T> &, Var, Var, Var, int);                     \
  template Var layer_norm<T>(Graph<T> &, Var, Var, Var, T);                   \
  template Var gelu<T>(Graph<T> &, Var);                                      \
  template Var relu<T>(Graph<T> &, Var);                                      \
  template Var prelu<T>(Graph<T> &, Var, Var);                                \
  template Var softmax_rows<T>(Graph<T> &, Var);                              \
  template Var dropout<T>(Graph<T> &, Var, double, std::mt19937_64 &);        \
  template Var adaptive_max_pool<T>(Graph<T> &, Var, std::size_t);                     \
  template Var embedding<T>(Graph<T> &, Var, std::span<const std::int32_t>);  \
  template Var concat<T>(Graph<T> &, std::span<const Var>);                   \
  template Var stack<T>(Graph<T> &, std::span<const Var>);                    \
  template Var neighbor_sum<T>(Graph<T> &, Var,                               \
                               const std::vector<std::vector<int>> &);        \
  template Var self_attention_1d<T>(Graph<T> &, Var, Var, Var, Var);

HBGSA_INSTANTIATE_OPS(float)
HBGSA_INSTANTIATE_OPS(double)

}  // namespace hbgsa::nn
