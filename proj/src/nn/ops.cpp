#include "syncforge/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "syncforge/errors.hpp"

namespace syncforge::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInput(msg);
}

void require_rank(const Var& v, int rank, const char* op) {
  require(v.value().rank() == rank, std::string(op) + ": expected rank " +
                                        std::to_string(rank) + ", got shape " +
                                        shape_str(v.shape()));
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

void accumulate(Graph& g, const Var& v, const Tensor& d) {
  if (!g.requires_grad(v.id)) return;
  Tensor& t = g.grad_of(v.id);
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] += d[i];
}

}  // namespace

// ---------------------------------------------------------------------------

Var conv2d(Var x, Var weight, Var bias, int stride, int pad) {
  require_rank(x, 4, "conv2d");
  require_rank(weight, 4, "conv2d");
  require_rank(bias, 1, "conv2d");
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  const int n = xs[0], ci = xs[1], h = xs[2], w = xs[3];
  const int co = ws[0], kh = ws[2], kw = ws[3];
  require(ws[1] == ci, "conv2d: input has " + std::to_string(ci) + " channels, weight expects " +
                           std::to_string(ws[1]));
  require(bias.shape()[0] == co, "conv2d: bias size does not match output channels");
  require(stride >= 1 && pad >= 0, "conv2d: invalid stride/padding");
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (w + 2 * pad - kw) / stride + 1;
  require(ho >= 1 && wo >= 1, "conv2d: input smaller than the kernel");

  const int k = ci * kh * kw;
  const std::size_t plane = static_cast<std::size_t>(ho) * wo;
  const std::size_t l = static_cast<std::size_t>(n) * plane;

  // im2col: row r = (c, ky, kx), column = (n, oy, ox).
  auto cols = std::make_shared<std::vector<double>>(static_cast<std::size_t>(k) * l);
  const double* xp = x.value().ptr();
  for (int c = 0; c < ci; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        double* row = cols->data() + (static_cast<std::size_t>(c * kh + ky) * kw + kx) * l;
        for (int b = 0; b < n; ++b) {
          const double* src = xp + (static_cast<std::size_t>(b) * ci + c) * h * w;
          double* dst = row + b * plane;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * stride - pad + ky;
            double* drow = dst + oy * wo;
            if (iy < 0 || iy >= h) {
              std::fill(drow, drow + wo, 0.0);
              continue;
            }
            const double* srow = src + iy * w;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * stride - pad + kx;
              drow[ox] = (ix >= 0 && ix < w) ? srow[ix] : 0.0;
            }
          }
        }
      }

  RowMat out_mat(co, l);
  out_mat.noalias() = CMapMat(weight.value().ptr(), co, k) * CMapMat(cols->data(), k, l);

  Tensor out({n, co, ho, wo});
  const double* bp = bias.value().ptr();
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < co; ++o) {
      const double* src = out_mat.data() + o * l + b * plane;
      double* dst = out.ptr() + (static_cast<std::size_t>(b) * co + o) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] + bp[o];
    }

  Graph& g = *x.graph;
  return g.record(
      "conv2d", std::move(out), {x, weight, bias},
      [=](Graph& g, const Tensor& dy) {
        RowMat dy_mat(co, l);
        for (int b = 0; b < n; ++b)
          for (int o = 0; o < co; ++o) {
            const double* src = dy.ptr() + (static_cast<std::size_t>(b) * co + o) * plane;
            std::copy(src, src + plane, dy_mat.data() + o * l + b * plane);
          }
        if (g.requires_grad(bias.id)) {
          Tensor& db = g.grad_of(bias.id);
          for (int o = 0; o < co; ++o) db[o] += dy_mat.row(o).sum();
        }
        if (g.requires_grad(weight.id)) {
          MapMat dw(g.grad_of(weight.id).ptr(), co, k);
          dw.noalias() += dy_mat * CMapMat(cols->data(), k, l).transpose();
        }
        if (g.requires_grad(x.id)) {
          RowMat dcols(k, l);
          dcols.noalias() = CMapMat(g.value(weight).ptr(), co, k).transpose() * dy_mat;
          double* dx = g.grad_of(x.id).ptr();
          for (int c = 0; c < ci; ++c)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const double* row =
                    dcols.data() + (static_cast<std::size_t>(c * kh + ky) * kw + kx) * l;
                for (int b = 0; b < n; ++b) {
                  double* dst = dx + (static_cast<std::size_t>(b) * ci + c) * h * w;
                  const double* src = row + b * plane;
                  for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < wo; ++ox) {
                      const int ix = ox * stride - pad + kx;
                      if (ix >= 0 && ix < w) dst[iy * w + ix] += src[oy * wo + ox];
                    }
                  }
                }
              }
        }
      });
}

Var upsample_nearest2(Var x) {
  require_rank(x, 4, "upsample_nearest2");
  const auto s = x.shape();
  const int n = s[0], c = s[1], h = s[2], w = s[3];
  Tensor out({n, c, 2 * h, 2 * w});
  const Tensor& xv = x.value();
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < 2 * h; ++y)
        for (int xx = 0; xx < 2 * w; ++xx) out.at(b, ch, y, xx) = xv.at(b, ch, y / 2, xx / 2);
  return x.graph->record("upsample_nearest2", std::move(out), {x},
                         [=](Graph& g, const Tensor& dy) {
                           Tensor& dx = g.grad_of(x.id);
                           for (int b = 0; b < n; ++b)
                             for (int ch = 0; ch < c; ++ch)
                               for (int y = 0; y < 2 * h; ++y)
                                 for (int xx = 0; xx < 2 * w; ++xx)
                                   dx.at(b, ch, y / 2, xx / 2) += dy.at(b, ch, y, xx);
                         });
}

Var concat_channels(Var a, Var b) {
  require_rank(a, 4, "concat_channels");
  require_rank(b, 4, "concat_channels");
  const auto sa = a.shape(), sb = b.shape();
  require(sa[0] == sb[0] && sa[2] == sb[2] && sa[3] == sb[3],
          "concat_channels: batch/spatial mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  const int n = sa[0], ca = sa[1], cb = sb[1];
  const std::size_t plane = static_cast<std::size_t>(sa[2]) * sa[3];
  Tensor out({n, ca + cb, sa[2], sa[3]});
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.value().ptr() + i * ca * plane, ca * plane, out.ptr() + i * (ca + cb) * plane);
    std::copy_n(b.value().ptr() + i * cb * plane, cb * plane,
                out.ptr() + (i * (ca + cb) + ca) * plane);
  }
  return a.graph->record("concat_channels", std::move(out), {a, b},
                         [=](Graph& g, const Tensor& dy) {
                           for (int i = 0; i < n; ++i) {
                             const double* src = dy.ptr() + i * (ca + cb) * plane;
                             if (g.requires_grad(a.id)) {
                               double* d = g.grad_of(a.id).ptr() + i * ca * plane;
                               for (std::size_t j = 0; j < ca * plane; ++j) d[j] += src[j];
                             }
                             if (g.requires_grad(b.id)) {
                               double* d = g.grad_of(b.id).ptr() + i * cb * plane;
                               for (std::size_t j = 0; j < cb * plane; ++j)
                                 d[j] += src[ca * plane + j];
                             }
                           }
                         });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b.value()[i];
  return a.graph->record("add", std::move(out), {a, b}, [=](Graph& g, const Tensor& dy) {
    accumulate(g, a, dy);
    accumulate(g, b, dy);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return a.graph->record("mul", std::move(out), {a, b}, [=](Graph& g, const Tensor& dy) {
    if (g.requires_grad(a.id)) {
      Tensor& da = g.grad_of(a.id);
      const Tensor& bv = g.value(b);
      for (std::size_t i = 0; i < da.numel(); ++i) da[i] += dy[i] * bv[i];
    }
    if (g.requires_grad(b.id)) {
      Tensor& db = g.grad_of(b.id);
      const Tensor& av = g.value(a);
      for (std::size_t i = 0; i < db.numel(); ++i) db[i] += dy[i] * av[i];
    }
  });
}

Var scalar_mul(Var x, double s) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= s;
  return x.graph->record("scalar_mul", std::move(out), {x}, [=](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(x.id);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += s * dy[i];
  });
}

Var broadcast_channels(Var x, int channels) {
  require_rank(x, 4, "broadcast_channels");
  const auto s = x.shape();
  require(s[1] == 1, "broadcast_channels: input must have one channel");
  const int n = s[0];
  const std::size_t plane = static_cast<std::size_t>(s[2]) * s[3];
  Tensor out({n, channels, s[2], s[3]});
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < channels; ++c)
      std::copy_n(x.value().ptr() + b * plane, plane, out.ptr() + (b * channels + c) * plane);
  return x.graph->record("broadcast_channels", std::move(out), {x},
                         [=](Graph& g, const Tensor& dy) {
                           Tensor& dx = g.grad_of(x.id);
                           for (int b = 0; b < n; ++b)
                             for (int c = 0; c < channels; ++c) {
                               const double* src = dy.ptr() + (b * channels + c) * plane;
                               for (std::size_t i = 0; i < plane; ++i) dx[b * plane + i] += src[i];
                             }
                         });
}

Var tanh(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::tanh(v);
  const int self = static_cast<int>(x.graph->size());
  return x.graph->record("tanh", std::move(out), {x}, [=](Graph& g, const Tensor& dy) {
    const Tensor& y = g.value(Var{&g, self});
    Tensor& dx = g.grad_of(x.id);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Var relu(Var x) { return leaky_relu(x, 0.0); }

Var leaky_relu(Var x, double slope) {
  Tensor out = x.value();
  for (double& v : out.data())
    if (v < 0) v *= slope;
  return x.graph->record(slope == 0.0 ? "relu" : "leaky_relu", std::move(out), {x},
                         [=](Graph& g, const Tensor& dy) {
                           const Tensor& xv = g.value(x);
                           Tensor& dx = g.grad_of(x.id);
                           for (std::size_t i = 0; i < dx.numel(); ++i)
                             dx[i] += xv[i] > 0 ? dy[i] : slope * dy[i];
                         });
}

Var clamp01(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return x.graph->record("clamp01", std::move(out), {x}, [=](Graph& g, const Tensor& dy) {
    const Tensor& xv = g.value(x);
    Tensor& dx = g.grad_of(x.id);
    for (std::size_t i = 0; i < dx.numel(); ++i)
      if (xv[i] >= 0.0 && xv[i] <= 1.0) dx[i] += dy[i];
  });
}

Var global_avg_pool(Var x) {
  require_rank(x, 4, "global_avg_pool");
  const auto s = x.shape();
  const int n = s[0], c = s[1];
  const std::size_t plane = static_cast<std::size_t>(s[2]) * s[3];
  Tensor out({n, c});
  for (int i = 0; i < n * c; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < plane; ++j) acc += x.value()[i * plane + j];
    out[i] = acc / static_cast<double>(plane);
  }
  return x.graph->record("global_avg_pool", std::move(out), {x},
                         [=](Graph& g, const Tensor& dy) {
                           Tensor& dx = g.grad_of(x.id);
                           for (int i = 0; i < n * c; ++i) {
                             const double v = dy[i] / static_cast<double>(plane);
                             for (std::size_t j = 0; j < plane; ++j) dx[i * plane + j] += v;
                           }
                         });
}

Var linear(Var x, Var weight, Var bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  require_rank(bias, 1, "linear");
  const int n = x.shape()[0], in = x.shape()[1], out_f = weight.shape()[0];
  require(weight.shape()[1] == in, "linear: weight expects " +
                                       std::to_string(weight.shape()[1]) + " inputs, got " +
                                       std::to_string(in));
  require(bias.shape()[0] == out_f, "linear: bias size mismatch");
  Tensor out({n, out_f});
  const Tensor &xv = x.value(), &wv = weight.value(), &bv = bias.value();
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < out_f; ++o) {
      double acc = bv[o];
      for (int i = 0; i < in; ++i) acc += wv[o * in + i] * xv[b * in + i];
      out[b * out_f + o] = acc;
    }
  return x.graph->record("linear", std::move(out), {x, weight, bias},
                         [=](Graph& g, const Tensor& dy) {
                           const Tensor &xv = g.value(x), &wv = g.value(weight);
                           if (g.requires_grad(bias.id)) {
                             Tensor& db = g.grad_of(bias.id);
                             for (int b = 0; b < n; ++b)
                               for (int o = 0; o < out_f; ++o) db[o] += dy[b * out_f + o];
                           }
                           if (g.requires_grad(weight.id)) {
                             Tensor& dw = g.grad_of(weight.id);
                             for (int b = 0; b < n; ++b)
                               for (int o = 0; o < out_f; ++o)
                                 for (int i = 0; i < in; ++i)
                                   dw[o * in + i] += dy[b * out_f + o] * xv[b * in + i];
                           }
                           if (g.requires_grad(x.id)) {
                             Tensor& dx = g.grad_of(x.id);
                             for (int b = 0; b < n; ++b)
                               for (int o = 0; o < out_f; ++o)
                                 for (int i = 0; i < in; ++i)
                                   dx[b * in + i] += dy[b * out_f + o] * wv[o * in + i];
                           }
                         });
}

Var grid_sample(Var x, const std::vector<SamplingGrid>& grids, double fill) {
  require_rank(x, 4, "grid_sample");
  const auto s = x.shape();
  const int n = s[0], c = s[1];
  require(static_cast<int>(grids.size()) == n, "grid_sample: need one grid per sample");
  const int oh = grids.front().out_h, ow = grids.front().out_w;
  for (const auto& gr : grids)
    require(gr.in_h == s[2] && gr.in_w == s[3] && gr.out_h == oh && gr.out_w == ow,
            "grid_sample: grid sizes do not match the input");
  Tensor out({n, c, oh, ow});
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  for (int b = 0; b < n; ++b) {
    const Image res = syncforge::grid_sample(unstack(x.value(), b), grids[b], fill);
    std::copy(res.data().begin(), res.data().end(), out.ptr() + b * c * out_plane);
  }
  auto shared = std::make_shared<std::vector<SamplingGrid>>(grids);
  return x.graph->record(
      "grid_sample", std::move(out), {x}, [=](Graph& g, const Tensor& dy) {
        Tensor& dx = g.grad_of(x.id);
        const int ih = s[2], iw = s[3];
        const std::size_t in_plane = static_cast<std::size_t>(ih) * iw;
        for (int b = 0; b < n; ++b) {
          const auto& entries = (*shared)[b].entries;
          for (int ch = 0; ch < c; ++ch) {
            double* d = dx.ptr() + (static_cast<std::size_t>(b) * c + ch) * in_plane;
            const double* up = dy.ptr() + (static_cast<std::size_t>(b) * c + ch) * out_plane;
            for (std::size_t i = 0; i < out_plane; ++i) {
              const auto& e = entries[i];
              if (!e.valid) continue;
              const double v = up[i];
              d[e.y0 * iw + e.x0] += (1 - e.wx) * (1 - e.wy) * v;
              d[e.y0 * iw + e.x1] += e.wx * (1 - e.wy) * v;
              d[e.y1 * iw + e.x0] += (1 - e.wx) * e.wy * v;
              d[e.y1 * iw + e.x1] += e.wx * e.wy * v;
            }
          }
        }
      });
}

Var luma(Var x) {
  require_rank(x, 4, "luma");
  const auto s = x.shape();
  require(s[1] == 3, "luma: expected 3 channels");
  const int n = s[0];
  const std::size_t plane = static_cast<std::size_t>(s[2]) * s[3];
  Tensor out({n, 1, s[2], s[3]});
  for (int b = 0; b < n; ++b) {
    const double* r = x.value().ptr() + b * 3 * plane;
    for (std::size_t i = 0; i < plane; ++i)
      out[b * plane + i] = syncforge::luma(r[i], r[plane + i], r[2 * plane + i]);
  }
  return x.graph->record("luma", std::move(out), {x}, [=](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(x.id);
    for (int b = 0; b < n; ++b) {
      double* d = dx.ptr() + b * 3 * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = dy[b * plane + i];
        d[i] += kLumaR * v;
        d[plane + i] += kLumaG * v;
        d[2 * plane + i] += kLumaB * v;
      }
    }
  });
}

namespace {

// Transposed Jacobian of one (unclamped) valuemetric transform applied to
// the upstream gradient, for a single 3-channel sample.
Image valuemetric_vjp(const Image& x, const ValuemetricTransform& t, const Image& up) {
  const std::size_t plane = x.plane_size();
  const double wl[3] = {kLumaR, kLumaG, kLumaB};
  auto luma_mix = [&](double keep, double luma_w, bool global) {
    // dx_c = keep * up_c + luma_w * w_c * S, S summed over channels (and over
    // pixels when global, divided by the pixel count).
    Image dx(3, x.height(), x.width());
    double total = 0.0;
    if (global) {
      for (double v : up.data()) total += v;
      total /= static_cast<double>(plane);
    }
    for (std::size_t i = 0; i < plane; ++i) {
      const double s = global ? total : up.plane(0)[i] + up.plane(1)[i] + up.plane(2)[i];
      for (int c = 0; c < 3; ++c) dx.plane(c)[i] = keep * up.plane(c)[i] + luma_w * wl[c] * s;
    }
    return dx;
  };
  return std::visit(
      overloaded{
          [&](const val::Identity&) { return up; }, [&](const val::Jpeg&) { return up; },
          [&](const val::Brightness& b) {
            Image dx = up;
            for (double& v : dx.data()) v *= b.factor;
            return dx;
          },
          [&](const val::Contrast& c) { return luma_mix(c.factor, 1.0 - c.factor, true); },
          [&](const val::Saturation& s) { return luma_mix(s.factor, 1.0 - s.factor, false); },
          [&](const val::Grayscale&) { return luma_mix(0.0, 1.0, false); },
          [&](const val::GaussianBlur& b) { return gaussian_blur_adjoint(up, b.kernel); },
          [&](const val::Hue& h) {
            // The hue map is linear per pixel: build its 3x3 matrix by
            // pushing the basis vectors through it.
            double a[3][3];
            for (int col = 0; col < 3; ++col) {
              Image e(3, 1, 1, 0.0);
              e.plane(col)[0] = 1.0;
              const Image r = apply_valuemetric_unclamped(e, h);
              for (int row = 0; row < 3; ++row) a[row][col] = r.plane(row)[0];
            }
            Image dx(3, x.height(), x.width());
            for (std::size_t i = 0; i < plane; ++i)
              for (int col = 0; col < 3; ++col) {
                double acc = 0.0;
                for (int row = 0; row < 3; ++row) acc += a[row][col] * up.plane(row)[i];
                dx.plane(col)[i] = acc;
              }
            return dx;
          }},
      t);
}

}  // namespace

Var valuemetric(Var x, const std::vector<ValuemetricTransform>& transforms) {
  require_rank(x, 4, "valuemetric");
  const auto s = x.shape();
  const int n = s[0];
  require(s[1] == 3, "valuemetric: expected 3 channels");
  require(static_cast<int>(transforms.size()) == n, "valuemetric: need one transform per sample");
  const std::size_t per = static_cast<std::size_t>(3) * s[2] * s[3];
  Tensor out(s);
  // Pre-clamp values decide where the clamp blocks the gradient.
  auto pre = std::make_shared<Tensor>(s);
  for (int b = 0; b < n; ++b) {
    const Image xi = unstack(x.value(), b);
    Image z = apply_valuemetric_unclamped(xi, transforms[b]);
    std::copy(z.data().begin(), z.data().end(), pre->ptr() + b * per);
    if (!std::holds_alternative<val::Identity>(transforms[b])) z.clamp01();
    std::copy(z.data().begin(), z.data().end(), out.ptr() + b * per);
  }
  auto ts = std::make_shared<std::vector<ValuemetricTransform>>(transforms);
  return x.graph->record("valuemetric", std::move(out), {x}, [=](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(x.id);
    for (int b = 0; b < n; ++b) {
      const auto& t = (*ts)[b];
      Image up = unstack(dy, b);
      const bool straight = std::holds_alternative<val::Jpeg>(t) ||
                            std::holds_alternative<val::Identity>(t);
      if (!straight) {
        for (std::size_t i = 0; i < per; ++i) {
          const double z = (*pre)[b * per + i];
          if (z < 0.0 || z > 1.0) up.data()[i] = 0.0;
        }
      }
      const Image d = valuemetric_vjp(unstack(g.value(x), b), t, up);
      for (std::size_t i = 0; i < per; ++i) dx[b * per + i] += d.data()[i];
    }
  });
}

Var straight_through(Var x, const std::function<Tensor(const Tensor&)>& f, const char* name) {
  Tensor out = f(x.value());
  require(out.shape() == x.shape(), std::string(name) + ": forward changed the shape");
  return x.graph->record(name, std::move(out), {x},
                         [=](Graph& g, const Tensor& dy) { accumulate(g, x, dy); });
}

Var l1_loss(Var pred, Var target) {
  require_same_shape(pred, target, "l1_loss");
  require_rank(pred, 2, "l1_loss");
  const int n = pred.shape()[0];
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.value().numel(); ++i)
    acc += std::abs(pred.value()[i] - target.value()[i]);
  return pred.graph->record(
      "l1_loss", Tensor({1}, acc / n), {pred, target}, [=](Graph& g, const Tensor& dy) {
        const Tensor &p = g.value(pred), &t = g.value(target);
        const double s = dy[0] / n;
        for (int which = 0; which < 2; ++which) {
          const Var v = which == 0 ? pred : target;
          if (!g.requires_grad(v.id)) continue;
          Tensor& d = g.grad_of(v.id);
          const double sign = which == 0 ? 1.0 : -1.0;
          for (std::size_t i = 0; i < d.numel(); ++i) {
            const double diff = p[i] - t[i];
            const double sg = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
            d[i] += sign * sg * s;
          }
        }
      });
}

Var mean(Var x) {
  double acc = 0.0;
  for (double v : x.value().data()) acc += v;
  const double count = static_cast<double>(x.value().numel());
  return x.graph->record("mean", Tensor({1}, acc / count), {x}, [=](Graph& g, const Tensor& dy) {
    Tensor& dx = g.grad_of(x.id);
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += dy[0] / count;
  });
}

namespace {
Var hinge(Var x, double sign, const char* name) {
  // mean(relu(1 + sign * x))
  double acc = 0.0;
  for (double v : x.value().data()) acc += std::max(0.0, 1.0 + sign * v);
  const double count = static_cast<double>(x.value().numel());
  return x.graph->record(name, Tensor({1}, acc / count), {x}, [=](Graph& g, const Tensor& dy) {
    const Tensor& xv = g.value(x);
    Tensor& dx = g.grad_of(x.id);
    for (std::size_t i = 0; i < dx.numel(); ++i)
      if (1.0 + sign * xv[i] > 0.0) dx[i] += sign * dy[0] / count;
  });
}
}  // namespace

Var hinge_real(Var x) { return hinge(x, -1.0, "hinge_real"); }
Var hinge_fake(Var x) { return hinge(x, 1.0, "hinge_fake"); }

}  // namespace syncforge::nn
