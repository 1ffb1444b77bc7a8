// Copyright 2026 The modsynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "modsynth/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "modsynth/error.hpp"

namespace modsynth::ag {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Sliding-window geometry of a convolution over a C×H×W input.
struct Geom {
  int c, h, w, k, stride, pad, oh, ow;
  int rows() const { return c * k * k; }
  int cols() const { return oh * ow; }
};

void im2col(const double* in, const Geom& g, double* col) {
  const int P = g.cols();
  for (int ci = 0; ci < g.c; ++ci) {
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        double* row = col + static_cast<std::size_t>((ci * g.k + ki) * g.k + kj) * P;
        for (int y = 0; y < g.oh; ++y) {
          const int iy = y * g.stride - g.pad + ki;
          double* dst = row + y * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const double* src = in + (static_cast<std::size_t>(ci) * g.h + iy) * g.w;
          for (int x = 0; x < g.ow; ++x) {
            const int ix = x * g.stride - g.pad + kj;
            dst[x] = (ix >= 0 && ix < g.w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into a C×H×W buffer.
void col2im(const double* col, const Geom& g, double* out) {
  const int P = g.cols();
  for (int ci = 0; ci < g.c; ++ci) {
    for (int ki = 0; ki < g.k; ++ki) {
      for (int kj = 0; kj < g.k; ++kj) {
        const double* row =
            col + static_cast<std::size_t>((ci * g.k + ki) * g.k + kj) * P;
        for (int y = 0; y < g.oh; ++y) {
          const int iy = y * g.stride - g.pad + ki;
          if (iy < 0 || iy >= g.h) continue;
          const double* src = row + y * g.ow;
          double* dst = out + (static_cast<std::size_t>(ci) * g.h + iy) * g.w;
          for (int x = 0; x < g.ow; ++x) {
            const int ix = x * g.stride - g.pad + kj;
            if (ix >= 0 && ix < g.w) dst[ix] += src[x];
          }
        }
      }
    }
  }
}

thread_local bool t_grad_enabled = true;

Var make_result(Tensor value, std::vector<std::shared_ptr<Node>> parents,
                std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  const bool needs = t_grad_enabled && std::any_of(parents.begin(), parents.end(),
                                 [](const auto& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(fn);
  }
  return Var(std::move(node));
}

Tensor scalar_tensor(double v) { return Tensor({1, 1, 1, 1}, v); }

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!(a.shape() == b.shape())) {
    fail(ErrorCode::kShape, std::string(op) + ": shape " +
                                to_string(a.shape()) + " vs " +
                                to_string(b.shape()));
  }
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

Tensor& Node::grad_buffer() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

void Node::accumulate(const Tensor& g) { grad_buffer() += g; }

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

double Var::item() const {
  if (node_->value.size() != 1) {
    fail(ErrorCode::kShape, "item() on non-scalar " + to_string(shape()));
  }
  return node_->value[0];
}

void backward(const Var& root) {
  if (root.value().size() != 1) {
    fail(ErrorCode::kShape, "backward() needs a scalar root");
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride,
           int pad) {
  const Shape4 xs = x.shape();
  const Shape4 ws = weight.shape();
  if (ws.c != xs.c || ws.h != ws.w) {
    fail(ErrorCode::kShape, "conv2d: input " + to_string(xs) +
                                " incompatible with weight " + to_string(ws));
  }
  const int k = ws.h;
  Geom g{xs.c, xs.h, xs.w, k, stride, pad, (xs.h + 2 * pad - k) / stride + 1,
         (xs.w + 2 * pad - k) / stride + 1};
  if (g.oh <= 0 || g.ow <= 0) {
    fail(ErrorCode::kShape, "conv2d: input " + to_string(xs) +
                                " too small for kernel " + std::to_string(k));
  }
  const int cout = ws.n;
  Tensor out({xs.n, cout, g.oh, g.ow});
  std::vector<double> col(static_cast<std::size_t>(g.rows()) * g.cols());
  ConstMapMat wm(weight.value().raw(), cout, g.rows());
  const double* b = bias.value().raw();
  for (int n = 0; n < xs.n; ++n) {
    im2col(x.value().sample(n).data(), g, col.data());
    MapMat om(out.sample(n).data(), cout, g.cols());
    om.noalias() = wm * ConstMapMat(col.data(), g.rows(), g.cols());
    for (int co = 0; co < cout; ++co) om.row(co).array() += b[co];
  }

  return make_result(
      std::move(out), {x.node(), weight.node(), bias.node()},
      [g, cout](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        const int N = self.value.n();
        std::vector<double> col(static_cast<std::size_t>(g.rows()) * g.cols());
        ConstMapMat wm(wn.value.raw(), cout, g.rows());
        for (int n = 0; n < N; ++n) {
          ConstMapMat dout(self.grad.sample(n).data(), cout, g.cols());
          if (wn.requires_grad) {
            im2col(xn.value.sample(n).data(), g, col.data());
            MapMat dw(wn.grad_buffer().raw(), cout, g.rows());
            dw.noalias() +=
                dout * ConstMapMat(col.data(), g.rows(), g.cols()).transpose();
          }
          if (bn.requires_grad) {
            double* db = bn.grad_buffer().raw();
            for (int co = 0; co < cout; ++co) {
              const double* p = dout.row(co).data();
              double s = 0.0;
              for (int i = 0; i < g.cols(); ++i) s += p[i];
              db[co] += s;
            }
          }
          if (xn.requires_grad) {
            MapMat dcol(col.data(), g.rows(), g.cols());
            dcol.noalias() = wm.transpose() * dout;
            col2im(col.data(), g, xn.grad_buffer().sample(n).data());
          }
        }
      });
}

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias,
                     int stride, int pad, int output_pad) {
  const Shape4 xs = x.shape();
  const Shape4 ws = weight.shape();
  if (ws.n != xs.c || ws.h != ws.w) {
    fail(ErrorCode::kShape, "conv_transpose2d: input " + to_string(xs) +
                                " incompatible with weight " + to_string(ws));
  }
  const int k = ws.h;
  const int cout = ws.c;
  const int oh = (xs.h - 1) * stride - 2 * pad + k + output_pad;
  const int ow = (xs.w - 1) * stride - 2 * pad + k + output_pad;
  // Geometry of the forward convolution this operator is the adjoint of.
  Geom g{cout, oh, ow, k, stride, pad, xs.h, xs.w};
  if ((oh + 2 * pad - k) / stride + 1 != xs.h ||
      (ow + 2 * pad - k) / stride + 1 != xs.w) {
    fail(ErrorCode::kShape, "conv_transpose2d: inconsistent geometry");
  }
  Tensor out({xs.n, cout, oh, ow});
  std::vector<double> col(static_cast<std::size_t>(g.rows()) * g.cols());
  ConstMapMat wm(weight.value().raw(), xs.c, g.rows());
  const double* b = bias.value().raw();
  for (int n = 0; n < xs.n; ++n) {
    ConstMapMat xm(x.value().sample(n).data(), xs.c, g.cols());
    MapMat(col.data(), g.rows(), g.cols()).noalias() = wm.transpose() * xm;
    auto os = out.sample(n);
    col2im(col.data(), g, os.data());
    for (int co = 0; co < cout; ++co) {
      double* p = os.data() + static_cast<std::size_t>(co) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) p[i] += b[co];
    }
  }

  const int cin = xs.c;
  return make_result(
      std::move(out), {x.node(), weight.node(), bias.node()},
      [g, cin, cout](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        const int N = self.value.n();
        std::vector<double> dcol(static_cast<std::size_t>(g.rows()) * g.cols());
        ConstMapMat wm(wn.value.raw(), cin, g.rows());
        const std::size_t plane = static_cast<std::size_t>(g.h) * g.w;
        for (int n = 0; n < N; ++n) {
          auto gs = self.grad.sample(n);
          if (bn.requires_grad) {
            double* db = bn.grad_buffer().raw();
            for (int co = 0; co < cout; ++co) {
              const double* p = gs.data() + co * plane;
              double s = 0.0;
              for (std::size_t i = 0; i < plane; ++i) s += p[i];
              db[co] += s;
            }
          }
          if (!wn.requires_grad && !xn.requires_grad) continue;
          im2col(gs.data(), g, dcol.data());
          ConstMapMat dc(dcol.data(), g.rows(), g.cols());
          if (wn.requires_grad) {
            ConstMapMat xm(xn.value.sample(n).data(), cin, g.cols());
            MapMat(wn.grad_buffer().raw(), cin, g.rows()).noalias() +=
                xm * dc.transpose();
          }
          if (xn.requires_grad) {
            MapMat(xn.grad_buffer().sample(n).data(), cin, g.cols()).noalias() +=
                wm * dc;
          }
        }
      });
}

Var pad2d(const Var& x, Padding p, PadMode mode) {
  const Shape4 xs = x.shape();
  if (mode == PadMode::kReflect &&
      (std::max(p.top, p.bottom) >= xs.h || std::max(p.left, p.right) >= xs.w)) {
    fail(ErrorCode::kShape, "pad2d: reflect padding wider than input " +
                                to_string(xs));
  }
  const int oh = xs.h + p.top + p.bottom;
  const int ow = xs.w + p.left + p.right;
  auto src_index = [mode](int i, int size) {
    if (i >= 0 && i < size) return i;
    if (mode == PadMode::kZero) return -1;
    return i < 0 ? -i : 2 * (size - 1) - i;
  };
  std::vector<int> rows(oh), cols(ow);
  for (int i = 0; i < oh; ++i) rows[i] = src_index(i - p.top, xs.h);
  for (int j = 0; j < ow; ++j) cols[j] = src_index(j - p.left, xs.w);

  Tensor out({xs.n, xs.c, oh, ow});
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      auto src = x.value().plane(n, c);
      auto dst = out.plane(n, c);
      for (int i = 0; i < oh; ++i) {
        if (rows[i] < 0) continue;
        for (int j = 0; j < ow; ++j) {
          if (cols[j] >= 0) dst[i * ow + j] = src[rows[i] * xs.w + cols[j]];
        }
      }
    }
  }
  return make_result(std::move(out), {x.node()},
                     [rows, cols, xs, oh, ow](Node& self) {
                       Tensor& dx = self.parents[0]->grad_buffer();
                       for (int n = 0; n < xs.n; ++n) {
                         for (int c = 0; c < xs.c; ++c) {
                           auto g = self.grad.plane(n, c);
                           auto d = dx.plane(n, c);
                           for (int i = 0; i < oh; ++i) {
                             if (rows[i] < 0) continue;
                             for (int j = 0; j < ow; ++j) {
                               if (cols[j] >= 0) {
                                 d[rows[i] * xs.w + cols[j]] += g[i * ow + j];
                               }
                             }
                           }
                         }
                       }
                     });
}

Var instance_norm(const Var& x, double eps) {
  const Shape4 xs = x.shape();
  Tensor out(xs);
  std::vector<double> inv_std(static_cast<std::size_t>(xs.n) * xs.c);
  const std::size_t m = xs.plane();
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      auto src = x.value().plane(n, c);
      double mean = 0.0;
      for (double v : src) mean += v;
      mean /= static_cast<double>(m);
      double var = 0.0;
      for (double v : src) var += (v - mean) * (v - mean);
      var /= static_cast<double>(m);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[n * xs.c + c] = is;
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < m; ++i) dst[i] = (src[i] - mean) * is;
    }
  }
  return make_result(std::move(out), {x.node()},
                     [inv_std = std::move(inv_std), xs, m](Node& self) {
                       Tensor& dx = self.parents[0]->grad_buffer();
                       for (int n = 0; n < xs.n; ++n) {
                         for (int c = 0; c < xs.c; ++c) {
                           auto g = self.grad.plane(n, c);
                           auto xhat = self.value.plane(n, c);
                           double mg = 0.0, mgx = 0.0;
                           for (std::size_t i = 0; i < m; ++i) {
                             mg += g[i];
                             mgx += g[i] * xhat[i];
                           }
                           mg /= static_cast<double>(m);
                           mgx /= static_cast<double>(m);
                           const double is = inv_std[n * xs.c + c];
                           auto d = dx.plane(n, c);
                           for (std::size_t i = 0; i < m; ++i) {
                             d[i] += is * (g[i] - mg - xhat[i] * mgx);
                           }
                         }
                       }
                     });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var leaky_relu(const Var& x, double slope) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
  return make_result(std::move(out), {x.node()}, [slope](Node& self) {
    Node& xn = *self.parents[0];
    Tensor& dx = xn.grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] += xn.value[i] > 0.0 ? self.grad[i] : slope * self.grad[i];
    }
  });
}

Var tanh(const Var& x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = std::tanh(v);
  return make_result(std::move(out), {x.node()}, [](Node& self) {
    Tensor& dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double y = self.value[i];
      dx[i] += (1.0 - y * y) * self.grad[i];
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out += b.value();
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (auto& p : self.parents) {
      if (p->requires_grad) p->accumulate(self.grad);
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  const Shape4 as = a.shape();
  const Shape4 bs = b.shape();
  if (as.n != bs.n || as.h != bs.h || as.w != bs.w) {
    fail(ErrorCode::kShape, "concat_channels: " + to_string(as) + " vs " +
                                to_string(bs));
  }
  Tensor out({as.n, as.c + bs.c, as.h, as.w});
  for (int n = 0; n < as.n; ++n) {
    auto dst = out.sample(n);
    auto sa = a.value().sample(n);
    auto sb = b.value().sample(n);
    std::copy(sa.begin(), sa.end(), dst.begin());
    std::copy(sb.begin(), sb.end(), dst.begin() + sa.size());
  }
  return make_result(std::move(out), {a.node(), b.node()},
                     [as, bs](Node& self) {
                       Node& an = *self.parents[0];
                       Node& bn = *self.parents[1];
                       for (int n = 0; n < as.n; ++n) {
                         auto g = self.grad.sample(n);
                         if (an.requires_grad) {
                           auto d = an.grad_buffer().sample(n);
                           for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
                         }
                         if (bn.requires_grad) {
                           auto d = bn.grad_buffer().sample(n);
                           const std::size_t off = as.sample();
                           for (std::size_t i = 0; i < d.size(); ++i) {
                             d[i] += g[off + i];
                           }
                         }
                       }
                       (void)bs;
                     });
}

Var mask_channels(const Var& x, std::span<const int> bits, double fill) {
  const Shape4 xs = x.shape();
  if (static_cast<int>(bits.size()) != xs.c) {
    fail(ErrorCode::kShape, "mask_channels: " + std::to_string(bits.size()) +
                                " bits for " + std::to_string(xs.c) +
                                " channels");
  }
  std::vector<int> on(bits.begin(), bits.end());
  Tensor out = x.value();
  for (int n = 0; n < xs.n; ++n) {
    for (int c = 0; c < xs.c; ++c) {
      if (!on[c]) {
        auto p = out.plane(n, c);
        std::fill(p.begin(), p.end(), fill);
      }
    }
  }
  return make_result(std::move(out), {x.node()}, [on, xs](Node& self) {
    Tensor& dx = self.parents[0]->grad_buffer();
    for (int n = 0; n < xs.n; ++n) {
      for (int c = 0; c < xs.c; ++c) {
        if (!on[c]) continue;
        auto g = self.grad.plane(n, c);
        auto d = dx.plane(n, c);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
      }
    }
  });
}

Var masked_mean_abs_diff(const Var& a, const Var& b,
                         std::span<const int> channel_on) {
  require_same_shape(a, b, "masked_mean_abs_diff");
  const Shape4 s = a.shape();
  if (static_cast<int>(channel_on.size()) != s.c) {
    fail(ErrorCode::kShape, "masked_mean_abs_diff: channel mask length " +
                                std::to_string(channel_on.size()) + " vs " +
                                std::to_string(s.c) + " channels");
  }
  std::vector<int> on(channel_on.begin(), channel_on.end());
  const int active = static_cast<int>(std::count_if(
      on.begin(), on.end(), [](int v) { return v != 0; }));
  if (active == 0) {
    fail(ErrorCode::kCondition, "masked_mean_abs_diff: no active channel");
  }
  const double count = static_cast<double>(s.n) * active * s.plane();
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      if (!on[c]) continue;
      auto pa = a.value().plane(n, c);
      auto pb = b.value().plane(n, c);
      for (std::size_t i = 0; i < pa.size(); ++i) total += std::abs(pa[i] - pb[i]);
    }
  }
  return make_result(
      scalar_tensor(total / count), {a.node(), b.node()},
      [on, s, count](Node& self) {
        const double g = self.grad[0] / count;
        Node& an = *self.parents[0];
        Node& bn = *self.parents[1];
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            if (!on[c]) continue;
            auto pa = an.value.plane(n, c);
            auto pb = bn.value.plane(n, c);
            for (std::size_t i = 0; i < pa.size(); ++i) {
              const double d = pa[i] - pb[i];
              const double sg = d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
              if (an.requires_grad) an.grad_buffer().plane(n, c)[i] += sg;
              if (bn.requires_grad) bn.grad_buffer().plane(n, c)[i] -= sg;
            }
          }
        }
      });
}

Var mean_squared_to(const Var& x, double target) {
  const auto v = x.value().data();
  if (v.empty()) fail(ErrorCode::kShape, "mean_squared_to: empty input");
  double total = 0.0;
  for (double e : v) total += (e - target) * (e - target);
  const double count = static_cast<double>(v.size());
  return make_result(scalar_tensor(total / count), {x.node()},
                     [target, count](Node& self) {
                       Node& xn = *self.parents[0];
                       Tensor& dx = xn.grad_buffer();
                       const double g = self.grad[0];
                       for (std::size_t i = 0; i < dx.size(); ++i) {
                         dx[i] += g * 2.0 * (xn.value[i] - target) / count;
                       }
                     });
}

Var weighted_sum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.size() != weights.size()) {
    fail(ErrorCode::kArgument, "weighted_sum: terms/weights length mismatch");
  }
  double total = 0.0;
  std::vector<std::shared_ptr<Node>> parents;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    total += weights[i] * terms[i].item();
    parents.push_back(terms[i].node());
  }
  std::vector<double> w(weights.begin(), weights.end());
  return make_result(scalar_tensor(total), std::move(parents),
                     [w](Node& self) {
                       for (std::size_t i = 0; i < w.size(); ++i) {
                         Node& p = *self.parents[i];
                         if (p.requires_grad) p.grad_buffer()[0] += w[i] * self.grad[0];
                       }
                     });
}

}  // namespace modsynth::ag
