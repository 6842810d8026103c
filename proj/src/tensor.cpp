#include "hrank/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace hrank {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string dims(int r, int c) { return "[" + std::to_string(r) + "x" + std::to_string(c) + "]"; }

}  // namespace

std::string shape_str(const Tensor& t) { return dims(t.rows(), t.cols()); }

Tensor Tensor::make(int rows, int cols, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  n->requires_grad = requires_grad;
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return Tensor(std::move(n));
}

Tensor Tensor::constant(int rows, int cols, std::vector<double> values) {
  if (static_cast<std::size_t>(rows) * cols != values.size())
    fail("tensor: " + dims(rows, cols) + " needs " + std::to_string(rows * cols) +
         " values, got " + std::to_string(values.size()));
  Tensor t = make(rows, cols, false);
  t.node_->value = std::move(values);
  return t;
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) { return make(rows, cols, requires_grad); }

Tensor Tensor::full(int rows, int cols, double v) {
  Tensor t = make(rows, cols, false);
  std::fill(t.node_->value.begin(), t.node_->value.end(), v);
  return t;
}

Tensor Tensor::scalar(double v) { return constant(1, 1, {v}); }

Tensor Tensor::parameter(int rows, int cols, std::vector<double> values) {
  Tensor t = constant(rows, cols, std::move(values));
  t.node_->requires_grad = true;
  return t;
}

double Tensor::value() const {
  if (numel() != 1) fail("value(): tensor is not a scalar, got " + shape_str(*this));
  return node_->value[0];
}

Tensor Tensor::detached() const { return constant(rows(), cols(), node_->value); }

Tensor make_op(int rows, int cols, std::vector<Tensor> parents,
               std::function<void(Tensor::Node&)> backward) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.requires_grad();
  Tensor t = Tensor::make(rows, cols, rg);
  if (rg) {
    t.node_->parents = std::move(parents);
    t.node_->backward = std::move(backward);
  }
  return t;
}

namespace {

// Accumulate helper: returns the grad buffer of parent i if it is
// trainable-reachable, nullptr otherwise.
std::vector<double>* grad_of(Tensor::Node& self, std::size_t i) {
  Tensor& p = self.parents[i];
  if (!p.requires_grad()) return nullptr;
  p.node()->ensure_grad();
  return &p.node()->grad;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    fail("matmul: inner dimensions disagree: " + shape_str(a) + " vs " + shape_str(b));
  const int n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (int i = 0; i < n; ++i) {
    double* outi = out.data() + static_cast<std::size_t>(i) * m;
    const double* ai = av + static_cast<std::size_t>(i) * k;
    for (int kk = 0; kk < k; ++kk) {
      const double aik = ai[kk];
      if (aik == 0.0) continue;
      const double* bk = bv + static_cast<std::size_t>(kk) * m;
      for (int j = 0; j < m; ++j) outi[j] += aik * bk[j];
    }
  }
  Tensor t = make_op(n, m, {a, b}, [n, k, m](Tensor::Node& self) {
    const double* g = self.grad.data();
    const double* av = self.parents[0].values().data();
    const double* bv = self.parents[1].values().data();
    if (auto* da = grad_of(self, 0)) {  // dA += G * B^T
      for (int i = 0; i < n; ++i) {
        const double* gi = g + static_cast<std::size_t>(i) * m;
        double* dai = da->data() + static_cast<std::size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
          const double* bk = bv + static_cast<std::size_t>(kk) * m;
          double acc = 0.0;
          for (int j = 0; j < m; ++j) acc += gi[j] * bk[j];
          dai[kk] += acc;
        }
      }
    }
    if (auto* db = grad_of(self, 1)) {  // dB += A^T * G
      for (int i = 0; i < n; ++i) {
        const double* gi = g + static_cast<std::size_t>(i) * m;
        const double* ai = av + static_cast<std::size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
          const double aik = ai[kk];
          if (aik == 0.0) continue;
          double* dbk = db->data() + static_cast<std::size_t>(kk) * m;
          for (int j = 0; j < m; ++j) dbk[j] += aik * gi[j];
        }
      }
    }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor matmul_transb(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    fail("matmul_transb: inner dimensions disagree: " + shape_str(a) + " vs " + shape_str(b));
  const int n = a.rows(), k = a.cols(), m = b.rows();
  std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (int i = 0; i < n; ++i) {
    const double* ai = av + static_cast<std::size_t>(i) * k;
    double* outi = out.data() + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      const double* bj = bv + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
      outi[j] = acc;
    }
  }
  Tensor t = make_op(n, m, {a, b}, [n, k, m](Tensor::Node& self) {
    const double* g = self.grad.data();
    const double* av = self.parents[0].values().data();
    const double* bv = self.parents[1].values().data();
    if (auto* da = grad_of(self, 0)) {  // dA += G * B
      for (int i = 0; i < n; ++i) {
        const double* gi = g + static_cast<std::size_t>(i) * m;
        double* dai = da->data() + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < m; ++j) {
          const double gij = gi[j];
          if (gij == 0.0) continue;
          const double* bj = bv + static_cast<std::size_t>(j) * k;
          for (int kk = 0; kk < k; ++kk) dai[kk] += gij * bj[kk];
        }
      }
    }
    if (auto* db = grad_of(self, 1)) {  // dB += G^T * A
      for (int i = 0; i < n; ++i) {
        const double* gi = g + static_cast<std::size_t>(i) * m;
        const double* ai = av + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < m; ++j) {
          const double gij = gi[j];
          if (gij == 0.0) continue;
          double* dbj = db->data() + static_cast<std::size_t>(j) * k;
          for (int kk = 0; kk < k; ++kk) dbj[kk] += gij * ai[kk];
        }
      }
    }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor transpose(const Tensor& x) {
  const int n = x.rows(), m = x.cols();
  std::vector<double> out(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(j) * n + i] = x.at(i, j);
  Tensor t = make_op(m, n, {x}, [n, m](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0)) {
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i)
          (*dx)[static_cast<std::size_t>(i) * m + j] += self.grad[static_cast<std::size_t>(j) * n + i];
    }
  });
  t.mutable_values() = std::move(out);
  return t;
}

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(std::string(op) + ": shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  Tensor t = make_op(a.rows(), a.cols(), {a, b}, [](Tensor::Node& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (auto* d = grad_of(self, p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) (*d)[i] += self.grad[i];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor add_rowvec(const Tensor& a, const Tensor& b) {
  if (b.rows() != 1 || b.cols() != a.cols())
    fail("add_rowvec: bias must be [1x" + std::to_string(a.cols()) + "], got " + shape_str(b));
  const int n = a.rows(), m = a.cols();
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(i) * m + j] += bv[j];
  Tensor t = make_op(n, m, {a, b}, [n, m](Tensor::Node& self) {
    if (auto* da = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*da)[i] += self.grad[i];
    if (auto* db = grad_of(self, 1))
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) (*db)[j] += self.grad[static_cast<std::size_t>(i) * m + j];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  Tensor t = make_op(a.rows(), a.cols(), {a, b}, [](Tensor::Node& self) {
    if (auto* da = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*da)[i] += self.grad[i];
    if (auto* db = grad_of(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*db)[i] -= self.grad[i];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  std::vector<double> out(a.values());
  const auto& bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  Tensor t = make_op(a.rows(), a.cols(), {a, b}, [](Tensor::Node& self) {
    const auto& av = self.parents[0].values();
    const auto& bv = self.parents[1].values();
    if (auto* da = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*da)[i] += self.grad[i] * bv[i];
    if (auto* db = grad_of(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*db)[i] += self.grad[i] * av[i];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor scale(const Tensor& x, double c) {
  std::vector<double> out(x.values());
  for (auto& v : out) v *= c;
  Tensor t = make_op(x.rows(), x.cols(), {x}, [c](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*dx)[i] += c * self.grad[i];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor add_scalar(const Tensor& x, double c) {
  std::vector<double> out(x.values());
  for (auto& v : out) v += c;
  Tensor t = make_op(x.rows(), x.cols(), {x}, [](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*dx)[i] += self.grad[i];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) v = 1.0 / (1.0 + std::exp(-v));
  Tensor t = make_op(x.rows(), x.cols(), {x}, [](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double s = self.value[i];
        (*dx)[i] += self.grad[i] * s * (1.0 - s);
      }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor tanh_op(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) v = std::tanh(v);
  Tensor t = make_op(x.rows(), x.cols(), {x}, [](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double th = self.value[i];
        (*dx)[i] += self.grad[i] * (1.0 - th * th);
      }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.values());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  Tensor t = make_op(x.rows(), x.cols(), {x}, [](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0)) {
      const auto& xv = self.parents[0].values();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (xv[i] > 0.0) (*dx)[i] += self.grad[i];
    }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor log_clamped(const Tensor& x, double eps) {
  std::vector<double> out(x.values());
  for (auto& v : out) v = std::log(v > eps ? v : eps);
  Tensor t = make_op(x.rows(), x.cols(), {x}, [eps](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0)) {
      const auto& xv = self.parents[0].values();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (xv[i] > eps) (*dx)[i] += self.grad[i] / xv[i];
    }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor row_softmax(const Tensor& x) {
  const int n = x.rows(), m = x.cols();
  std::vector<double> out(x.values());
  for (int i = 0; i < n; ++i) {
    double* row = out.data() + static_cast<std::size_t>(i) * m;
    double mx = kNegInf;
    for (int j = 0; j < m; ++j) mx = std::max(mx, row[j]);
    if (!std::isfinite(mx))
      fail("row_softmax: row " + std::to_string(i) + " has no finite entry");
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < m; ++j) row[j] /= sum;
  }
  Tensor t = make_op(n, m, {x}, [n, m](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0)) {
      for (int i = 0; i < n; ++i) {
        const double* p = self.value.data() + static_cast<std::size_t>(i) * m;
        const double* g = self.grad.data() + static_cast<std::size_t>(i) * m;
        double dot = 0.0;
        for (int j = 0; j < m; ++j) dot += g[j] * p[j];
        double* d = dx->data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) d[j] += p[j] * (g[j] - dot);
      }
    }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor kmax_row_filter(const Tensor& x, int k) {
  if (k < 1) fail("kmax_row_filter: k must be >= 1, got " + std::to_string(k));
  const int n = x.rows(), m = x.cols();
  std::vector<double> out(static_cast<std::size_t>(n) * m, kNegInf);
  std::vector<unsigned char> kept(static_cast<std::size_t>(n) * m, 0);
  std::vector<int> idx(m);
  for (int i = 0; i < n; ++i) {
    const double* row = x.values().data() + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) idx[j] = j;
    const int kk = std::min(k, m);
    std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), [row](int a, int b) {
      if (row[a] != row[b]) return row[a] > row[b];
      return a < b;
    });
    for (int r = 0; r < kk; ++r) {
      const int j = idx[r];
      out[static_cast<std::size_t>(i) * m + j] = row[j];
      kept[static_cast<std::size_t>(i) * m + j] = 1;
    }
  }
  Tensor t = make_op(n, m, {x}, [kept = std::move(kept)](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (kept[i]) (*dx)[i] += self.grad[i];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor mask_cols_neginf(const Tensor& x, const std::vector<unsigned char>& keep) {
  if (static_cast<int>(keep.size()) != x.cols())
    fail("mask_cols_neginf: mask length " + std::to_string(keep.size()) + " vs " + shape_str(x));
  const int n = x.rows(), m = x.cols();
  std::vector<double> out(x.values());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      if (!keep[j]) out[static_cast<std::size_t>(i) * m + j] = kNegInf;
  Tensor t = make_op(n, m, {x}, [keep, m](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (keep[i % m]) (*dx)[i] += self.grad[i];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) fail("concat_cols: no parts");
  const int n = parts[0].rows();
  int total = 0;
  for (const auto& p : parts) {
    if (p.rows() != n)
      fail("concat_cols: row mismatch: " + shape_str(parts[0]) + " vs " + shape_str(p));
    total += p.cols();
  }
  std::vector<double> out(static_cast<std::size_t>(n) * total);
  std::vector<int> offsets(parts.size());
  int off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    offsets[p] = off;
    const int m = parts[p].cols();
    for (int i = 0; i < n; ++i)
      std::copy_n(parts[p].values().data() + static_cast<std::size_t>(i) * m, m,
                  out.data() + static_cast<std::size_t>(i) * total + off);
    off += m;
  }
  Tensor t = make_op(n, total, std::vector<Tensor>(parts.begin(), parts.end()),
                     [offsets, n, total](Tensor::Node& self) {
                       for (std::size_t p = 0; p < self.parents.size(); ++p) {
                         auto* d = grad_of(self, p);
                         if (!d) continue;
                         const int m = self.parents[p].cols();
                         for (int i = 0; i < n; ++i) {
                           const double* g =
                               self.grad.data() + static_cast<std::size_t>(i) * total + offsets[p];
                           double* di = d->data() + static_cast<std::size_t>(i) * m;
                           for (int j = 0; j < m; ++j) di[j] += g[j];
                         }
                       }
                     });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) fail("concat_rows: no parts");
  const int m = parts[0].cols();
  int total = 0;
  for (const auto& p : parts) {
    if (p.cols() != m)
      fail("concat_rows: column mismatch: " + shape_str(parts[0]) + " vs " + shape_str(p));
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(total) * m);
  std::vector<int> row_offsets(parts.size());
  int off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    row_offsets[p] = off;
    out.insert(out.end(), parts[p].values().begin(), parts[p].values().end());
    off += parts[p].rows();
  }
  Tensor t = make_op(total, m, std::vector<Tensor>(parts.begin(), parts.end()),
                     [row_offsets, m](Tensor::Node& self) {
                       for (std::size_t p = 0; p < self.parents.size(); ++p) {
                         auto* d = grad_of(self, p);
                         if (!d) continue;
                         const std::size_t base = static_cast<std::size_t>(row_offsets[p]) * m;
                         for (std::size_t i = 0; i < d->size(); ++i) (*d)[i] += self.grad[base + i];
                       }
                     });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& indices) {
  const int m = x.cols();
  for (int i : indices)
    if (i < 0 || i >= x.rows())
      fail("gather_rows: index " + std::to_string(i) + " out of range for " + shape_str(x));
  std::vector<double> out(indices.size() * static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < indices.size(); ++r)
    std::copy_n(x.values().data() + static_cast<std::size_t>(indices[r]) * m, m,
                out.data() + r * m);
  Tensor t = make_op(static_cast<int>(indices.size()), m, {x}, [indices, m](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0)) {
      for (std::size_t r = 0; r < indices.size(); ++r) {
        const double* g = self.grad.data() + r * m;
        double* d = dx->data() + static_cast<std::size_t>(indices[r]) * m;
        for (int j = 0; j < m; ++j) d[j] += g[j];
      }
    }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor unfold_rows(const Tensor& x, int size) {
  if (size < 1 || size > x.rows())
    fail("unfold_rows: window " + std::to_string(size) + " invalid for " + shape_str(x));
  const int len = x.rows(), in = x.cols();
  const int positions = len - size + 1;
  const int width = size * in;
  std::vector<double> out(static_cast<std::size_t>(positions) * width);
  for (int p = 0; p < positions; ++p)
    std::copy_n(x.values().data() + static_cast<std::size_t>(p) * in, width,
                out.data() + static_cast<std::size_t>(p) * width);
  Tensor t = make_op(positions, width, {x}, [positions, width, in](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0)) {
      for (int p = 0; p < positions; ++p) {
        const double* g = self.grad.data() + static_cast<std::size_t>(p) * width;
        double* d = dx->data() + static_cast<std::size_t>(p) * in;
        for (int j = 0; j < width; ++j) d[j] += g[j];
      }
    }
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor pad_rows(const Tensor& x, int target_rows) {
  if (target_rows < x.rows())
    fail("pad_rows: target " + std::to_string(target_rows) + " smaller than " + shape_str(x));
  const int m = x.cols();
  std::vector<double> out(static_cast<std::size_t>(target_rows) * m, 0.0);
  std::copy(x.values().begin(), x.values().end(), out.begin());
  Tensor t = make_op(target_rows, m, {x}, [](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0))
      for (std::size_t i = 0; i < dx->size(); ++i) (*dx)[i] += self.grad[i];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor max_over_time(const Tensor& x) {
  const int len = x.rows(), ch = x.cols();
  if (len < 1) fail("max_over_time: empty input " + shape_str(x));
  std::vector<double> out(ch);
  std::vector<int> argmax(ch, 0);
  for (int c = 0; c < ch; ++c) {
    double best = x.at(0, c);
    int best_r = 0;
    for (int r = 1; r < len; ++r) {
      const double v = x.at(r, c);
      if (v > best) {  // strict: ties stay at the lowest row index
        best = v;
        best_r = r;
      }
    }
    out[c] = best;
    argmax[c] = best_r;
  }
  Tensor t = make_op(1, ch, {x}, [argmax = std::move(argmax), ch](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0))
      for (int c = 0; c < ch; ++c)
        (*dx)[static_cast<std::size_t>(argmax[c]) * ch + c] += self.grad[c];
  });
  t.mutable_values() = std::move(out);
  return t;
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  Tensor t = make_op(1, 1, {x}, [](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0)) {
      const double g = self.grad[0];
      for (auto& d : *dx) d += g;
    }
  });
  t.mutable_values() = {s};
  return t;
}

Tensor mean_all(const Tensor& x) {
  const double inv = 1.0 / x.numel();
  double s = 0.0;
  for (double v : x.values()) s += v;
  Tensor t = make_op(1, 1, {x}, [inv](Tensor::Node& self) {
    if (auto* dx = grad_of(self, 0)) {
      const double g = self.grad[0] * inv;
      for (auto& d : *dx) d += g;
    }
  });
  t.mutable_values() = {s * inv};
  return t;
}

void backward(const Tensor& root) {
  if (!root.defined()) fail("backward: undefined tensor");
  if (root.numel() != 1)
    fail("backward: root must be a scalar, got " + shape_str(root));
  if (!root.requires_grad()) return;  // nothing trainable upstream

  // Post-order DFS over the trainable subgraph; reversed it yields a
  // topological order in which every consumer runs before its inputs.
  std::vector<Tensor::Node*> order;
  std::unordered_set<Tensor::Node*> seen;
  struct Frame {
    Tensor::Node* n;
    std::size_t next;
  };
  std::vector<Frame> stack{{root.node(), 0}};
  seen.insert(root.node());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Tensor::Node* p = f.n->parents[f.next++].node();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  // Interior grads are per-pass scratch; leaf grads persist and accumulate.
  for (Tensor::Node* n : order)
    if (!n->parents.empty()) n->grad.assign(n->value.size(), 0.0);
  root.node()->ensure_grad();
  root.node()->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

}  // namespace hrank
