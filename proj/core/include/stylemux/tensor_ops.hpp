#pragma once

// Forward ops plus their recorded backward steps. Shapes are checked up
// front and throw DimensionError; id lookups throw IndexError. Heavy matrix
// products go through Eigen maps over the flat row-major buffers.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "stylemux/tensor.hpp"

namespace stylemux::nn {

namespace detail {

template <class T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using EMap = Eigen::Map<EMat<T>>;
template <class T>
using ECMap = Eigen::Map<const EMat<T>>;
template <class T>
using EStrideMap = Eigen::Map<EMat<T>, 0, Eigen::OuterStride<>>;
template <class T>
using ECStrideMap = Eigen::Map<const EMat<T>, 0, Eigen::OuterStride<>>;

template <class T>
TensorT<T> make_output(Shape shape, bool requires_grad) {
  auto t = TensorT<T>::zeros(std::move(shape), false);
  t.node()->requires_grad = requires_grad;
  return t;
}

template <class T>
bool track(const TapeT<T>& tape, std::initializer_list<const TensorT<T>*> inputs) {
  if (!tape.recording()) return false;
  for (const auto* t : inputs) {
    if ((*t).requires_grad()) return true;
  }
  return false;
}

inline void require_rank2(const Shape& s, const char* op) {
  if (s.size() != 2) throw DimensionError(std::string(op) + ": expected a rank-2 tensor");
}

}  // namespace detail

// ---- basic arithmetic ----

template <class T>
TensorT<T> matmul(TapeT<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
  detail::require_rank2(a.shape(), "matmul");
  detail::require_rank2(b.shape(), "matmul");
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) throw DimensionError("matmul: inner dimensions differ");
  bool rec = detail::track(tape, {&a, &b});
  auto out = detail::make_output<T>({m, n}, rec);

  detail::ECMap<T> am(a.data().data(), m, k);
  detail::ECMap<T> bm(b.data().data(), k, n);
  detail::EMap<T> cm(out.data().data(), m, n);
  cm.noalias() = am * bm;

  if (rec) {
    auto an = a.node(), bn = b.node(), cn = out.node();
    tape.record([an, bn, cn, m, k, n]() {
      if (cn->grad.empty()) return;
      detail::ECMap<T> dg(cn->grad.data(), m, n);
      detail::ECMap<T> am2(an->data.data(), m, k);
      detail::ECMap<T> bm2(bn->data.data(), k, n);
      if (an->requires_grad) {
        an->ensure_grad();
        detail::EMap<T> da(an->grad.data(), m, k);
        da.noalias() += dg * bm2.transpose();
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        detail::EMap<T> db(bn->grad.data(), k, n);
        db.noalias() += am2.transpose() * dg;
      }
    });
  }
  return out;
}

template <class T>
TensorT<T> add(TapeT<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape() != b.shape()) throw DimensionError("add: shape mismatch");
  bool rec = detail::track(tape, {&a, &b});
  auto out = detail::make_output<T>(a.shape(), rec);
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (rec) {
    auto an = a.node(), bn = b.node(), cn = out.node();
    tape.record([an, bn, cn]() {
      if (cn->grad.empty()) return;
      if (an->requires_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < cn->grad.size(); ++i) an->grad[i] += cn->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < cn->grad.size(); ++i) bn->grad[i] += cn->grad[i];
      }
    });
  }
  return out;
}

template <class T>
TensorT<T> mul(TapeT<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape() != b.shape()) throw DimensionError("mul: shape mismatch");
  bool rec = detail::track(tape, {&a, &b});
  auto out = detail::make_output<T>(a.shape(), rec);
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (rec) {
    auto an = a.node(), bn = b.node(), cn = out.node();
    tape.record([an, bn, cn]() {
      if (cn->grad.empty()) return;
      if (an->requires_grad) {
        an->ensure_grad();
        for (size_t i = 0; i < cn->grad.size(); ++i) an->grad[i] += cn->grad[i] * bn->data[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (size_t i = 0; i < cn->grad.size(); ++i) bn->grad[i] += cn->grad[i] * an->data[i];
      }
    });
  }
  return out;
}

template <class T>
TensorT<T> scale(TapeT<T>& tape, const TensorT<T>& x, double c) {
  bool rec = detail::track(tape, {&x});
  auto out = detail::make_output<T>(x.shape(), rec);
  const T cc = static_cast<T>(c);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] * cc;
  if (rec) {
    auto xn = x.node(), cn = out.node();
    tape.record([xn, cn, cc]() {
      if (cn->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (size_t i = 0; i < cn->grad.size(); ++i) xn->grad[i] += cn->grad[i] * cc;
    });
  }
  return out;
}

// x: [N x C], bias: [C]; the bias is added to every row.
template <class T>
TensorT<T> add_bias(TapeT<T>& tape, const TensorT<T>& x, const TensorT<T>& bias) {
  detail::require_rank2(x.shape(), "add_bias");
  if (bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
    throw DimensionError("add_bias: bias must be rank-1 of width matching x");
  }
  const int n = x.dim(0), c = x.dim(1);
  bool rec = detail::track(tape, {&x, &bias});
  auto out = detail::make_output<T>(x.shape(), rec);
  const auto& xv = x.data();
  const auto& bv = bias.data();
  auto& ov = out.data();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) ov[static_cast<size_t>(i) * c + j] = xv[static_cast<size_t>(i) * c + j] + bv[j];
  }
  if (rec) {
    auto xn = x.node(), bn = bias.node(), cn = out.node();
    tape.record([xn, bn, cn, n, c]() {
      if (cn->grad.empty()) return;
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (size_t i = 0; i < cn->grad.size(); ++i) xn->grad[i] += cn->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < c; ++j) bn->grad[j] += cn->grad[static_cast<size_t>(i) * c + j];
        }
      }
    });
  }
  return out;
}

template <class T>
TensorT<T> relu(TapeT<T>& tape, const TensorT<T>& x) {
  bool rec = detail::track(tape, {&x});
  auto out = detail::make_output<T>(x.shape(), rec);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > T(0) ? xv[i] : T(0);
  if (rec) {
    auto xn = x.node(), cn = out.node();
    tape.record([xn, cn]() {
      if (cn->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (size_t i = 0; i < cn->grad.size(); ++i) {
        if (xn->data[i] > T(0)) xn->grad[i] += cn->grad[i];
      }
    });
  }
  return out;
}

// ---- normalizations ----

// Softmax along `axis` of a rank-1 or rank-2 tensor. Each slice along the
// axis sums to one; the shifted-exponent form keeps large inputs finite.
template <class T>
TensorT<T> softmax(TapeT<T>& tape, const TensorT<T>& x, int axis) {
  if (x.rank() != 1 && x.rank() != 2) throw DimensionError("softmax: rank must be 1 or 2");
  if (axis < 0 || axis >= x.rank()) throw DimensionError("softmax: axis out of range");
  const int rows = x.rank() == 2 ? x.dim(0) : 1;
  const int cols = x.rank() == 2 ? x.dim(1) : x.dim(0);
  // Slices run along the chosen axis.
  const bool along_cols = (x.rank() == 1) || (axis == 1);
  const int nslices = along_cols ? rows : cols;
  const int slice_len = along_cols ? cols : rows;
  const int stride = along_cols ? 1 : cols;

  bool rec = detail::track(tape, {&x});
  auto out = detail::make_output<T>(x.shape(), rec);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (int s = 0; s < nslices; ++s) {
    const size_t base = along_cols ? static_cast<size_t>(s) * cols : static_cast<size_t>(s);
    T mx = xv[base];
    for (int i = 1; i < slice_len; ++i) mx = std::max(mx, xv[base + static_cast<size_t>(i) * stride]);
    T denom = T(0);
    for (int i = 0; i < slice_len; ++i) {
      T e = std::exp(xv[base + static_cast<size_t>(i) * stride] - mx);
      ov[base + static_cast<size_t>(i) * stride] = e;
      denom += e;
    }
    for (int i = 0; i < slice_len; ++i) ov[base + static_cast<size_t>(i) * stride] /= denom;
  }
  if (rec) {
    auto xn = x.node(), cn = out.node();
    tape.record([xn, cn, nslices, slice_len, stride, cols, along_cols]() {
      if (cn->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (int s = 0; s < nslices; ++s) {
        const size_t base = along_cols ? static_cast<size_t>(s) * cols : static_cast<size_t>(s);
        T dot = T(0);
        for (int i = 0; i < slice_len; ++i) {
          const size_t idx = base + static_cast<size_t>(i) * stride;
          dot += cn->grad[idx] * cn->data[idx];
        }
        for (int i = 0; i < slice_len; ++i) {
          const size_t idx = base + static_cast<size_t>(i) * stride;
          xn->grad[idx] += cn->data[idx] * (cn->grad[idx] - dot);
        }
      }
    });
  }
  return out;
}

// Row-wise layer normalization over the last dimension, with learned gain
// and bias of width C. Population variance.
template <class T>
TensorT<T> layer_norm(TapeT<T>& tape, const TensorT<T>& x, const TensorT<T>& gain,
                      const TensorT<T>& bias, double eps = 1e-5) {
  detail::require_rank2(x.shape(), "layer_norm");
  const int n = x.dim(0), c = x.dim(1);
  if (gain.rank() != 1 || gain.dim(0) != c || bias.rank() != 1 || bias.dim(0) != c) {
    throw DimensionError("layer_norm: gain/bias must be rank-1 of width matching x");
  }
  bool rec = detail::track(tape, {&x, &gain, &bias});
  auto out = detail::make_output<T>(x.shape(), rec);
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(n));
  auto xhat = std::make_shared<std::vector<T>>(x.data().size());
  const auto& xv = x.data();
  const auto& gv = gain.data();
  const auto& bv = bias.data();
  auto& ov = out.data();
  for (int i = 0; i < n; ++i) {
    const size_t base = static_cast<size_t>(i) * c;
    T mean = T(0);
    for (int j = 0; j < c; ++j) mean += xv[base + j];
    mean /= static_cast<T>(c);
    T var = T(0);
    for (int j = 0; j < c; ++j) {
      T d = xv[base + j] - mean;
      var += d * d;
    }
    var /= static_cast<T>(c);
    T istd = T(1) / std::sqrt(var + static_cast<T>(eps));
    (*inv_std)[static_cast<size_t>(i)] = istd;
    for (int j = 0; j < c; ++j) {
      T xh = (xv[base + j] - mean) * istd;
      (*xhat)[base + j] = xh;
      ov[base + j] = gv[j] * xh + bv[j];
    }
  }
  if (rec) {
    auto xn = x.node(), gn = gain.node(), bn = bias.node(), cn = out.node();
    tape.record([xn, gn, bn, cn, inv_std, xhat, n, c]() {
      if (cn->grad.empty()) return;
      if (gn->requires_grad) {
        gn->ensure_grad();
        for (int i = 0; i < n; ++i) {
          const size_t base = static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) gn->grad[j] += cn->grad[base + j] * (*xhat)[base + j];
        }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int i = 0; i < n; ++i) {
          const size_t base = static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) bn->grad[j] += cn->grad[base + j];
        }
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (int i = 0; i < n; ++i) {
          const size_t base = static_cast<size_t>(i) * c;
          // dy through gain, then the standard layer-norm input gradient.
          T mean_dg = T(0), mean_dg_xh = T(0);
          for (int j = 0; j < c; ++j) {
            T dg = cn->grad[base + j] * gn->data[j];
            mean_dg += dg;
            mean_dg_xh += dg * (*xhat)[base + j];
          }
          mean_dg /= static_cast<T>(c);
          mean_dg_xh /= static_cast<T>(c);
          const T istd = (*inv_std)[static_cast<size_t>(i)];
          for (int j = 0; j < c; ++j) {
            T dg = cn->grad[base + j] * gn->data[j];
            xn->grad[base + j] += (dg - mean_dg - (*xhat)[base + j] * mean_dg_xh) * istd;
          }
        }
      }
    });
  }
  return out;
}

// ---- structural ops ----

template <class T>
TensorT<T> embedding_lookup(TapeT<T>& tape, const TensorT<T>& table, const std::vector<int>& ids) {
  detail::require_rank2(table.shape(), "embedding_lookup");
  if (ids.empty()) throw DimensionError("embedding_lookup: empty id list");
  const int v = table.dim(0), e = table.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= v) throw IndexError("embedding_lookup: id " + std::to_string(id) + " out of range");
  }
  bool rec = detail::track(tape, {&table});
  auto out = detail::make_output<T>({static_cast<int>(ids.size()), e}, rec);
  const auto& tv = table.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ids.size(); ++i) {
    std::memcpy(ov.data() + i * e, tv.data() + static_cast<size_t>(ids[i]) * e, sizeof(T) * static_cast<size_t>(e));
  }
  if (rec) {
    auto tn = table.node(), cn = out.node();
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    tape.record([tn, cn, ids_copy, e]() {
      if (cn->grad.empty() || !tn->requires_grad) return;
      tn->ensure_grad();
      for (size_t i = 0; i < ids_copy->size(); ++i) {
        const size_t dst = static_cast<size_t>((*ids_copy)[i]) * e;
        const size_t src = i * e;
        for (int j = 0; j < e; ++j) tn->grad[dst + j] += cn->grad[src + j];
      }
    });
  }
  return out;
}

template <class T>
TensorT<T> concat_last_dim(TapeT<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
  detail::require_rank2(a.shape(), "concat_last_dim");
  detail::require_rank2(b.shape(), "concat_last_dim");
  if (a.dim(0) != b.dim(0)) throw DimensionError("concat_last_dim: row count mismatch");
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  bool rec = detail::track(tape, {&a, &b});
  auto out = detail::make_output<T>({n, ca + cb}, rec);
  const auto& av = a.data();
  const auto& bv = b.data();
  auto& ov = out.data();
  for (int i = 0; i < n; ++i) {
    std::memcpy(ov.data() + static_cast<size_t>(i) * (ca + cb), av.data() + static_cast<size_t>(i) * ca,
                sizeof(T) * static_cast<size_t>(ca));
    std::memcpy(ov.data() + static_cast<size_t>(i) * (ca + cb) + ca, bv.data() + static_cast<size_t>(i) * cb,
                sizeof(T) * static_cast<size_t>(cb));
  }
  if (rec) {
    auto an = a.node(), bn = b.node(), cn = out.node();
    tape.record([an, bn, cn, n, ca, cb]() {
      if (cn->grad.empty()) return;
      for (int i = 0; i < n; ++i) {
        const size_t base = static_cast<size_t>(i) * (ca + cb);
        if (an->requires_grad) {
          an->ensure_grad();
          for (int j = 0; j < ca; ++j) an->grad[static_cast<size_t>(i) * ca + j] += cn->grad[base + j];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int j = 0; j < cb; ++j) bn->grad[static_cast<size_t>(i) * cb + j] += cn->grad[base + ca + j];
        }
      }
    });
  }
  return out;
}

template <class T>
TensorT<T> concat_last_dim(TapeT<T>& tape, const TensorT<T>& a, const TensorT<T>& b, const TensorT<T>& c) {
  return concat_last_dim(tape, concat_last_dim(tape, a, b), c);
}

// Inverted dropout: survivors are scaled by 1/(1-p) so expectations match.
// With train=false (or p=0) the input tensor is returned unchanged.
template <class T>
TensorT<T> dropout(TapeT<T>& tape, const TensorT<T>& x, double p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout: p must be in [0, 1)");
  if (!train || p == 0.0) return x;
  bool rec = detail::track(tape, {&x});
  auto out = detail::make_output<T>(x.shape(), rec);
  auto mask = std::make_shared<std::vector<uint8_t>>(x.data().size());
  const T inv_keep = static_cast<T>(1.0 / (1.0 - p));
  const auto& xv = x.data();
  auto& ov = out.data();
  for (size_t i = 0; i < ov.size(); ++i) {
    bool keep = rng.uniform() >= p;
    (*mask)[i] = keep ? 1 : 0;
    ov[i] = keep ? xv[i] * inv_keep : T(0);
  }
  if (rec) {
    auto xn = x.node(), cn = out.node();
    tape.record([xn, cn, mask, inv_keep]() {
      if (cn->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (size_t i = 0; i < cn->grad.size(); ++i) {
        if ((*mask)[i]) xn->grad[i] += cn->grad[i] * inv_keep;
      }
    });
  }
  return out;
}

// Mean negative log-likelihood of `targets` under row-wise softmax of
// `logits`. Rows whose target equals ignore_id are excluded from the mean.
template <class T>
TensorT<T> cross_entropy(TapeT<T>& tape, const TensorT<T>& logits, const std::vector<int>& targets,
                         int ignore_id = -1) {
  detail::require_rank2(logits.shape(), "cross_entropy");
  const int n = logits.dim(0), v = logits.dim(1);
  if (static_cast<int>(targets.size()) != n) throw DimensionError("cross_entropy: target count mismatch");
  int counted = 0;
  for (int t : targets) {
    if (t == ignore_id) continue;
    if (t < 0 || t >= v) throw IndexError("cross_entropy: target id " + std::to_string(t) + " out of range");
    ++counted;
  }
  if (counted == 0) throw DataError("cross_entropy: no targets to score");
  bool rec = detail::track(tape, {&logits});
  auto out = detail::make_output<T>({1}, rec);
  const auto& lv = logits.data();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (targets[static_cast<size_t>(i)] == ignore_id) continue;
    const size_t base = static_cast<size_t>(i) * v;
    T mx = lv[base];
    for (int j = 1; j < v; ++j) mx = std::max(mx, lv[base + j]);
    double denom = 0.0;
    for (int j = 0; j < v; ++j) denom += std::exp(static_cast<double>(lv[base + j] - mx));
    const double lse = static_cast<double>(mx) + std::log(denom);
    total += lse - static_cast<double>(lv[base + targets[static_cast<size_t>(i)]]);
  }
  out.data()[0] = static_cast<T>(total / counted);
  if (rec) {
    auto ln = logits.node(), cn = out.node();
    auto tgt = std::make_shared<std::vector<int>>(targets);
    tape.record([ln, cn, tgt, n, v, counted, ignore_id]() {
      if (cn->grad.empty() || !ln->requires_grad) return;
      ln->ensure_grad();
      const T g = cn->grad[0] / static_cast<T>(counted);
      for (int i = 0; i < n; ++i) {
        const int t = (*tgt)[static_cast<size_t>(i)];
        if (t == ignore_id) continue;
        const size_t base = static_cast<size_t>(i) * v;
        T mx = ln->data[base];
        for (int j = 1; j < v; ++j) mx = std::max(mx, ln->data[base + j]);
        T denom = T(0);
        for (int j = 0; j < v; ++j) denom += std::exp(ln->data[base + j] - mx);
        for (int j = 0; j < v; ++j) {
          T p = std::exp(ln->data[base + j] - mx) / denom;
          ln->grad[base + j] += g * (p - (j == t ? T(1) : T(0)));
        }
      }
    });
  }
  return out;
}

// ---- attention ----

// Scaled dot-product attention over a padded batch, fused across heads.
// q is [B*Tq x d], k and v are [B*Tkv x d]; q_lens/kv_lens give the valid
// prefix of each example. Padded query rows come out zero. causal=true
// restricts example b's query i to keys 0..i (self-attention only).
template <class T>
TensorT<T> attention(TapeT<T>& tape, const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                     const std::vector<int>& q_lens, const std::vector<int>& kv_lens, int heads,
                     bool causal) {
  detail::require_rank2(q.shape(), "attention");
  detail::require_rank2(k.shape(), "attention");
  detail::require_rank2(v.shape(), "attention");
  const int d = q.dim(1);
  if (k.dim(1) != d || v.dim(1) != d) throw DimensionError("attention: model width mismatch");
  if (k.dim(0) != v.dim(0)) throw DimensionError("attention: k/v row count mismatch");
  if (heads <= 0 || d % heads != 0) throw DimensionError("attention: heads must divide width");
  const int b = static_cast<int>(q_lens.size());
  if (b == 0 || static_cast<int>(kv_lens.size()) != b) throw DimensionError("attention: batch length mismatch");
  if (q.dim(0) % b != 0 || k.dim(0) % b != 0) throw DimensionError("attention: rows not divisible by batch");
  const int tq = q.dim(0) / b;
  const int tkv = k.dim(0) / b;
  for (int i = 0; i < b; ++i) {
    if (q_lens[static_cast<size_t>(i)] < 1 || q_lens[static_cast<size_t>(i)] > tq ||
        kv_lens[static_cast<size_t>(i)] < 1 || kv_lens[static_cast<size_t>(i)] > tkv) {
      throw DimensionError("attention: lengths out of range");
    }
  }
  if (causal && (tq != tkv || q_lens != kv_lens)) {
    throw DimensionError("attention: causal requires matching query/key layout");
  }
  const int dh = d / heads;
  const T scale_f = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  bool rec = detail::track(tape, {&q, &k, &v});
  auto out = detail::make_output<T>(q.shape(), rec);
  // Probabilities saved per (example, head) for the backward pass.
  auto probs = std::make_shared<std::vector<detail::EMat<T>>>();
  probs->reserve(static_cast<size_t>(b) * heads);

  const int64_t strd = d;
  for (int e = 0; e < b; ++e) {
    const int lq = q_lens[static_cast<size_t>(e)];
    const int lk = kv_lens[static_cast<size_t>(e)];
    for (int h = 0; h < heads; ++h) {
      detail::ECStrideMap<T> qm(q.data().data() + static_cast<size_t>(e) * tq * d + static_cast<size_t>(h) * dh,
                                lq, dh, Eigen::OuterStride<>(strd));
      detail::ECStrideMap<T> km(k.data().data() + static_cast<size_t>(e) * tkv * d + static_cast<size_t>(h) * dh,
                                lk, dh, Eigen::OuterStride<>(strd));
      detail::ECStrideMap<T> vm(v.data().data() + static_cast<size_t>(e) * tkv * d + static_cast<size_t>(h) * dh,
                                lk, dh, Eigen::OuterStride<>(strd));
      detail::EMat<T> s(lq, lk);
      s.noalias() = qm * km.transpose();
      s *= scale_f;
      for (int i = 0; i < lq; ++i) {
        const int limit = causal ? i + 1 : lk;
        T mx = s(i, 0);
        for (int j = 1; j < limit; ++j) mx = std::max(mx, s(i, j));
        T denom = T(0);
        for (int j = 0; j < limit; ++j) {
          T ev = std::exp(s(i, j) - mx);
          s(i, j) = ev;
          denom += ev;
        }
        for (int j = 0; j < limit; ++j) s(i, j) /= denom;
        for (int j = limit; j < lk; ++j) s(i, j) = T(0);
      }
      detail::EStrideMap<T> om(out.data().data() + static_cast<size_t>(e) * tq * d + static_cast<size_t>(h) * dh,
                               lq, dh, Eigen::OuterStride<>(strd));
      om.noalias() = s * vm;
      if (rec) probs->push_back(std::move(s));
    }
  }

  if (rec) {
    auto qn = q.node(), kn = k.node(), vn = v.node(), cn = out.node();
    auto ql = std::make_shared<std::vector<int>>(q_lens);
    auto kl = std::make_shared<std::vector<int>>(kv_lens);
    tape.record([qn, kn, vn, cn, probs, ql, kl, b, tq, tkv, d, dh, heads, scale_f]() {
      if (cn->grad.empty()) return;
      const bool nq = qn->requires_grad, nk = kn->requires_grad, nv = vn->requires_grad;
      if (!nq && !nk && !nv) return;
      if (nq) qn->ensure_grad();
      if (nk) kn->ensure_grad();
      if (nv) vn->ensure_grad();
      const int64_t strd2 = d;
      size_t pi = 0;
      for (int e = 0; e < b; ++e) {
        const int lq = (*ql)[static_cast<size_t>(e)];
        const int lk = (*kl)[static_cast<size_t>(e)];
        for (int h = 0; h < heads; ++h) {
          const detail::EMat<T>& a = (*probs)[pi++];
          detail::ECStrideMap<T> dout(cn->grad.data() + static_cast<size_t>(e) * tq * d + static_cast<size_t>(h) * dh,
                                      lq, dh, Eigen::OuterStride<>(strd2));
          detail::ECStrideMap<T> qm(qn->data.data() + static_cast<size_t>(e) * tq * d + static_cast<size_t>(h) * dh,
                                    lq, dh, Eigen::OuterStride<>(strd2));
          detail::ECStrideMap<T> km(kn->data.data() + static_cast<size_t>(e) * tkv * d + static_cast<size_t>(h) * dh,
                                    lk, dh, Eigen::OuterStride<>(strd2));
          detail::ECStrideMap<T> vm(vn->data.data() + static_cast<size_t>(e) * tkv * d + static_cast<size_t>(h) * dh,
                                    lk, dh, Eigen::OuterStride<>(strd2));
          if (nv) {
            detail::EStrideMap<T> dv(vn->grad.data() + static_cast<size_t>(e) * tkv * d + static_cast<size_t>(h) * dh,
                                     lk, dh, Eigen::OuterStride<>(strd2));
            dv.noalias() += a.transpose() * dout;
          }
          if (nq || nk) {
            detail::EMat<T> da(lq, lk);
            da.noalias() = dout * vm.transpose();
            // dS = A .* (dA - rowsum(dA .* A)); masked cells have A == 0.
            detail::EMat<T> ds(lq, lk);
            for (int i = 0; i < lq; ++i) {
              T dot = T(0);
              for (int j = 0; j < lk; ++j) dot += da(i, j) * a(i, j);
              for (int j = 0; j < lk; ++j) ds(i, j) = a(i, j) * (da(i, j) - dot) * scale_f;
            }
            if (nq) {
              detail::EStrideMap<T> dq(qn->grad.data() + static_cast<size_t>(e) * tq * d + static_cast<size_t>(h) * dh,
                                       lq, dh, Eigen::OuterStride<>(strd2));
              dq.noalias() += ds * km;
            }
            if (nk) {
              detail::EStrideMap<T> dk(kn->grad.data() + static_cast<size_t>(e) * tkv * d + static_cast<size_t>(h) * dh,
                                       lk, dh, Eigen::OuterStride<>(strd2));
              dk.noalias() += ds.transpose() * qm;
            }
          }
        }
      }
    });
  }
  return out;
}

// ---- pooling / reshaping for the convolutional classifier ----

// Slides a width-w window over the rows of x [T x E] and flattens each
// window, giving [T-w+1 x w*E].
template <class T>
TensorT<T> unfold(TapeT<T>& tape, const TensorT<T>& x, int w) {
  detail::require_rank2(x.shape(), "unfold");
  const int t = x.dim(0), e = x.dim(1);
  if (w < 1 || w > t) throw DimensionError("unfold: window must fit in input");
  const int rows = t - w + 1;
  bool rec = detail::track(tape, {&x});
  auto out = detail::make_output<T>({rows, w * e}, rec);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (int i = 0; i < rows; ++i) {
    std::memcpy(ov.data() + static_cast<size_t>(i) * w * e, xv.data() + static_cast<size_t>(i) * e,
                sizeof(T) * static_cast<size_t>(w) * e);
  }
  if (rec) {
    auto xn = x.node(), cn = out.node();
    tape.record([xn, cn, rows, w, e]() {
      if (cn->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < w * e; ++j) {
          xn->grad[static_cast<size_t>(i) * e + j] += cn->grad[static_cast<size_t>(i) * w * e + j];
        }
      }
    });
  }
  return out;
}

// Column-wise max over rows: [R x C] -> [1 x C]. Ties keep the first row,
// so the gradient routing is deterministic.
template <class T>
TensorT<T> col_max(TapeT<T>& tape, const TensorT<T>& x) {
  detail::require_rank2(x.shape(), "col_max");
  const int r = x.dim(0), c = x.dim(1);
  bool rec = detail::track(tape, {&x});
  auto out = detail::make_output<T>({1, c}, rec);
  auto arg = std::make_shared<std::vector<int>>(static_cast<size_t>(c), 0);
  const auto& xv = x.data();
  auto& ov = out.data();
  for (int j = 0; j < c; ++j) {
    T best = xv[j];
    int bi = 0;
    for (int i = 1; i < r; ++i) {
      T val = xv[static_cast<size_t>(i) * c + j];
      if (val > best) {
        best = val;
        bi = i;
      }
    }
    ov[static_cast<size_t>(j)] = best;
    (*arg)[static_cast<size_t>(j)] = bi;
  }
  if (rec) {
    auto xn = x.node(), cn = out.node();
    tape.record([xn, cn, arg, c]() {
      if (cn->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (int j = 0; j < c; ++j) {
        xn->grad[static_cast<size_t>((*arg)[static_cast<size_t>(j)]) * c + j] += cn->grad[static_cast<size_t>(j)];
      }
    });
  }
  return out;
}

template <class T>
TensorT<T> sum(TapeT<T>& tape, const TensorT<T>& x) {
  bool rec = detail::track(tape, {&x});
  auto out = detail::make_output<T>({1}, rec);
  double total = 0.0;
  for (T v : x.data()) total += static_cast<double>(v);
  out.data()[0] = static_cast<T>(total);
  if (rec) {
    auto xn = x.node(), cn = out.node();
    tape.record([xn, cn]() {
      if (cn->grad.empty() || !xn->requires_grad) return;
      xn->ensure_grad();
      for (auto& g : xn->grad) g += cn->grad[0];
    });
  }
  return out;
}

template <class T>
TensorT<T> linear(TapeT<T>& tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
  return add_bias(tape, matmul(tape, x, w), b);
}

}  // namespace stylemux::nn
