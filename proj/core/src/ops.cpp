// SPDX-License-Identifier: Apache-2.0
#include "cldistill/ops.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cldistill {
namespace {

bool track(const Tape& tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape.recording()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

void check_scalar(const Tensor& t, const char* op) {
  if (t.size() != 1)
    throw std::invalid_argument(std::string(op) + ": expected scalar tensor");
}

void check_finite(std::span<const double> v, const char* op) {
  for (double x : v)
    if (!std::isfinite(x))
      throw std::runtime_error(std::string(op) + ": non-finite result");
}

Tensor binary_elementwise(Tape& tape, const Tensor& a, const Tensor& b,
                          const char* name, double (*fwd)(double, double),
                          void (*bwd)(double upstream, double av, double bv,
                                      double* ga, double* gb)) {
  check_same_shape(a, b, name);
  std::vector<double> out(a.size());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
  Tensor result = Tensor::from_values(a.shape(), std::move(out));
  if (track(tape, {&a, &b})) {
    result.set_requires_grad(true);
    Tensor ac = a, bc = b, rc = result;
    tape.record(result, [ac, bc, rc, bwd]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto avz = ac.data();
      auto bvz = bc.data();
      std::span<double> ga, gb;
      if (ac.requires_grad()) ga = ac.grad_mut();
      if (bc.requires_grad()) gb = bc.grad_mut();
      for (std::size_t i = 0; i < g.size(); ++i) {
        double da = 0.0, db = 0.0;
        bwd(g[i], avz[i], bvz[i], &da, &db);
        if (!ga.empty()) ga[i] += da;
        if (!gb.empty()) gb[i] += db;
      }
    });
  }
  return result;
}

Tensor unary_elementwise(Tape& tape, const Tensor& a, const char* name,
                         double (*fwd)(double),
                         double (*dfwd)(double x, double y)) {
  std::vector<double> out(a.size());
  auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
  Tensor result = Tensor::from_values(a.shape(), std::move(out));
  if (track(tape, {&a})) {
    result.set_requires_grad(true);
    Tensor ac = a, rc = result;
    tape.record(result, [ac, rc, dfwd]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto x = ac.data();
      auto y = rc.data();
      auto ga = ac.grad_mut();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfwd(x[i], y[i]);
    });
  }
  return result;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "add", [](double x, double y) { return x + y; },
      [](double g, double, double, double* ga, double* gb) {
        *ga = g;
        *gb = g;
      });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "sub", [](double x, double y) { return x - y; },
      [](double g, double, double, double* ga, double* gb) {
        *ga = g;
        *gb = -g;
      });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      tape, a, b, "mul", [](double x, double y) { return x * y; },
      [](double g, double x, double y, double* ga, double* gb) {
        *ga = g * y;
        *gb = g * x;
      });
}

Tensor scale(Tape& tape, const Tensor& a, double c) {
  std::vector<double> out(a.size());
  auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  Tensor result = Tensor::from_values(a.shape(), std::move(out));
  if (track(tape, {&a})) {
    result.set_requires_grad(true);
    Tensor ac = a, rc = result;
    tape.record(result, [ac, rc, c]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto ga = ac.grad_mut();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
    });
  }
  return result;
}

Tensor tanh_t(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid_t(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, "sigmoid",
      [](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log_t(Tape& tape, const Tensor& a) {
  for (double x : a.data())
    if (x <= 0.0) throw std::invalid_argument("log: input must be positive");
  return unary_elementwise(
      tape, a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor abs_t(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, "abs", [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor matvec(Tape& tape, const Tensor& w, const Tensor& x) {
  if (w.shape().size() != 2 || x.shape().size() != 1 || w.cols() != x.size())
    throw std::invalid_argument("matvec: expected W[m,n] and x[n]");
  const std::size_t m = w.rows(), n = w.cols();
  std::vector<double> out(m, 0.0);
  auto wv = w.data();
  auto xv = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += wv[i * n + j] * xv[j];
    out[i] = s;
  }
  Tensor result = Tensor::from_values({m}, std::move(out));
  if (track(tape, {&w, &x})) {
    result.set_requires_grad(true);
    Tensor wc = w, xc = x, rc = result;
    tape.record(result, [wc, xc, rc, m, n]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      if (wc.requires_grad()) {
        auto gw = wc.grad_mut();
        auto xv2 = xc.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gw[i * n + j] += g[i] * xv2[j];
      }
      if (xc.requires_grad()) {
        auto gx = xc.grad_mut();
        auto wv2 = wc.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gx[j] += wv2[i * n + j] * g[i];
      }
    });
  }
  return result;
}

Tensor linear(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& b) {
  return add(tape, matvec(tape, w, x), b);
}

Tensor rows_linear(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& b) {
  if (w.shape().size() != 2 || x.shape().size() != 2 || w.cols() != x.cols())
    throw std::invalid_argument("rows_linear: expected W[m,n] and X[L,n]");
  if (b.shape().size() != 1 || b.size() != w.rows())
    throw std::invalid_argument("rows_linear: bias must be [m]");
  const std::size_t rows = x.rows(), m = w.rows(), n = w.cols();
  std::vector<double> out(rows * m, 0.0);
  auto wv = w.data();
  auto xv = x.data();
  auto bv = b.data();
  for (std::size_t l = 0; l < rows; ++l)
    for (std::size_t i = 0; i < m; ++i) {
      double s = bv[i];
      for (std::size_t j = 0; j < n; ++j) s += wv[i * n + j] * xv[l * n + j];
      out[l * m + i] = s;
    }
  Tensor result = Tensor::from_values({rows, m}, std::move(out));
  if (track(tape, {&w, &x, &b})) {
    result.set_requires_grad(true);
    Tensor wc = w, xc = x, bc = b, rc = result;
    tape.record(result, [wc, xc, bc, rc, rows, m, n]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto wv2 = wc.data();
      auto xv2 = xc.data();
      std::span<double> gw, gx, gb;
      if (wc.requires_grad()) gw = wc.grad_mut();
      if (xc.requires_grad()) gx = xc.grad_mut();
      if (bc.requires_grad()) gb = bc.grad_mut();
      for (std::size_t l = 0; l < rows; ++l)
        for (std::size_t i = 0; i < m; ++i) {
          const double gi = g[l * m + i];
          if (gi == 0.0) continue;
          if (!gb.empty()) gb[i] += gi;
          for (std::size_t j = 0; j < n; ++j) {
            if (!gw.empty()) gw[i * n + j] += gi * xv2[l * n + j];
            if (!gx.empty()) gx[l * n + j] += gi * wv2[i * n + j];
          }
        }
    });
  }
  return result;
}

Tensor embedding_rows(Tape& tape, const Tensor& table, std::span<const int> ids) {
  if (table.shape().size() != 2)
    throw std::invalid_argument("embedding_rows: table must be 2-D");
  if (ids.empty()) throw std::invalid_argument("embedding_rows: empty id list");
  const std::size_t v = table.rows(), d = table.cols();
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= v)
      throw std::out_of_range("embedding_rows: token id out of vocabulary");
  std::vector<double> out(ids.size() * d);
  auto tv = table.data();
  for (std::size_t l = 0; l < ids.size(); ++l)
    std::copy_n(tv.begin() + static_cast<std::size_t>(ids[l]) * d, d,
                out.begin() + l * d);
  Tensor result = Tensor::from_values({ids.size(), d}, std::move(out));
  if (track(tape, {&table})) {
    result.set_requires_grad(true);
    Tensor tc = table, rc = result;
    std::vector<int> idv(ids.begin(), ids.end());
    tape.record(result, [tc, rc, idv, d]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto gt = tc.grad_mut();
      for (std::size_t l = 0; l < idv.size(); ++l)
        for (std::size_t j = 0; j < d; ++j)
          gt[static_cast<std::size_t>(idv[l]) * d + j] += g[l * d + j];
    });
  }
  return result;
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  std::size_t d = 0, total = 0;
  for (const Tensor& p : parts) {
    const std::size_t pd = p.shape().size() == 1 ? p.size() : p.cols();
    if (d == 0)
      d = pd;
    else if (pd != d)
      throw std::invalid_argument("concat_rows: row width mismatch");
    total += p.shape().size() == 1 ? 1 : p.rows();
  }
  std::vector<double> out;
  out.reserve(total * d);
  for (const Tensor& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  Tensor result = Tensor::from_values({total, d}, std::move(out));
  bool needs = tape.recording();
  if (needs) {
    needs = false;
    for (const Tensor& p : parts) needs = needs || p.requires_grad();
  }
  if (needs) {
    result.set_requires_grad(true);
    Tensor rc = result;
    std::vector<Tensor> pc = parts;
    tape.record(result, [pc, rc]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      std::size_t offset = 0;
      for (Tensor& p : pc) {
        const std::size_t len = p.size();
        if (p.requires_grad()) {
          auto gp = p.grad_mut();
          for (std::size_t i = 0; i < len; ++i) gp[i] += g[offset + i];
        }
        offset += len;
      }
    });
  }
  return result;
}

Tensor mean_rows(Tape& tape, const Tensor& x) {
  if (x.shape().size() != 2) throw std::invalid_argument("mean_rows: tensor is not 2-D");
  const std::size_t rows = x.rows(), d = x.cols();
  std::vector<double> out(d, 0.0);
  auto xv = x.data();
  for (std::size_t l = 0; l < rows; ++l)
    for (std::size_t j = 0; j < d; ++j) out[j] += xv[l * d + j];
  for (std::size_t j = 0; j < d; ++j) out[j] /= static_cast<double>(rows);
  Tensor result = Tensor::from_values({d}, std::move(out));
  if (track(tape, {&x})) {
    result.set_requires_grad(true);
    Tensor xc = x, rc = result;
    tape.record(result, [xc, rc, rows, d]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto gx = xc.grad_mut();
      const double inv = 1.0 / static_cast<double>(rows);
      for (std::size_t l = 0; l < rows; ++l)
        for (std::size_t j = 0; j < d; ++j) gx[l * d + j] += g[j] * inv;
    });
  }
  return result;
}

Tensor broadcast_rows(Tape& tape, const Tensor& v, std::size_t rows) {
  if (v.shape().size() != 1) throw std::invalid_argument("broadcast_rows: vector expected");
  if (rows == 0) throw std::invalid_argument("broadcast_rows: zero rows");
  const std::size_t d = v.size();
  std::vector<double> out(rows * d);
  auto vv = v.data();
  for (std::size_t l = 0; l < rows; ++l)
    std::copy_n(vv.begin(), d, out.begin() + l * d);
  Tensor result = Tensor::from_values({rows, d}, std::move(out));
  if (track(tape, {&v})) {
    result.set_requires_grad(true);
    Tensor vc = v, rc = result;
    tape.record(result, [vc, rc, rows, d]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto gv = vc.grad_mut();
      for (std::size_t l = 0; l < rows; ++l)
        for (std::size_t j = 0; j < d; ++j) gv[j] += g[l * d + j];
    });
  }
  return result;
}

Tensor sum_t(Tape& tape, const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  Tensor result = Tensor::scalar(s);
  if (track(tape, {&a})) {
    result.set_requires_grad(true);
    Tensor ac = a, rc = result;
    tape.record(result, [ac, rc]() mutable {
      if (!rc.has_grad()) return;
      const double g = rc.grad()[0];
      auto ga = ac.grad_mut();
      for (double& x : ga) x += g;
    });
  }
  return result;
}

Tensor mean_t(Tape& tape, const Tensor& a) {
  return scale(tape, sum_t(tape, a), 1.0 / static_cast<double>(a.size()));
}

Tensor index_t(Tape& tape, const Tensor& a, std::size_t i) {
  if (i >= a.size()) throw std::out_of_range("index: position out of range");
  Tensor result = Tensor::scalar(a.at(i));
  if (track(tape, {&a})) {
    result.set_requires_grad(true);
    Tensor ac = a, rc = result;
    tape.record(result, [ac, rc, i]() mutable {
      if (!rc.has_grad()) return;
      ac.grad_mut()[i] += rc.grad()[0];
    });
  }
  return result;
}

Tensor gather_t(Tape& tape, const Tensor& a, std::span<const int> idx) {
  if (a.shape().size() != 1) throw std::invalid_argument("gather: vector expected");
  if (idx.empty()) throw std::invalid_argument("gather: empty index list");
  std::vector<double> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || static_cast<std::size_t>(idx[k]) >= a.size())
      throw std::out_of_range("gather: index out of range");
    out[k] = a.at(static_cast<std::size_t>(idx[k]));
  }
  Tensor result = Tensor::from_values({idx.size()}, std::move(out));
  if (track(tape, {&a})) {
    result.set_requires_grad(true);
    Tensor ac = a, rc = result;
    std::vector<int> iv(idx.begin(), idx.end());
    tape.record(result, [ac, rc, iv]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto ga = ac.grad_mut();
      for (std::size_t k = 0; k < iv.size(); ++k)
        ga[static_cast<std::size_t>(iv[k])] += g[k];
    });
  }
  return result;
}

Tensor weighted_sum(Tape& tape, const Tensor& a, std::span<const double> weights) {
  if (a.size() != weights.size())
    throw std::invalid_argument("weighted_sum: weight count mismatch");
  double s = 0.0;
  auto av = a.data();
  for (std::size_t i = 0; i < weights.size(); ++i) s += av[i] * weights[i];
  Tensor result = Tensor::scalar(s);
  if (track(tape, {&a})) {
    result.set_requires_grad(true);
    Tensor ac = a, rc = result;
    std::vector<double> wv(weights.begin(), weights.end());
    tape.record(result, [ac, rc, wv]() mutable {
      if (!rc.has_grad()) return;
      const double g = rc.grad()[0];
      auto ga = ac.grad_mut();
      for (std::size_t i = 0; i < wv.size(); ++i) ga[i] += g * wv[i];
    });
  }
  return result;
}

namespace {

Tensor minmax_scalar(Tape& tape, const Tensor& a, const Tensor& b, bool take_min) {
  check_scalar(a, take_min ? "smin" : "smax");
  check_scalar(b, take_min ? "smin" : "smax");
  const double av = a.value(), bv = b.value();
  const bool pick_a = take_min ? (av <= bv) : (av >= bv);
  Tensor result = Tensor::scalar(pick_a ? av : bv);
  if (track(tape, {&a, &b})) {
    result.set_requires_grad(true);
    Tensor ac = a, bc = b, rc = result;
    tape.record(result, [ac, bc, rc, pick_a]() mutable {
      if (!rc.has_grad()) return;
      const double g = rc.grad()[0];
      Tensor& sel = pick_a ? ac : bc;
      if (sel.requires_grad()) sel.grad_mut()[0] += g;
    });
  }
  return result;
}

}  // namespace

Tensor smin(Tape& tape, const Tensor& a, const Tensor& b) {
  return minmax_scalar(tape, a, b, true);
}

Tensor smax(Tape& tape, const Tensor& a, const Tensor& b) {
  return minmax_scalar(tape, a, b, false);
}

Tensor div_s(Tape& tape, const Tensor& a, const Tensor& b) {
  check_scalar(a, "div");
  check_scalar(b, "div");
  const double bv = b.value();
  if (bv == 0.0) throw std::invalid_argument("div: division by zero");
  Tensor result = Tensor::scalar(a.value() / bv);
  check_finite(result.data(), "div");
  if (track(tape, {&a, &b})) {
    result.set_requires_grad(true);
    Tensor ac = a, bc = b, rc = result;
    tape.record(result, [ac, bc, rc]() mutable {
      if (!rc.has_grad()) return;
      const double g = rc.grad()[0];
      const double av = ac.value(), bv2 = bc.value();
      if (ac.requires_grad()) ac.grad_mut()[0] += g / bv2;
      if (bc.requires_grad()) bc.grad_mut()[0] += -g * av / (bv2 * bv2);
    });
  }
  return result;
}

std::vector<double> softmax_values(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  if (!(temperature > 0.0))
    throw std::invalid_argument("softmax: temperature must be positive");
  double m = logits[0];
  for (double x : logits) m = std::max(m, x);
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - m) / temperature);
    z += out[i];
  }
  for (double& x : out) x /= z;
  return out;
}

Tensor softmax_temp(Tape& tape, const Tensor& logits, double temperature) {
  std::vector<double> y = softmax_values(logits.data(), temperature);
  Tensor result = Tensor::from_values(logits.shape(), std::move(y));
  check_finite(result.data(), "softmax");
  if (track(tape, {&logits})) {
    result.set_requires_grad(true);
    Tensor lc = logits, rc = result;
    tape.record(result, [lc, rc, temperature]() mutable {
      if (!rc.has_grad()) return;
      auto g = rc.grad();
      auto y2 = rc.data();
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y2[i];
      auto gl = lc.grad_mut();
      for (std::size_t i = 0; i < g.size(); ++i)
        gl[i] += y2[i] * (g[i] - dot) / temperature;
    });
  }
  return result;
}

Tensor log_sum_exp(Tape& tape, const Tensor& logits) {
  if (logits.size() == 0) throw std::invalid_argument("log_sum_exp: empty logits");
  auto lv = logits.data();
  double m = lv[0];
  for (double x : lv) m = std::max(m, x);
  double z = 0.0;
  for (double x : lv) z += std::exp(x - m);
  Tensor result = Tensor::scalar(m + std::log(z));
  check_finite(result.data(), "log_sum_exp");
  if (track(tape, {&logits})) {
    result.set_requires_grad(true);
    Tensor lc = logits, rc = result;
    tape.record(result, [lc, rc]() mutable {
      if (!rc.has_grad()) return;
      const double g = rc.grad()[0];
      std::vector<double> p = softmax_values(lc.data(), 1.0);
      auto gl = lc.grad_mut();
      for (std::size_t i = 0; i < p.size(); ++i) gl[i] += g * p[i];
    });
  }
  return result;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: length mismatch");
  if (p.empty()) throw std::invalid_argument("kl_divergence: empty input");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0) throw std::invalid_argument("kl_divergence: negative entry in p");
    sp += p[i];
    sq += q[i];
  }
  if (std::fabs(sp - 1.0) > 1e-6 || std::fabs(sq - 1.0) > 1e-6)
    throw std::invalid_argument("kl_divergence: inputs must sum to 1");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;  // 0 * ln(0/q) = 0
    if (q[i] <= 0.0)
      throw std::invalid_argument("kl_divergence: q must be positive where p > 0");
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

double kl_divergence(const Tensor& p, const Tensor& q) {
  return kl_divergence(p.data(), q.data());
}

double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                         const Tensor& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_check: h must be positive");
  Tensor probe = x.clone(/*requires_grad=*/true);
  Tape tape;
  Tensor y = f(tape, probe);
  if (y.size() != 1) throw std::invalid_argument("finite_diff_check: f must be scalar");
  check_finite(y.data(), "finite_diff_check");
  tape.backward(y);
  std::vector<double> analytic(x.size(), 0.0);
  if (probe.has_grad()) {
    auto g = probe.grad();
    analytic.assign(g.begin(), g.end());
  }

  auto eval = [&](const Tensor& at) {
    Tape silent(false);
    double v = f(silent, at).value();
    if (!std::isfinite(v))
      throw std::runtime_error("finite_diff_check: f returned non-finite value");
    return v;
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor hi = x.clone();
    Tensor lo = x.clone();
    hi.at(i) += h;
    lo.at(i) -= h;
    const double central = (eval(hi) - eval(lo)) / (2.0 * h);
    const double err = std::fabs(analytic[i] - central) / (std::fabs(central) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace cldistill
