// SPDX-License-Identifier: Apache-2.0
#include "deepmood/gru.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepmood/errors.hpp"
#include "deepmood/ops.hpp"

namespace deepmood {

namespace {

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string("gru: ") + name + " is " + m.shape_string() + ", expected (" +
                     std::to_string(rows) + "x" + std::to_string(cols) + ")");
  }
}

bool row_active(std::span<const unsigned char> active, std::size_t row) {
  return active.empty() || active[row] != 0;
}

// w(j,:) . x + u(j,:) . h
double affine(const Matrix& w, const Matrix& u, std::size_t j, std::span<const double> x,
              std::span<const double> h) {
  const auto wr = w.row(j);
  const auto ur = u.row(j);
  double acc = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) acc += wr[p] * x[p];
  for (std::size_t p = 0; p < h.size(); ++p) acc += ur[p] * h[p];
  return acc;
}

// grad(j,:) += g * v
void outer_accumulate(Matrix& grad, std::size_t j, double g, std::span<const double> v) {
  auto row = grad.row(j);
  for (std::size_t p = 0; p < v.size(); ++p) row[p] += g * v[p];
}

}  // namespace

GruParams GruParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  GruParams p;
  p.w_r = p.w_z = p.w_h = Matrix(hidden_dim, input_dim);
  p.u_r = p.u_z = p.u_h = Matrix(hidden_dim, hidden_dim);
  return p;
}

GruParams GruParams::uniform(std::size_t input_dim, std::size_t hidden_dim, double bound,
                             Rng& rng) {
  GruParams p = zeros(input_dim, hidden_dim);
  for (Matrix* m : {&p.w_r, &p.w_z, &p.w_h, &p.u_r, &p.u_z, &p.u_h}) {
    for (double& v : m->data()) v = rng.uniform(-bound, bound);
  }
  return p;
}

void GruParams::validate() const {
  const std::size_t dh = hidden_dim();
  const std::size_t dx = input_dim();
  expect_shape(w_z, dh, dx, "W_z");
  expect_shape(w_h, dh, dx, "W");
  expect_shape(u_r, dh, dh, "U_r");
  expect_shape(u_z, dh, dh, "U_z");
  expect_shape(u_h, dh, dh, "U");
}

GruStep gru_cell_forward(const GruParams& params, const Matrix& x, const Matrix& h_prev,
                         std::span<const unsigned char> active) {
  params.validate();
  const std::size_t batch = x.rows();
  const std::size_t dh = params.hidden_dim();
  expect_shape(x, batch, params.input_dim(), "x");
  expect_shape(h_prev, batch, dh, "h_prev");
  if (!active.empty() && active.size() != batch) {
    throw ShapeError("gru: mask has " + std::to_string(active.size()) + " rows, batch has " +
                     std::to_string(batch));
  }

  GruStep step;
  step.h = h_prev;
  auto& c = step.cache;
  c.x = Matrix(batch, params.input_dim());
  c.h_prev = h_prev;
  c.reset = Matrix(batch, dh);
  c.update = Matrix(batch, dh);
  c.candidate = Matrix(batch, dh);
  c.active.assign(active.begin(), active.end());

  std::vector<double> gated(dh);
  for (std::size_t i = 0; i < batch; ++i) {
    if (!row_active(active, i)) continue;
    const auto xi = x.row(i);
    std::copy(xi.begin(), xi.end(), c.x.row(i).begin());
    const auto hp = h_prev.row(i);
    for (std::size_t j = 0; j < dh; ++j) {
      c.reset(i, j) = sigmoid(affine(params.w_r, params.u_r, j, xi, hp));
      c.update(i, j) = sigmoid(affine(params.w_z, params.u_z, j, xi, hp));
      gated[j] = c.reset(i, j) * hp[j];
    }
    for (std::size_t j = 0; j < dh; ++j) {
      c.candidate(i, j) = std::tanh(affine(params.w_h, params.u_h, j, xi, gated));
    }
    for (std::size_t j = 0; j < dh; ++j) {
      const double z = c.update(i, j);
      step.h(i, j) = z * hp[j] + (1.0 - z) * c.candidate(i, j);
    }
  }
  return step;
}

void gru_cell_backward_into(const GruParams& params, const GruStepCache& cache,
                            const Matrix& grad_h, GruParams& grad_params, Matrix* grad_x,
                            Matrix& grad_h_prev) {
  const std::size_t batch = cache.h_prev.rows();
  const std::size_t dh = params.hidden_dim();
  const std::size_t dx = params.input_dim();
  if (cache.x.cols() != dx || cache.h_prev.cols() != dh || cache.reset.rows() != batch) {
    throw ShapeError("gru_cell_backward: cache " + cache.x.shape_string() + "/" +
                     cache.h_prev.shape_string() + " does not match params (d_x=" +
                     std::to_string(dx) + ", d_h=" + std::to_string(dh) + ")");
  }
  expect_shape(grad_h, batch, dh, "grad_h");
  expect_shape(grad_params.w_r, dh, dx, "grad W_r");
  if (grad_x != nullptr && (grad_x->rows() != batch || grad_x->cols() != dx)) {
    *grad_x = Matrix(batch, dx);
  }
  if (grad_h_prev.rows() != batch || grad_h_prev.cols() != dh) grad_h_prev = Matrix(batch, dh);

  std::vector<double> gated(dh), d_cand(dh), d_upd(dh), d_rst(dh), d_gated(dh);
  for (std::size_t i = 0; i < batch; ++i) {
    auto ghp = grad_h_prev.row(i);
    const auto gh = grad_h.row(i);
    if (!row_active(cache.active, i)) {
      // carried row: h = h_prev
      std::copy(gh.begin(), gh.end(), ghp.begin());
      if (grad_x != nullptr) {
        auto gx = grad_x->row(i);
        std::fill(gx.begin(), gx.end(), 0.0);
      }
      continue;
    }
    const auto xi = cache.x.row(i);
    const auto hp = cache.h_prev.row(i);
    for (std::size_t j = 0; j < dh; ++j) {
      const double r = cache.reset(i, j);
      const double z = cache.update(i, j);
      const double cand = cache.candidate(i, j);
      gated[j] = r * hp[j];
      ghp[j] = gh[j] * z;
      d_cand[j] = gh[j] * (1.0 - z) * (1.0 - cand * cand);
      d_upd[j] = gh[j] * (hp[j] - cand) * z * (1.0 - z);
    }
    // candidate = tanh(W x + U (r . h_prev))
    std::fill(d_gated.begin(), d_gated.end(), 0.0);
    for (std::size_t j = 0; j < dh; ++j) {
      outer_accumulate(grad_params.w_h, j, d_cand[j], xi);
      outer_accumulate(grad_params.u_h, j, d_cand[j], gated);
      const auto uh = params.u_h.row(j);
      for (std::size_t p = 0; p < dh; ++p) d_gated[p] += d_cand[j] * uh[p];
    }
    for (std::size_t p = 0; p < dh; ++p) {
      const double r = cache.reset(i, p);
      d_rst[p] = d_gated[p] * hp[p] * r * (1.0 - r);
      ghp[p] += d_gated[p] * r;
    }
    for (std::size_t j = 0; j < dh; ++j) {
      outer_accumulate(grad_params.w_z, j, d_upd[j], xi);
      outer_accumulate(grad_params.u_z, j, d_upd[j], hp);
      outer_accumulate(grad_params.w_r, j, d_rst[j], xi);
      outer_accumulate(grad_params.u_r, j, d_rst[j], hp);
      const auto uz = params.u_z.row(j);
      const auto ur = params.u_r.row(j);
      for (std::size_t p = 0; p < dh; ++p) ghp[p] += d_upd[j] * uz[p] + d_rst[j] * ur[p];
    }
    if (grad_x != nullptr) {
      auto gx = grad_x->row(i);
      for (std::size_t p = 0; p < dx; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dh; ++j) {
          acc += d_cand[j] * params.w_h(j, p) + d_upd[j] * params.w_z(j, p) +
                 d_rst[j] * params.w_r(j, p);
        }
        gx[p] = acc;
      }
    }
  }
}

GruCellGrads gru_cell_backward(const GruParams& params, const GruStepCache& cache,
                               const Matrix& grad_h) {
  GruCellGrads grads;
  grads.params = GruParams::zeros(params.input_dim(), params.hidden_dim());
  grads.x = Matrix(cache.x.rows(), params.input_dim());
  grads.h_prev = Matrix(cache.h_prev.rows(), params.hidden_dim());
  gru_cell_backward_into(params, cache, grad_h, grads.params, &grads.x, grads.h_prev);
  return grads;
}

namespace {

// out[a] = w(j,:) . x(:,a) + u(j,:) . h(:,a), summed in the same order as affine()
void packed_affine(const Matrix& w, const Matrix& u, std::size_t j, const Matrix& x,
                   const Matrix& h, double* out) {
  const std::size_t m = x.cols();
  std::fill(out, out + m, 0.0);
  for (std::size_t p = 0; p < x.rows(); ++p) {
    const double wv = w(j, p);
    const double* xp = x.row(p).data();
    for (std::size_t a = 0; a < m; ++a) out[a] += wv * xp[a];
  }
  for (std::size_t q = 0; q < h.rows(); ++q) {
    const double uv = u(j, q);
    const double* hq = h.row(q).data();
    for (std::size_t a = 0; a < m; ++a) out[a] += uv * hq[a];
  }
}

// g(j,p) += sum_a d(j,a) v(p,a), rows taken in order. Four columns of g are
// accumulated side by side to break the add dependency chain; each one still
// sums in row order.
void packed_outer(Matrix& g, const Matrix& d, const Matrix& v) {
  const std::size_t m = d.cols();
  const std::size_t cols = g.cols();
  for (std::size_t j = 0; j < g.rows(); ++j) {
    const double* dj = d.row(j).data();
    std::size_t p = 0;
    for (; p + 4 <= cols; p += 4) {
      const double* v0 = v.row(p).data();
      const double* v1 = v.row(p + 1).data();
      const double* v2 = v.row(p + 2).data();
      const double* v3 = v.row(p + 3).data();
      double a0 = g(j, p), a1 = g(j, p + 1), a2 = g(j, p + 2), a3 = g(j, p + 3);
      for (std::size_t a = 0; a < m; ++a) {
        const double dv = dj[a];
        a0 += dv * v0[a];
        a1 += dv * v1[a];
        a2 += dv * v2[a];
        a3 += dv * v3[a];
      }
      g(j, p) = a0;
      g(j, p + 1) = a1;
      g(j, p + 2) = a2;
      g(j, p + 3) = a3;
    }
    for (; p < cols; ++p) {
      const double* vp = v.row(p).data();
      double acc = g(j, p);
      for (std::size_t a = 0; a < m; ++a) acc += dj[a] * vp[a];
      g(j, p) = acc;
    }
  }
}

}  // namespace

GruPackedStep gru_packed_forward(const GruParams& params, const Matrix& x,
                                 std::vector<std::size_t> rows, Matrix& h) {
  params.validate();
  const std::size_t dh = params.hidden_dim();
  const std::size_t dx = params.input_dim();
  expect_shape(x, x.rows(), dx, "x");
  expect_shape(h, dh, x.rows(), "packed h");
  const std::size_t m = rows.size();
  GruPackedStep s;
  s.x = Matrix(dx, m);
  s.h_prev = Matrix(dh, m);
  s.reset = Matrix(dh, m);
  s.update = Matrix(dh, m);
  s.candidate = Matrix(dh, m);
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t i = rows[a];
    if (i >= x.rows() || (a > 0 && i <= rows[a - 1])) throw ShapeError("gru: packed rows must ascend within the batch");
    for (std::size_t p = 0; p < dx; ++p) s.x(p, a) = x(i, p);
    for (std::size_t q = 0; q < dh; ++q) s.h_prev(q, a) = h(q, i);
  }
  s.rows = std::move(rows);
  if (m == 0) return s;

  std::vector<double> acc(m);
  Matrix gated(dh, m);
  for (std::size_t j = 0; j < dh; ++j) {
    packed_affine(params.w_r, params.u_r, j, s.x, s.h_prev, acc.data());
    for (std::size_t a = 0; a < m; ++a) s.reset(j, a) = sigmoid(acc[a]);
    packed_affine(params.w_z, params.u_z, j, s.x, s.h_prev, acc.data());
    for (std::size_t a = 0; a < m; ++a) s.update(j, a) = sigmoid(acc[a]);
    for (std::size_t a = 0; a < m; ++a) gated(j, a) = s.reset(j, a) * s.h_prev(j, a);
  }
  for (std::size_t j = 0; j < dh; ++j) {
    packed_affine(params.w_h, params.u_h, j, s.x, gated, acc.data());
    for (std::size_t a = 0; a < m; ++a) s.candidate(j, a) = std::tanh(acc[a]);
  }
  for (std::size_t j = 0; j < dh; ++j) {
    for (std::size_t a = 0; a < m; ++a) {
      const double z = s.update(j, a);
      h(j, s.rows[a]) = z * s.h_prev(j, a) + (1.0 - z) * s.candidate(j, a);
    }
  }
  return s;
}

void gru_packed_backward(const GruParams& params, const GruPackedStep& s, Matrix& grad,
                         GruParams& grad_params) {
  const std::size_t dh = params.hidden_dim();
  const std::size_t m = s.rows.size();
  expect_shape(grad, dh, grad.cols(), "packed grad");
  expect_shape(grad_params.w_r, dh, params.input_dim(), "grad W_r");
  if (s.x.rows() != params.input_dim() || s.h_prev.rows() != dh || s.x.cols() != m) {
    throw ShapeError("gru_packed_backward: step " + s.x.shape_string() + "/" + s.h_prev.shape_string() +
                     " does not match params");
  }
  if (m == 0) return;

  Matrix gated(dh, m), d_cand(dh, m), d_upd(dh, m), d_rst(dh, m), d_gated(dh, m), ghp(dh, m);
  for (std::size_t j = 0; j < dh; ++j) {
    for (std::size_t a = 0; a < m; ++a) {
      const double gh = grad(j, s.rows[a]);
      const double r = s.reset(j, a);
      const double z = s.update(j, a);
      const double cand = s.candidate(j, a);
      const double hp = s.h_prev(j, a);
      gated(j, a) = r * hp;
      ghp(j, a) = gh * z;
      d_cand(j, a) = gh * (1.0 - z) * (1.0 - cand * cand);
      d_upd(j, a) = gh * (hp - cand) * z * (1.0 - z);
    }
  }
  for (std::size_t j = 0; j < dh; ++j) {
    const double* dc = d_cand.row(j).data();
    for (std::size_t p = 0; p < dh; ++p) {
      const double uv = params.u_h(j, p);
      double* dg = d_gated.row(p).data();
      for (std::size_t a = 0; a < m; ++a) dg[a] += dc[a] * uv;
    }
  }
  for (std::size_t p = 0; p < dh; ++p) {
    for (std::size_t a = 0; a < m; ++a) {
      const double r = s.reset(p, a);
      d_rst(p, a) = d_gated(p, a) * s.h_prev(p, a) * r * (1.0 - r);
      ghp(p, a) += d_gated(p, a) * r;
    }
  }
  for (std::size_t j = 0; j < dh; ++j) {
    const double* du = d_upd.row(j).data();
    const double* dr = d_rst.row(j).data();
    for (std::size_t p = 0; p < dh; ++p) {
      const double uz = params.u_z(j, p);
      const double ur = params.u_r(j, p);
      double* g = ghp.row(p).data();
      for (std::size_t a = 0; a < m; ++a) g[a] += du[a] * uz + dr[a] * ur;
    }
  }
  packed_outer(grad_params.w_h, d_cand, s.x);
  packed_outer(grad_params.u_h, d_cand, gated);
  packed_outer(grad_params.w_z, d_upd, s.x);
  packed_outer(grad_params.u_z, d_upd, s.h_prev);
  packed_outer(grad_params.w_r, d_rst, s.x);
  packed_outer(grad_params.u_r, d_rst, s.h_prev);
  for (std::size_t j = 0; j < dh; ++j)
    for (std::size_t a = 0; a < m; ++a) grad(j, s.rows[a]) = ghp(j, a);
}

Matrix simple_rnn_cell(const Matrix& w, const Matrix& u, const Matrix& x, const Matrix& h_prev) {
  if (w.rows() != u.rows() || u.rows() != u.cols()) {
    throw ShapeError("simple_rnn_cell: W " + w.shape_string() + " and U " + u.shape_string());
  }
  Matrix pre = add(matmul_nt(x, w), matmul_nt(h_prev, u));
  return tanh(pre);
}

}  // namespace deepmood
