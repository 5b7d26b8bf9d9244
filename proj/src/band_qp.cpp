/**
 * Copyright 2026 The qdt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "qdt/band_qp.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "qdt/errors.hpp"

namespace qdt::recon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd gradient(const BandProblem& p, const Eigen::MatrixXd& x) {
  return 2.0 * (p.hessian * x - p.linear);
}

void check_shapes(const BandProblem& p) {
  const Eigen::Index m = p.rows();
  if (p.hessian.cols() != m || p.linear.rows() != m)
    throw InputError("band QP: Hessian and linear term disagree in size");
  if (p.kind == BandProblem::Kind::kBox) {
    if (p.lower.rows() != m || p.lower.cols() != p.columns() || p.upper.rows() != m ||
        p.upper.cols() != p.columns() || p.row_sum.size() != m)
      throw InputError("band QP: bound shapes do not match");
  } else {
    if (p.radius.rows() != m || 2 * p.radius.cols() != p.columns())
      throw InputError("band QP: radius shape does not match");
  }
}

}  // namespace

Eigen::VectorXd project_box_sum(const Eigen::VectorXd& v, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, double s) {
  const Eigen::Index n = v.size();
  double lo_sum = 0.0;
  double hi_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    lo_sum += lo(i);
    hi_sum += hi(i);
  }
  const double slack = 1e-12 * (1.0 + std::abs(s));
  if (lo_sum > s + slack || hi_sum < s - slack)
    throw InputError("project_box_sum: empty feasible set");

  auto total = [&](double lambda) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) acc += std::clamp(v(i) - lambda, lo(i), hi(i));
    return acc;
  };
  std::vector<double> breaks;
  breaks.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(hi(i))) breaks.push_back(v(i) - hi(i));
    breaks.push_back(v(i) - lo(i));
  }
  std::sort(breaks.begin(), breaks.end());

  double lambda = 0.0;
  const double first = total(breaks.front());
  if (s >= first) {
    // Left of every breakpoint: finite-hi entries sit at hi, the rest are free.
    double fixed = 0.0;
    double free_v = 0.0;
    Eigen::Index free_count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isfinite(hi(i))) {
        fixed += hi(i);
      } else {
        free_v += v(i);
        ++free_count;
      }
    }
    lambda = free_count > 0 ? (free_v + fixed - s) / static_cast<double>(free_count)
                            : breaks.front();
  } else {
    lambda = breaks.back();
    double prev = first;
    for (std::size_t k = 1; k < breaks.size(); ++k) {
      const double cur = total(breaks[k]);
      if (cur <= s) {
        const double span = prev - cur;
        const double t = span > 0.0 ? (prev - s) / span : 0.0;
        lambda = breaks[k - 1] + t * (breaks[k] - breaks[k - 1]);
        break;
      }
      prev = cur;
    }
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = std::clamp(v(i) - lambda, lo(i), hi(i));
  // Put the rounding residual of the sum on the entry with the most room.
  const double err = x.sum() - s;
  if (err != 0.0) {
    Eigen::Index best = -1;
    double room = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = err > 0.0 ? x(i) - lo(i) : hi(i) - x(i);
      if (r > room) {
        room = r;
        best = i;
      }
    }
    if (best >= 0) x(best) -= std::clamp(err, -room, room);
  }
  return x;
}

Eigen::VectorXd project_disk_sum(const Eigen::VectorXd& v, const Eigen::VectorXd& r) {
  const Eigen::Index n = r.size();
  if (v.size() != 2 * n) throw InputError("project_disk_sum: size mismatch");
  using Vec2 = Eigen::Vector2d;
  auto point = [&](Eigen::Index i, const Vec2& lambda) {
    return Vec2(v(i) - lambda(0), v(n + i) - lambda(1));
  };
  auto proj = [&](Eigen::Index i, const Vec2& w) -> Vec2 {
    const double norm = w.norm();
    if (norm <= r(i)) return w;
    if (r(i) <= 0.0) return Vec2::Zero();
    return w * (r(i) / norm);
  };
  auto residual = [&](const Vec2& lambda) {
    Vec2 g = Vec2::Zero();
    for (Eigen::Index i = 0; i < n; ++i) g += proj(i, point(i, lambda));
    return g;
  };
  double scale = 1.0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) scale += std::abs(v(i));
  Vec2 lambda(0.0, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) lambda += Vec2(v(i), v(n + i));
  lambda /= static_cast<double>(n);
  // g(lambda) = sum_n P_n(v_n - lambda) is minus the gradient of the convex
  // potential psi below, which serves as the line-search merit function.
  auto psi = [&](const Vec2& lambda) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec2 w = point(i, lambda);
      const double out = std::max(0.0, w.norm() - std::max(r(i), 0.0));
      total += 0.5 * (w.squaredNorm() - out * out);
    }
    return total;
  };
  Vec2 g = residual(lambda);
  double value = psi(lambda);
  for (int it = 0; it < 500 && g.norm() > 1e-15 * scale; ++it) {
    Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec2 w = point(i, lambda);
      const double norm = w.norm();
      if (norm <= r(i)) {
        jac += Eigen::Matrix2d::Identity();
      } else if (r(i) > 0.0) {
        const Vec2 u = w / norm;
        jac += (r(i) / norm) * (Eigen::Matrix2d::Identity() - u * u.transpose());
      }
    }
    // Newton first; the gradient step 1/n always decreases psi since g is
    // n-Lipschitz.
    const Vec2 gradient_step = g / static_cast<double>(n);
    Vec2 step = gradient_step;
    if (std::abs(jac.determinant()) > 1e-14 * jac.squaredNorm()) step = jac.inverse() * g;
    bool moved = false;
    for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
      double t = 1.0;
      for (int half = 0; half < 40; ++half, t *= 0.5) {
        const Vec2 trial = lambda + t * step;
        const double vt = psi(trial);
        const Vec2 gt = residual(trial);
        // Close to the root the decrease of psi drowns in roundoff; a
        // halved residual is accepted instead.
        if (vt <= value - 1e-4 * t * g.dot(step) || gt.norm() < 0.5 * g.norm()) {
          lambda = trial;
          value = vt;
          g = gt;
          moved = true;
          break;
        }
      }
      step = gradient_step;
    }
    if (!moved) break;
  }
  Eigen::VectorXd out(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 y = proj(i, point(i, lambda));
    out(i) = y(0);
    out(n + i) = y(1);
  }
  // Remove the leftover sum from entries strictly inside their disks.
  const Vec2 left = residual(lambda);
  std::vector<Eigen::Index> inner;
  for (Eigen::Index i = 0; i < n; ++i)
    if (point(i, lambda).norm() < r(i)) inner.push_back(i);
  for (Eigen::Index i : inner) {
    out(i) -= left(0) / static_cast<double>(inner.size());
    out(n + i) -= left(1) / static_cast<double>(inner.size());
  }
  return out;
}

double objective(const BandProblem& p, const Eigen::MatrixXd& x) {
  return (x.cwiseProduct(p.hessian * x)).sum() - 2.0 * (p.linear.cwiseProduct(x)).sum() +
         p.constant;
}

Eigen::MatrixXd project_rows(const BandProblem& p, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  if (p.kind == BandProblem::Kind::kBox) {
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      out.row(j) = project_box_sum(x.row(j).transpose(), p.lower.row(j).transpose(),
                                   p.upper.row(j).transpose(), p.row_sum(j))
                       .transpose();
  } else {
    for (Eigen::Index j = 0; j < x.rows(); ++j)
      out.row(j) =
          project_disk_sum(x.row(j).transpose(), p.radius.row(j).transpose()).transpose();
  }
  return out;
}

double kkt_residual(const BandProblem& p, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd y = project_rows(p, x - gradient(p, x));
  return (x - y).cwiseAbs().maxCoeff();
}

namespace {

// Active-set equality solve started from the ADMM iterate. Returns false
// when the active set does not settle or a factorization fails.
bool polish_box(const BandProblem& p, const Eigen::MatrixXd& start, Eigen::MatrixXd& out) {
  const Eigen::Index m = p.rows();
  const Eigen::Index c = p.columns();
  enum State : char { kFree, kLower, kUpper };
  std::vector<State> state(static_cast<std::size_t>(m * c), kFree);
  auto st = [&](Eigen::Index j, Eigen::Index col) -> State& {
    return state[static_cast<std::size_t>(col * m + j)];
  };
  for (Eigen::Index col = 0; col < c; ++col) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double lo = p.lower(j, col);
      const double hi = p.upper(j, col);
      const double width = std::isfinite(hi) ? hi - lo : 1.0;
      const double tol = 1e-9 * std::max(1.0, width);
      if (hi - lo <= 0.0 || start(j, col) - lo <= tol)
        st(j, col) = kLower;
      else if (std::isfinite(hi) && hi - start(j, col) <= tol)
        st(j, col) = kUpper;
    }
  }

  Eigen::MatrixXd x = start;
  for (int iter = 0; iter < 30; ++iter) {
    // Fixed entries at their bounds, free entries zero for now.
    for (Eigen::Index col = 0; col < c; ++col)
      for (Eigen::Index j = 0; j < m; ++j)
        x(j, col) = st(j, col) == kLower ? p.lower(j, col)
                    : st(j, col) == kUpper ? p.upper(j, col)
                                           : 0.0;
    const Eigen::MatrixXd base = p.linear - p.hessian * x;  // g - H x_fixed
    std::vector<std::vector<Eigen::Index>> free_idx(static_cast<std::size_t>(c));
    std::vector<Eigen::LLT<Eigen::MatrixXd>> fact(static_cast<std::size_t>(c));
    std::vector<Eigen::MatrixXd> inv(static_cast<std::size_t>(c));
    std::vector<bool> row_has_free(static_cast<std::size_t>(m), false);
    // Singular free blocks get a small ridge; the proximal loop below then
    // removes its bias.
    double ridge = 0.0;
    for (int attempt = 0; attempt < 2; ++attempt) {
      bool ok = true;
      for (Eigen::Index col = 0; col < c && ok; ++col) {
        auto& f = free_idx[static_cast<std::size_t>(col)];
        f.clear();
        for (Eigen::Index j = 0; j < m; ++j)
          if (st(j, col) == kFree) f.push_back(j);
        const auto nf = static_cast<Eigen::Index>(f.size());
        if (nf == 0) continue;
        Eigen::MatrixXd hff(nf, nf);
        for (Eigen::Index a = 0; a < nf; ++a)
          for (Eigen::Index b = 0; b < nf; ++b)
            hff(a, b) = 2.0 * p.hessian(f[static_cast<std::size_t>(a)], f[static_cast<std::size_t>(b)]);
        hff.diagonal().array() += ridge;
        auto& llt = fact[static_cast<std::size_t>(col)];
        llt.compute(hff);
        // Ridge whenever the pivots indicate a condition number above 1e8.
        const double min_pivot =
            llt.info() == Eigen::Success ? llt.matrixLLT().diagonal().minCoeff() : 0.0;
        ok = min_pivot * min_pivot > 1e-8 * hff.diagonal().maxCoeff();
        if (ok) inv[static_cast<std::size_t>(col)] = llt.solve(Eigen::MatrixXd::Identity(nf, nf));
      }
      if (ok) break;
      if (attempt == 1) return false;
      ridge = 1e-8 * std::max(1e-300, 2.0 * p.hessian.diagonal().maxCoeff());
    }
    Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index col = 0; col < c; ++col) {
      const auto& f = free_idx[static_cast<std::size_t>(col)];
      const auto nf = static_cast<Eigen::Index>(f.size());
      for (Eigen::Index a = 0; a < nf; ++a) {
        row_has_free[static_cast<std::size_t>(f[static_cast<std::size_t>(a)])] = true;
        for (Eigen::Index b = 0; b < nf; ++b)
          schur(f[static_cast<std::size_t>(a)], f[static_cast<std::size_t>(b)]) +=
              inv[static_cast<std::size_t>(col)](a, b);
      }
    }
    std::vector<Eigen::Index> active_rows;
    for (Eigen::Index j = 0; j < m; ++j)
      if (row_has_free[static_cast<std::size_t>(j)]) active_rows.push_back(j);
    const auto na = static_cast<Eigen::Index>(active_rows.size());
    Eigen::LDLT<Eigen::MatrixXd> schur_ldlt;
    if (na > 0) {
      Eigen::MatrixXd s_sub(na, na);
      for (Eigen::Index a = 0; a < na; ++a)
        for (Eigen::Index b = 0; b < na; ++b)
          s_sub(a, b) = schur(active_rows[static_cast<std::size_t>(a)],
                              active_rows[static_cast<std::size_t>(b)]);
      schur_ldlt.compute(s_sub);
      if (schur_ldlt.info() != Eigen::Success) return false;
    }
    // Solves 2 H_ff dx + E^T dl = r1 on the free entries, E dx = r2 on the
    // rows, with the (possibly ridged) factorizations above.
    auto kkt_solve = [&](const Eigen::MatrixXd& r1, const Eigen::VectorXd& r2,
                         Eigen::MatrixXd& dx, Eigen::VectorXd& dl) {
      std::vector<Eigen::VectorXd> part(static_cast<std::size_t>(c));
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
      for (Eigen::Index col = 0; col < c; ++col) {
        const auto& f = free_idx[static_cast<std::size_t>(col)];
        const auto nf = static_cast<Eigen::Index>(f.size());
        if (nf == 0) continue;
        Eigen::VectorXd bf(nf);
        for (Eigen::Index a = 0; a < nf; ++a) bf(a) = r1(f[static_cast<std::size_t>(a)], col);
        part[static_cast<std::size_t>(col)] = fact[static_cast<std::size_t>(col)].solve(bf);
        for (Eigen::Index a = 0; a < nf; ++a)
          rhs(f[static_cast<std::size_t>(a)]) += part[static_cast<std::size_t>(col)](a);
      }
      rhs -= r2;
      dl.setZero(m);
      if (na > 0) {
        Eigen::VectorXd r_sub(na);
        for (Eigen::Index a = 0; a < na; ++a) r_sub(a) = rhs(active_rows[static_cast<std::size_t>(a)]);
        const Eigen::VectorXd l_sub = schur_ldlt.solve(r_sub);
        for (Eigen::Index a = 0; a < na; ++a) dl(active_rows[static_cast<std::size_t>(a)]) = l_sub(a);
      }
      dx.setZero(m, c);
      for (Eigen::Index col = 0; col < c; ++col) {
        const auto& f = free_idx[static_cast<std::size_t>(col)];
        const auto nf = static_cast<Eigen::Index>(f.size());
        if (nf == 0) continue;
        Eigen::VectorXd lf(nf);
        for (Eigen::Index a = 0; a < nf; ++a) lf(a) = dl(f[static_cast<std::size_t>(a)]);
        const Eigen::VectorXd xf =
            part[static_cast<std::size_t>(col)] - inv[static_cast<std::size_t>(col)] * lf;
        for (Eigen::Index a = 0; a < nf; ++a) dx(f[static_cast<std::size_t>(a)], col) = xf(a);
      }
    };
    // Iterative refinement on the true stationarity and row-sum residuals.
    // With a ridge this is a proximal-point iteration.
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    {
      Eigen::MatrixXd r1 = Eigen::MatrixXd::Zero(m, c);
      for (Eigen::Index col = 0; col < c; ++col)
        for (Eigen::Index j = 0; j < m; ++j)
          if (st(j, col) == kFree) {
            r1(j, col) = 2.0 * base(j, col);
            x(j, col) = 0.0;
          }
      Eigen::MatrixXd dx;
      Eigen::VectorXd dl;
      kkt_solve(r1, p.row_sum - x.rowwise().sum(), dx, dl);
      x += dx;
      lambda = dl;
      const int rounds = ridge > 0.0 ? 1000 : 6;
      for (int k = 0; k < rounds; ++k) {
        const Eigen::MatrixXd grad = gradient(p, x);
        r1.setZero();
        for (Eigen::Index col = 0; col < c; ++col)
          for (Eigen::Index j = 0; j < m; ++j)
            if (st(j, col) == kFree) r1(j, col) = -(grad(j, col) + lambda(j));
        kkt_solve(r1, p.row_sum - x.rowwise().sum(), dx, dl);
        x += dx;
        lambda += dl;
        if (dx.cwiseAbs().maxCoeff() < 1e-16 * (1.0 + x.cwiseAbs().maxCoeff())) break;
      }
    }

    const Eigen::MatrixXd grad = gradient(p, x);
    const double dual_tol = 1e-10 * (1.0 + grad.cwiseAbs().maxCoeff());
    // Rows without free entries: any multiplier in the interval allowed by
    // the sign conditions of their bound constraints.
    for (Eigen::Index j = 0; j < m; ++j) {
      if (row_has_free[static_cast<std::size_t>(j)]) continue;
      double lo_edge = -kInf;
      double hi_edge = kInf;
      for (Eigen::Index col = 0; col < c; ++col) {
        if (p.upper(j, col) - p.lower(j, col) <= 0.0) continue;
        if (st(j, col) == kLower) lo_edge = std::max(lo_edge, -grad(j, col));
        if (st(j, col) == kUpper) hi_edge = std::min(hi_edge, -grad(j, col));
      }
      lambda(j) = std::isfinite(lo_edge) ? lo_edge : (std::isfinite(hi_edge) ? hi_edge : 0.0);
      if (lo_edge > hi_edge) lambda(j) = 0.5 * (lo_edge + hi_edge);
    }

    bool changed = false;
    for (Eigen::Index col = 0; col < c; ++col) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double lo = p.lower(j, col);
        const double hi = p.upper(j, col);
        if (hi - lo <= 0.0) continue;
        const double primal_tol =
            1e-13 * std::max(1.0, std::abs(lo) + (std::isfinite(hi) ? std::abs(hi) : 0.0));
        const double mult = grad(j, col) + lambda(j);
        State& s = st(j, col);
        if (s == kFree) {
          if (x(j, col) < lo - primal_tol) {
            s = kLower;
            changed = true;
          } else if (x(j, col) > hi + primal_tol) {
            s = kUpper;
            changed = true;
          }
        } else if (s == kLower && mult < -dual_tol) {
          s = kFree;
          changed = true;
        } else if (s == kUpper && mult > dual_tol) {
          s = kFree;
          changed = true;
        }
      }
    }
    if (!changed) {
      out = x;
      return true;
    }
  }
  return false;
}

}  // namespace

QPResult solve_band_qp(const BandProblem& p, const QPSettings& settings,
                       const Eigen::MatrixXd* warm_start) {
  check_shapes(p);
  const Eigen::Index m = p.rows();
  const Eigen::Index c = p.columns();
  QPResult result;

  Eigen::MatrixXd z = project_rows(p, warm_start ? *warm_start : Eigen::MatrixXd::Zero(m, c));
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(m, c);
  const double h_scale = std::max(1e-12, 2.0 * p.hessian.diagonal().cwiseAbs().maxCoeff());
  double rho = 0.1 * h_scale;
  constexpr double kRelax = 1.6;
  auto factor = [&](double r) {
    Eigen::MatrixXd k = 2.0 * p.hessian;
    k.diagonal().array() += r;
    return Eigen::LLT<Eigen::MatrixXd>(k);
  };
  Eigen::LLT<Eigen::MatrixXd> llt = factor(rho);
  const Eigen::MatrixXd two_g = 2.0 * p.linear;

  const bool can_polish = settings.polish && p.kind == BandProblem::Kind::kBox;
  // Accepts the polished point when it is feasible, no worse, and stationary.
  auto try_polish = [&](const Eigen::MatrixXd& from, double from_obj, double from_kkt) -> bool {
    Eigen::MatrixXd polished;
    if (!polish_box(p, from, polished)) return false;
    polished = project_rows(p, polished);
    const double obj = objective(p, polished);
    const double res = kkt_residual(p, polished);
    if (obj > from_obj + 1e-12 * (1.0 + std::abs(from_obj)) ||
        res > std::max(from_kkt, settings.tolerance))
      return false;
    result.x = polished;
    result.objective = obj;
    result.kkt_residual = res;
    result.polished = true;
    return true;
  };

  double kkt = kkt_residual(p, z);
  std::size_t it = 0;
  std::size_t next_polish = 100;
  while (kkt > settings.tolerance && it < settings.max_iterations) {
    ++it;
    const Eigen::MatrixXd x = llt.solve(two_g + rho * (z - u));
    const Eigen::MatrixXd xr = kRelax * x + (1.0 - kRelax) * z;
    const Eigen::MatrixXd z_prev = z;
    z = project_rows(p, xr + u);
    u += xr - z;
    if (it % 10 == 0) kkt = kkt_residual(p, z);
    if (it % 50 == 0) {
      const double prim = (x - z).cwiseAbs().maxCoeff() /
                          std::max({1e-300, x.cwiseAbs().maxCoeff(), z.cwiseAbs().maxCoeff()});
      const double dual_scale = std::max(
          {1e-300, (2.0 * p.hessian * x).cwiseAbs().maxCoeff(), two_g.cwiseAbs().maxCoeff(),
           rho * u.cwiseAbs().maxCoeff()});
      const double dual = rho * (z - z_prev).cwiseAbs().maxCoeff() / dual_scale;
      if (prim > 0.0 && dual > 0.0) {
        const double ratio = std::sqrt(prim / dual);
        if (ratio > 5.0 || ratio < 0.2) {
          const double next = std::clamp(rho * ratio, 1e-8 * h_scale, 1e6 * h_scale);
          u *= rho / next;
          rho = next;
          llt = factor(rho);
        }
      }
    }
    if (can_polish && it == next_polish && kkt > settings.tolerance) {
      next_polish *= 2;
      if (try_polish(z, objective(p, z), kkt_residual(p, z)) &&
          result.kkt_residual <= settings.tolerance) {
        result.iterations = it;
        return result;
      }
    }
  }
  result.x = z;
  result.iterations = it;
  result.kkt_residual = kkt_residual(p, z);
  result.objective = objective(p, z);
  result.polished = false;
  if (can_polish) try_polish(z, result.objective, result.kkt_residual);
  if (result.kkt_residual > settings.tolerance)
    throw SolverError("band QP did not converge: KKT residual " +
                          std::to_string(result.kkt_residual) + " after " +
                          std::to_string(it) + " iterations",
                      result.kkt_residual);
  return result;
}

}  // namespace qdt::recon
