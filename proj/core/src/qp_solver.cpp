#include "cprl/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SparseCore>

#include "cprl/error.hpp"

namespace cprl {

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Entry {
  Index col;
  double val;
};

// Newton matrix M = Q + G^T diag(w) G, either reduced onto the dense block
// via a Schur complement over the trailing variables or formed densely.
class NewtonSystem {
 public:
  NewtonSystem(const Eigen::MatrixXd& q_dense, Index n, const SparseRows& g)
      : q_(q_dense), n_(n), nd_(q_dense.rows()) {
    rows_.resize(static_cast<std::size_t>(g.rows()));
    std::vector<int> trailing_hits(static_cast<std::size_t>(n - nd_), 0);
    structured_ = true;
    for (Index r = 0; r < g.rows(); ++r) {
      int trailing = 0;
      for (SparseRows::InnerIterator it(g, r); it; ++it) {
        rows_[r].push_back({it.col(), it.value()});
        if (it.col() >= nd_) {
          ++trailing;
          ++trailing_hits[static_cast<std::size_t>(it.col() - nd_)];
        }
      }
      if (trailing > 1) structured_ = false;
    }
    for (int h : trailing_hits) {
      if (h == 0) structured_ = false;
    }
  }

  bool factor(const Eigen::VectorXd& w) {
    if (structured_) return factor_structured(w);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    m.topLeftCorner(nd_, nd_) = q_;
    for (Index r = 0; r < static_cast<Index>(rows_.size()); ++r) {
      for (const auto& a : rows_[r]) {
        for (const auto& b : rows_[r]) m(a.col, b.col) += w(r) * a.val * b.val;
      }
    }
    return decompose(m);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (!structured_) return solve_dense(rhs);
    const Index nt = n_ - nd_;
    Eigen::VectorXd reduced = rhs.head(nd_);
    for (Index t = 0; t < nt; ++t) {
      const double scale = rhs(nd_ + t) / diag_(t);
      for (const auto& e : coupling_[t]) reduced(e.col) -= e.val * scale;
    }
    Eigen::VectorXd out(n_);
    out.head(nd_) = solve_dense(reduced);
    for (Index t = 0; t < nt; ++t) {
      double acc = rhs(nd_ + t);
      for (const auto& e : coupling_[t]) acc -= e.val * out(e.col);
      out(nd_ + t) = acc / diag_(t);
    }
    return out;
  }

 private:
  bool factor_structured(const Eigen::VectorXd& w) {
    const Index nt = n_ - nd_;
    Eigen::MatrixXd m = q_;
    diag_ = Eigen::VectorXd::Zero(nt);
    coupling_.assign(static_cast<std::size_t>(nt), {});
    for (Index r = 0; r < static_cast<Index>(rows_.size()); ++r) {
      const auto& row = rows_[r];
      const Entry* trailing = nullptr;
      for (const auto& a : row) {
        if (a.col >= nd_) {
          trailing = &a;
          continue;
        }
        for (const auto& b : row) {
          if (b.col < nd_) m(a.col, b.col) += w(r) * a.val * b.val;
        }
      }
      if (trailing != nullptr) {
        const Index t = trailing->col - nd_;
        diag_(t) += w(r) * trailing->val * trailing->val;
        for (const auto& a : row) {
          if (a.col < nd_) coupling_[t].push_back({a.col, w(r) * a.val * trailing->val});
        }
      }
    }
    for (Index t = 0; t < nt; ++t) {
      if (!(diag_(t) > 0.0)) return false;
      const auto& c = coupling_[t];
      for (const auto& a : c) {
        for (const auto& b : c) m(a.col, b.col) -= a.val * b.val / diag_(t);
      }
    }
    return decompose(m);
  }

  bool decompose(Eigen::MatrixXd& m) {
    m = 0.5 * (m + m.transpose()).eval();
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) {
      use_ldlt_ = false;
      return true;
    }
    // Nearly singular: a tiny ridge relative to the diagonal.
    const double ridge = 1e-13 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    m.diagonal().array() += ridge;
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) {
      use_ldlt_ = false;
      return true;
    }
    ldlt_.compute(m);
    use_ldlt_ = true;
    return ldlt_.info() == Eigen::Success;
  }

  Eigen::VectorXd solve_dense(const Eigen::VectorXd& rhs) const {
    return use_ldlt_ ? Eigen::VectorXd(ldlt_.solve(rhs)) : Eigen::VectorXd(llt_.solve(rhs));
  }

  const Eigen::MatrixXd& q_;
  Index n_;
  Index nd_;
  std::vector<std::vector<Entry>> rows_;
  bool structured_ = false;
  Eigen::VectorXd diag_;
  std::vector<std::vector<Entry>> coupling_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool use_ldlt_ = false;
};

double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double a = 1.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

// Interior point on  1/2 y^T Q y + c^T y  s.t. G y <= h  with convex Q.
QpResult interior_point(const Eigen::MatrixXd& q_dense, const Eigen::VectorXd& c, const SparseRows& g,
                        const Eigen::VectorXd& h, const QpOptions& opts) {
  const Index n = c.size();
  const Index nd = q_dense.rows();
  const Index m = g.rows();
  NewtonSystem system(q_dense, n, g);

  auto q_apply = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    out.head(nd) = q_dense * y.head(nd);
    return out;
  };

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  QpResult res;
  if (m == 0) {
    // Unconstrained: Q y = -c on the dense block; trailing variables must
    // then have zero cost.
    y.head(nd) = q_dense.ldlt().solve(-c.head(nd));
    res.converged = y.allFinite() && c.tail(n - nd).isZero();
    res.y = std::move(y);
    return res;
  }
  Eigen::VectorXd s = (h - g * y).cwiseMax(1.0);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(m);

  const double h_scale = 1.0 + (h.size() > 0 ? h.cwiseAbs().maxCoeff() : 0.0);
  const double c_scale = 1.0 + (c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0);

  for (int it = 0; it < opts.max_iters; ++it) {
    res.iterations = it + 1;
    const Eigen::VectorXd r_d = q_apply(y) + c + g.transpose() * z;
    const Eigen::VectorXd r_p = g * y + s - h;
    const double mu = m > 0 ? s.dot(z) / static_cast<double>(m) : 0.0;
    if (r_p.lpNorm<Eigen::Infinity>() <= opts.tol * h_scale && r_d.lpNorm<Eigen::Infinity>() <= opts.tol * c_scale &&
        mu <= opts.tol) {
      res.converged = true;
      break;
    }

    const Eigen::VectorXd w = z.cwiseQuotient(s);
    if (!system.factor(w)) throw NumericalError("interior point: Newton system is singular");

    auto newton = [&](const Eigen::VectorXd& r_c, Eigen::VectorXd& dy, Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
      const Eigen::VectorXd t = (r_c - z.cwiseProduct(r_p)).cwiseQuotient(s);
      dy = system.solve(-r_d + g.transpose() * t);
      const Eigen::VectorXd gdy = g * dy;
      dz = -t + w.cwiseProduct(gdy);
      ds = -r_p - gdy;
    };

    Eigen::VectorXd dy_aff, ds_aff, dz_aff;
    newton(s.cwiseProduct(z), dy_aff, ds_aff, dz_aff);
    const double a_aff = std::min(max_step(s, ds_aff), max_step(z, dz_aff));
    const double mu_aff = (s + a_aff * ds_aff).dot(z + a_aff * dz_aff) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3.0);

    const Eigen::VectorXd r_c =
        s.cwiseProduct(z) + ds_aff.cwiseProduct(dz_aff) - Eigen::VectorXd::Constant(m, sigma * mu);
    Eigen::VectorXd dy, ds, dz;
    newton(r_c, dy, ds, dz);
    const double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));

    y += a * dy;
    s += a * ds;
    z += a * dz;
    if (!y.allFinite() || !s.allFinite() || !z.allFinite()) {
      throw NumericalError("interior point: non-finite iterate");
    }
  }
  res.y = std::move(y);
  return res;
}

// Interior points stop a little inside the feasible set, which is visible
// when the optimum sits on a bound with a zero multiplier. Re-solve the
// equality problem on the near-active rows and keep it if it is feasible
// and no worse. Skipped for large systems.
void polish(const QpProblem& qp, const Eigen::MatrixXd& sym, QpResult& res) {
  const Index n = qp.variables();
  const Index nd = qp.dense_count();
  if (qp.rows() == 0 || n > 300) return;
  const Eigen::VectorXd slack = qp.bound - qp.ineq * res.y;
  const double h_scale = 1.0 + qp.bound.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd g = Eigen::MatrixXd(qp.ineq);
  for (double thresh : {1e-8, 1e-5}) {
    std::vector<Index> active;
    for (Index r = 0; r < qp.rows(); ++r) {
      if (slack(r) <= thresh * h_scale) active.push_back(r);
    }
    const Index na = static_cast<Index>(active.size());
    if (na == 0 || n + na > 400) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    kkt.topLeftCorner(nd, nd) = 2.0 * sym;
    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -qp.linear;
    for (Index a = 0; a < na; ++a) {
      kkt.block(n + a, 0, 1, n) = g.row(active[a]);
      kkt.block(0, n + a, n, 1) = g.row(active[a]).transpose();
      rhs(n + a) = qp.bound(active[a]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd y = lu.solve(rhs).head(n);
    if (!y.allFinite() || qp.max_violation(y) > 1e-12 * h_scale) continue;
    const double obj = qp.objective(y);
    if (obj <= res.objective + 1e-12 * (1.0 + std::abs(res.objective))) {
      res.y = y;
      res.objective = obj;
    }
  }
}

// Global minimum of a small nonconvex QP: some minimizer is a KKT point
// of an active set with a nonsingular KKT matrix, so trying every active
// set of at most n rows finds it. Returns false when there are too many
// subsets to try.
bool enumerate_active_sets(const QpProblem& qp, const Eigen::MatrixXd& sym, QpResult& res) {
  constexpr double kMaxSubsets = 2e5;
  const Index n = qp.variables();
  const Index nd = qp.dense_count();
  const Index m = qp.rows();
  double subsets = 0.0, binom = 1.0;
  for (Index k = 0; k <= std::min(n, m); ++k) {
    subsets += binom;
    binom = binom * static_cast<double>(m - k) / static_cast<double>(k + 1);
  }
  if (subsets > kMaxSubsets) return false;

  const Eigen::MatrixXd g = Eigen::MatrixXd(qp.ineq);
  const double h_scale = 1.0 + (m > 0 ? qp.bound.cwiseAbs().maxCoeff() : 0.0);
  std::vector<Index> rows;
  double best = res.y.size() == n ? res.objective : std::numeric_limits<double>::infinity();
  bool found = false;
  auto try_set = [&]() {
    const Index na = static_cast<Index>(rows.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
    kkt.topLeftCorner(nd, nd) = 2.0 * sym;
    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -qp.linear;
    for (Index a = 0; a < na; ++a) {
      kkt.block(n + a, 0, 1, n) = g.row(rows[a]);
      kkt.block(0, n + a, n, 1) = g.row(rows[a]).transpose();
      rhs(n + a) = qp.bound(rows[a]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd y = lu.solve(rhs).head(n);
    if (!y.allFinite() || qp.max_violation(y) > 1e-12 * h_scale) return;
    const double obj = qp.objective(y);
    if (obj < best) {
      best = obj;
      res.y = y;
      res.objective = obj;
      found = true;
    }
  };
  // Depth-first over increasing row subsets.
  auto recurse = [&](auto&& self, Index start) -> void {
    try_set();
    if (static_cast<Index>(rows.size()) == n) return;
    for (Index r = start; r < m; ++r) {
      rows.push_back(r);
      self(self, r + 1);
      rows.pop_back();
    }
  };
  recurse(recurse, 0);
  return found || res.y.size() == n;
}

}  // namespace

double QpProblem::objective(const Eigen::VectorXd& y) const {
  const auto yd = y.head(dense_count());
  return yd.dot(quad_block * yd) + linear.dot(y);
}

double QpProblem::max_violation(const Eigen::VectorXd& y) const {
  if (rows() == 0) return 0.0;
  return std::max(0.0, (ineq * y - bound).maxCoeff());
}

void QpProblem::validate() const {
  if (quad_block.rows() != quad_block.cols()) throw DimensionError("QP: quadratic block must be square");
  if (quad_block.rows() > linear.size()) throw DimensionError("QP: quadratic block larger than the variable count");
  if (ineq.cols() != linear.size() || ineq.rows() != bound.size()) throw DimensionError("QP: G/h shape mismatch");
  if (!quad_block.allFinite() || !linear.allFinite() || !bound.allFinite()) throw DataError("QP: non-finite data");
}

QpResult solve_qp(const QpProblem& qp, const QpOptions& opts) {
  qp.validate();
  const Index nd = qp.dense_count();
  const Eigen::MatrixXd sym = 0.5 * (qp.quad_block + qp.quad_block.transpose());

  double min_eig = 0.0;
  double scale = 1.0;
  if (nd > 0) {
    const Eigen::VectorXd eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
    min_eig = eig.minCoeff();
    scale = std::max(1.0, eig.cwiseAbs().maxCoeff());
  }

  if (min_eig >= -1e-12 * scale) {
    QpResult res = interior_point(2.0 * sym, qp.linear, qp.ineq, qp.bound, opts);
    res.min_eigenvalue = min_eig;
    res.objective = qp.objective(res.y);
    polish(qp, sym, res);
    return res;
  }

  // Proximal point: each step adds tau |y_d - anchor|^2, which makes the
  // subproblem convex and never increases the true objective.
  const double tau = -min_eig * 1.1 + 1e-9 * scale;
  Eigen::MatrixXd q = 2.0 * sym;
  q.diagonal().array() += 2.0 * tau;
  Eigen::VectorXd anchor = Eigen::VectorXd::Zero(qp.variables());
  Eigen::VectorXd prev = anchor;
  double anchor_obj = qp.objective(anchor);
  QpResult res;
  res.convex = false;
  res.min_eigenvalue = min_eig;
  res.converged = false;
  auto prox_step = [&](const Eigen::VectorXd& center) {
    Eigen::VectorXd c = qp.linear;
    c.head(nd) -= 2.0 * tau * center.head(nd);
    QpResult step = interior_point(q, c, qp.ineq, qp.bound, opts);
    res.iterations += step.iterations;
    return step;
  };
  // Inertial proximal point: centre each step on an extrapolated anchor and
  // fall back to the plain step whenever that would raise the objective.
  for (int k = 0; k < opts.max_prox_iters; ++k) {
    res.prox_iterations = k + 1;
    const double theta = k > 0 ? static_cast<double>(k - 1) / static_cast<double>(k + 2) : 0.0;
    QpResult step = prox_step(anchor + theta * (anchor - prev));
    double obj = qp.objective(step.y);
    if (theta > 0.0 && obj > anchor_obj) {
      step = prox_step(anchor);
      obj = qp.objective(step.y);
    }
    const double move = (step.y - anchor).head(nd).lpNorm<Eigen::Infinity>();
    prev = std::move(anchor);
    anchor = std::move(step.y);
    anchor_obj = obj;
    if (k > 0 && move <= opts.prox_tol) {
      res.converged = step.converged;
      break;
    }
  }
  res.y = std::move(anchor);
  res.objective = qp.objective(res.y);
  if (enumerate_active_sets(qp, sym, res)) res.converged = true;
  return res;
}

}  // namespace cprl
