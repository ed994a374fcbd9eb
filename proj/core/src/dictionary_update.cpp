#include "cprl/dictionary_update.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cprl/error.hpp"

namespace cprl {

namespace {

constexpr double kRidge = 1e-12;
constexpr double kDualTol = 1e-12;
constexpr int kMaxDualIters = 200;

void project_columns(Eigen::MatrixXd& d) {
  for (Index j = 0; j < d.cols(); ++j) {
    const double n = d.col(j).norm();
    if (n > 1.0) d.col(j) /= n;
  }
}

// Lagrange dual of min |X - D S|^2 s.t. |d_j|^2 <= 1 over lambda >= 0.
class NormBallDual {
 public:
  NormBallDual(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross)
      : gram_(gram), cross_(cross), cross_gram_(cross.transpose() * cross) {
    const double scale = std::max(1.0, gram.diagonal().mean());
    ridge_ = kRidge * scale;
  }

  struct Point {
    Eigen::VectorXd lambda;
    Eigen::MatrixXd m_inv;
    Eigen::MatrixXd p;  // M^-1 B^T B M^-1; diagonal = squared atom norms
    double value = 0.0;
    bool ok = false;
  };

  Point evaluate(const Eigen::VectorXd& lambda) const {
    Point pt;
    pt.lambda = lambda;
    Eigen::MatrixXd m = gram_;
    m.diagonal() += lambda + Eigen::VectorXd::Constant(lambda.size(), ridge_);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return pt;
    pt.m_inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    pt.p = pt.m_inv * cross_gram_ * pt.m_inv;
    pt.value = -(pt.m_inv.array() * cross_gram_.array()).sum() - lambda.sum();
    pt.ok = pt.value == pt.value;
    return pt;
  }

  Eigen::MatrixXd atoms(const Point& pt) const { return cross_ * pt.m_inv; }

 private:
  const Eigen::MatrixXd& gram_;
  const Eigen::MatrixXd& cross_;
  Eigen::MatrixXd cross_gram_;
  double ridge_;
};

// Returns false when the ascent did not reach the tolerance.
bool solve_dual(const NormBallDual& dual, const Eigen::MatrixXd& gram, const Eigen::MatrixXd& cross,
                Eigen::MatrixXd& atoms, int& iterations) {
  const Index n = gram.rows();
  Eigen::VectorXd lambda(n);
  for (Index j = 0; j < n; ++j) lambda(j) = std::max(0.0, cross.col(j).norm() - gram(j, j));

  // Start from the unconstrained solution when it is already feasible.
  auto at_zero = dual.evaluate(Eigen::VectorXd::Zero(n));
  if (at_zero.ok && at_zero.p.diagonal().maxCoeff() <= 1.0) {
    atoms = dual.atoms(at_zero);
    iterations = 0;
    return true;
  }

  auto pt = dual.evaluate(lambda);
  if (!pt.ok) return false;
  for (iterations = 1; iterations <= kMaxDualIters; ++iterations) {
    const Eigen::VectorXd grad = pt.p.diagonal().array() - 1.0;  // ascent direction for lambda

    // Free coordinates: positive multiplier or violated constraint.
    std::vector<Index> free;
    double violation = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (pt.lambda(j) > 0.0) {
        violation = std::max(violation, std::abs(grad(j)));
        free.push_back(j);
      } else if (grad(j) > 0.0) {
        violation = std::max(violation, grad(j));
        free.push_back(j);
      }
    }
    if (violation <= kDualTol) {
      atoms = dual.atoms(pt);
      return true;
    }

    // -Hessian restricted to the free set: 2 (P o M^-1).
    const Index nf = static_cast<Index>(free.size());
    Eigen::MatrixXd neg_h(nf, nf);
    Eigen::VectorXd g(nf);
    for (Index a = 0; a < nf; ++a) {
      g(a) = grad(free[a]);
      for (Index b = 0; b < nf; ++b) neg_h(a, b) = 2.0 * pt.p(free[a], free[b]) * pt.m_inv(free[a], free[b]);
    }
    Eigen::VectorXd step_free;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      step_free = ldlt.solve(g);
    }
    if (step_free.size() != nf || !step_free.allFinite() || step_free.dot(g) <= 0.0) {
      step_free = g;  // gradient ascent when Newton is unusable
    }
    Eigen::VectorXd direction = Eigen::VectorXd::Zero(n);
    for (Index a = 0; a < nf; ++a) direction(free[a]) = step_free(a);

    bool improved = false;
    double s = 1.0;
    for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
      const Eigen::VectorXd trial = (pt.lambda + s * direction).cwiseMax(0.0);
      auto next = dual.evaluate(trial);
      if (next.ok && next.value >= pt.value) {
        improved = next.value > pt.value || (trial - pt.lambda).norm() > 0.0;
        pt = std::move(next);
        break;
      }
    }
    if (!improved) {
      atoms = dual.atoms(pt);
      return violation <= 1e-8;
    }
  }
  atoms = dual.atoms(pt);
  return false;
}

}  // namespace

double weighted_reconstruction(const Eigen::MatrixXd& f, const Eigen::MatrixXd& d, const Eigen::MatrixXd& c,
                               const Eigen::VectorXd& v) {
  return ((f - d * c) * v.asDiagonal()).squaredNorm();
}

Eigen::MatrixXd projected_gradient_dictionary(const Eigen::MatrixXd& f, const Eigen::MatrixXd& c,
                                              const Eigen::VectorXd& v, Eigen::MatrixXd d, long iterations,
                                              bool accelerated) {
  const Eigen::MatrixXd x = f * v.asDiagonal();
  const Eigen::MatrixXd s = c * v.asDiagonal();
  const Eigen::MatrixXd gram = s * s.transpose();
  const Eigen::MatrixXd cross = x * s.transpose();
  const double lip = 2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .maxCoeff();
  if (!(lip > 0.0)) return d;
  const double step = 1.0 / lip;
  project_columns(d);
  Eigen::MatrixXd y = d;
  Eigen::MatrixXd prev = d;
  double t = 1.0;
  for (long it = 0; it < iterations; ++it) {
    Eigen::MatrixXd next = y - step * 2.0 * (y * gram - cross);
    project_columns(next);
    if (accelerated) {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = next + ((t - 1.0) / t_next) * (next - prev);
      t = t_next;
    } else {
      y = next;
    }
    prev = std::move(next);
  }
  return prev;
}

DictionaryUpdateResult update_dictionary(const Eigen::MatrixXd& f, const Eigen::MatrixXd& c, const Eigen::VectorXd& v,
                                         const Eigen::MatrixXd& d_in) {
  if (f.cols() != c.cols() || v.size() != f.cols()) throw DimensionError("update_dictionary: sample counts differ");
  if (d_in.rows() != f.rows() || d_in.cols() != c.rows()) {
    throw DimensionError("update_dictionary: dictionary shape does not match features/codes");
  }
  if (v.size() > 0 && (v.minCoeff() < 0.0 || v.maxCoeff() > 1.0)) {
    throw DataError("update_dictionary: pacing weights outside [0, 1]");
  }

  DictionaryUpdateResult res;
  res.atoms = d_in;
  res.objective_in = weighted_reconstruction(f, d_in, c, v);
  res.objective_out = res.objective_in;

  const Eigen::MatrixXd x = f * v.asDiagonal();
  const Eigen::MatrixXd s = c * v.asDiagonal();

  std::vector<Index> live;
  for (Index j = 0; j < s.rows(); ++j) {
    if (s.row(j).squaredNorm() > 0.0) live.push_back(j);
    else res.dead_atoms.push_back(j);
  }
  if (live.empty()) return res;

  const Index nl = static_cast<Index>(live.size());
  Eigen::MatrixXd s_live(nl, s.cols());
  for (Index a = 0; a < nl; ++a) s_live.row(a) = s.row(live[a]);
  const Eigen::MatrixXd gram = s_live * s_live.transpose();
  const Eigen::MatrixXd cross = x * s_live.transpose();

  Eigen::MatrixXd live_atoms;
  const NormBallDual dual(gram, cross);
  const bool converged = solve_dual(dual, gram, cross, live_atoms, res.dual_iterations);

  Eigen::MatrixXd candidate = d_in;
  if (live_atoms.size() == 0 || !live_atoms.allFinite()) {
    live_atoms.resize(d_in.rows(), nl);
    for (Index a = 0; a < nl; ++a) live_atoms.col(a) = d_in.col(live[a]);
  }
  project_columns(live_atoms);
  for (Index a = 0; a < nl; ++a) candidate.col(live[a]) = live_atoms.col(a);

  if (!converged) {
    res.used_fallback = true;
    const Eigen::MatrixXd refined =
        projected_gradient_dictionary(x, s_live, Eigen::VectorXd::Ones(x.cols()), live_atoms, 5000);
    for (Index a = 0; a < nl; ++a) candidate.col(live[a]) = refined.col(a);
  }

  const double out = weighted_reconstruction(f, candidate, c, v);
  if (out <= res.objective_in) {
    res.atoms = std::move(candidate);
    res.objective_out = out;
  }
  return res;
}

Dictionary update_dictionary(const FeatureMatrix& f, const Eigen::MatrixXd& c, const Eigen::VectorXd& v,
                             const Dictionary& d_in) {
  auto res = update_dictionary(f.values(), c, v, d_in.atoms());
  return Dictionary(d_in.modality(), std::move(res.atoms));
}

}  // namespace cprl
