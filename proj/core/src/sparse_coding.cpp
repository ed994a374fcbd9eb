#include "cprl/sparse_coding.hpp"

#include <algorithm>
#include <cmath>

#include "cprl/error.hpp"
#include "cprl/rng.hpp"

namespace cprl {

namespace {

void check_dims(const CodingProblem& p, const Eigen::MatrixXd& cj) {
  const Index k = p.fs.samples();
  const Index l = p.fi.samples();
  if (p.ds.dim() != p.fs.dim() || p.di.dim() != p.fi.dim()) {
    throw DimensionError("dictionary and feature dimensions differ");
  }
  if (p.ds.size() != p.di.size() || cj.rows() != p.ds.size()) {
    throw DimensionError("code rows must equal the dictionary size");
  }
  if (cj.cols() != k + l || p.lap.sketch_count() != k || p.lap.nodes() != k + l) {
    throw DimensionError("joint codes / Laplacian do not match the sample counts");
  }
  if (p.pacing.v_sketch().size() != k || p.pacing.v_image().size() != l) {
    throw DimensionError("pacing weights do not match the sample counts");
  }
}

// Precomputed pieces shared by objective, gradient and Hessian products.
struct CodingModel {
  explicit CodingModel(const CodingProblem& p)
      : k(p.fs.samples()),
        gram_s(p.ds.atoms().transpose() * p.ds.atoms()),
        gram_i(p.di.atoms().transpose() * p.di.atoms()),
        corr_s(p.ds.atoms().transpose() * p.fs.values()),
        corr_i(p.di.atoms().transpose() * p.fi.values()),
        w2_s(p.pacing.v_sketch().array().square().matrix()),
        w2_i(p.pacing.v_image().array().square().matrix()) {
    const Eigen::VectorXd v = p.pacing.v_joint();
    paced_lap = v.asDiagonal() * p.lap.laplacian() * v.asDiagonal();
  }

  Eigen::MatrixXd hessian_apply(const Eigen::MatrixXd& x, double beta) const {
    const Index l = x.cols() - k;
    Eigen::MatrixXd out(x.rows(), x.cols());
    out.leftCols(k) = 2.0 * (gram_s * x.leftCols(k)) * w2_s.asDiagonal();
    out.rightCols(l) = 2.0 * (gram_i * x.rightCols(l)) * w2_i.asDiagonal();
    if (beta != 0.0) out.noalias() += 2.0 * beta * x * paced_lap;
    return out;
  }

  Index k;
  Eigen::MatrixXd gram_s, gram_i, corr_s, corr_i;
  Eigen::VectorXd w2_s, w2_i;
  Eigen::MatrixXd paced_lap;
};

double smooth_value(const CodingProblem& p, const CodingModel& m, const Eigen::MatrixXd& cj) {
  const Index k = m.k;
  const Index l = cj.cols() - k;
  const double recon_s =
      ((p.fs.values() - p.ds.atoms() * cj.leftCols(k)) * p.pacing.v_sketch().asDiagonal()).squaredNorm();
  const double recon_i =
      ((p.fi.values() - p.di.atoms() * cj.rightCols(l)) * p.pacing.v_image().asDiagonal()).squaredNorm();
  double lap = 0.0;
  if (p.beta != 0.0) lap = std::max(0.0, ((cj * m.paced_lap).array() * cj.array()).sum());
  return recon_s + recon_i + p.beta * lap;
}

Eigen::MatrixXd smooth_gradient(const CodingProblem& p, const CodingModel& m, const Eigen::MatrixXd& cj) {
  const Index k = m.k;
  const Index l = cj.cols() - k;
  Eigen::MatrixXd g(cj.rows(), cj.cols());
  g.leftCols(k) = 2.0 * (m.gram_s * cj.leftCols(k) - m.corr_s) * m.w2_s.asDiagonal();
  g.rightCols(l) = 2.0 * (m.gram_i * cj.rightCols(l) - m.corr_i) * m.w2_i.asDiagonal();
  if (p.beta != 0.0) g.noalias() += 2.0 * p.beta * cj * m.paced_lap;
  return g;
}

double lipschitz(const CodingProblem& p, const CodingModel& m, Index rows, Index cols, int iterations) {
  Rng rng(0x5eed);
  Eigen::MatrixXd x(rows, cols);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double n = x.norm();
    if (n == 0.0) return 0.0;
    x /= n;
    Eigen::MatrixXd y = m.hessian_apply(x, p.beta);
    lambda = (x.array() * y.array()).sum();
    x = std::move(y);
  }
  return std::max(lambda, 0.0);
}

}  // namespace

double code_smooth_objective(const CodingProblem& p, const Eigen::MatrixXd& cj) {
  check_dims(p, cj);
  return smooth_value(p, CodingModel(p), cj);
}

double code_objective(const CodingProblem& p, const Eigen::MatrixXd& cj) {
  return code_smooth_objective(p, cj) + p.alpha * cj.lpNorm<1>();
}

Eigen::MatrixXd code_gradient(const CodingProblem& p, const Eigen::MatrixXd& cj) {
  check_dims(p, cj);
  return smooth_gradient(p, CodingModel(p), cj);
}

double prox_l1(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& x, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("prox_l1: threshold must be >= 0");
  return x.unaryExpr([tau](double v) { return prox_l1(v, tau); });
}

double code_lipschitz(const CodingProblem& p, int iterations) {
  const Index n = p.fs.samples() + p.fi.samples();
  return lipschitz(p, CodingModel(p), p.ds.size(), n, iterations);
}

CodeUpdateResult update_codes(const CodingProblem& p, const Eigen::MatrixXd& cj, const CodeSolverConfig& cfg) {
  check_dims(p, cj);
  cfg.validate();
  const CodingModel model(p);
  auto total = [&](const Eigen::MatrixXd& c, double smooth) { return smooth + p.alpha * c.lpNorm<1>(); };

  double step = cfg.initial_step;
  if (cfg.step_rule == StepRule::fixed) {
    const double lip = 1.05 * lipschitz(p, model, cj.rows(), cj.cols(), 60);
    step = lip > 0.0 ? 1.0 / lip : cfg.initial_step;
  }

  CodeUpdateResult res;
  Eigen::MatrixXd x = cj;
  double fx_smooth = smooth_value(p, model, x);
  double fx = total(x, fx_smooth);
  res.objective_in = fx;

  Eigen::MatrixXd y = x;
  double fy_smooth = fx_smooth;
  double momentum = 1.0;
  int consecutive_restarts = 0;

  for (int it = 0; it < cfg.max_inner_iters; ++it) {
    res.iterations = it + 1;
    const Eigen::MatrixXd grad = smooth_gradient(p, model, y);

    Eigen::MatrixXd z;
    double fz_smooth = 0.0;
    while (true) {
      // argmin |C - (Y - t grad)|^2 / (2t) + alpha |C|_1
      z = prox_l1(y - step * grad, p.alpha * step);
      fz_smooth = smooth_value(p, model, z);
      if (!std::isfinite(fz_smooth)) {
        if (cfg.step_rule == StepRule::fixed) throw NumericalError("update_codes: non-finite iterate");
      }
      if (cfg.step_rule == StepRule::fixed) break;
      const Eigen::MatrixXd d = z - y;
      const double model_value = fy_smooth + (grad.array() * d.array()).sum() + d.squaredNorm() / (2.0 * step);
      if (std::isfinite(fz_smooth) && fz_smooth <= model_value + 1e-12 * std::abs(model_value)) break;
      step *= cfg.shrink;
      if (step < 1e-300) throw NumericalError("update_codes: step size underflow");
    }

    const double fz = total(z, fz_smooth);
    if (fz < fx) {
      const double change = (fx - fz) / std::max(1.0, std::abs(fx));
      const Eigen::MatrixXd x_prev = std::move(x);
      x = std::move(z);
      fx = fz;
      fx_smooth = fz_smooth;
      consecutive_restarts = 0;
      if (cfg.accelerated) {
        const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        y = x + ((momentum - 1.0) / next) * (x - x_prev);
        momentum = next;
        fy_smooth = smooth_value(p, model, y);
      } else {
        y = x;
        fy_smooth = fx_smooth;
      }
      if (change < cfg.kkt_tol) break;
    } else {
      // No decrease from the extrapolated point: restart from the best
      // iterate. A second failure in a row from x itself means x is a fixed
      // point of the proximal map up to rounding.
      ++res.restarts;
      if (++consecutive_restarts >= 2) break;
      y = x;
      fy_smooth = fx_smooth;
      momentum = 1.0;
    }
  }

  res.codes = std::move(x);
  res.objective_out = fx;
  return res;
}

CodeMatrix update_codes(const CodingProblem& p, const CodeMatrix& cj, const CodeSolverConfig& cfg) {
  auto res = update_codes(p, cj.values(), cfg);
  return CodeMatrix::joint(std::move(res.codes), p.fs.samples());
}

LassoEncoder::LassoEncoder(const Eigen::MatrixXd& dictionary, double alpha, LassoOptions opts)
    : dict_(dictionary), gram_(dictionary.transpose() * dictionary), alpha_(alpha), opts_(opts) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("lasso: alpha must be >= 0");
}

Eigen::VectorXd LassoEncoder::encode(const Eigen::VectorXd& f) const {
  if (f.size() != dict_.rows()) throw DimensionError("lasso: feature length differs from dictionary rows");
  const Index n = dict_.cols();
  const Eigen::VectorXd corr = dict_.transpose() * f;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd gc = Eigen::VectorXd::Zero(n);  // gram * c
  const double half_alpha = 0.5 * alpha_;

  for (int sweep = 0; sweep < opts_.max_sweeps; ++sweep) {
    for (Index j = 0; j < n; ++j) {
      const double gjj = gram_(j, j);
      if (gjj <= 0.0) continue;
      const double rho = corr(j) - (gc(j) - gjj * c(j));
      const double cj_new = prox_l1(rho, half_alpha) / gjj;
      const double delta = cj_new - c(j);
      if (delta != 0.0) {
        c(j) = cj_new;
        gc.noalias() += delta * gram_.col(j);
      }
    }
    // Recompute exactly every so often to stop drift in gc.
    if (sweep % 50 == 49) gc.noalias() = gram_ * c;

    double worst = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (gram_(j, j) <= 0.0) continue;
      const double g = 2.0 * (gc(j) - corr(j));
      const double v = c(j) == 0.0 ? std::max(0.0, std::abs(g) - alpha_)
                                   : std::abs(g + alpha_ * (c(j) > 0.0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
    if (worst <= opts_.kkt_tol) break;
  }
  return c;
}

double LassoEncoder::kkt_violation(const Eigen::VectorXd& f, const Eigen::VectorXd& c) const {
  const Eigen::VectorXd g = 2.0 * dict_.transpose() * (dict_ * c - f);
  double worst = 0.0;
  for (Index j = 0; j < c.size(); ++j) {
    const double v = c(j) == 0.0 ? std::max(0.0, std::abs(g(j)) - alpha_)
                                 : std::abs(g(j) + alpha_ * (c(j) > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

double LassoEncoder::objective(const Eigen::VectorXd& f, const Eigen::VectorXd& c) const {
  return (f - dict_ * c).squaredNorm() + alpha_ * c.lpNorm<1>();
}

Eigen::VectorXd lasso_encode(const Eigen::MatrixXd& d, const Eigen::VectorXd& f, double alpha, LassoOptions opts) {
  return LassoEncoder(d, alpha, opts).encode(f);
}

Eigen::VectorXd lasso_encode(const Dictionary& d, const Eigen::VectorXd& f, double alpha, LassoOptions opts) {
  return lasso_encode(d.atoms(), f, alpha, opts);
}

}  // namespace cprl
