#include "cprl/pacing.hpp"

#include <algorithm>
#include <cmath>

#include "cprl/error.hpp"

namespace cprl {

PacingParams PacingParams::from(const ModelConfig& cfg, double gamma) {
  PacingParams p;
  p.beta = cfg.beta;
  p.gamma = gamma;
  p.mu = cfg.mu;
  p.regularizer = cfg.regularizer;
  p.laplacian_form = cfg.laplacian_form;
  p.order_margin = cfg.order_margin;
  p.literal_sp_b = cfg.literal_sp_b;
  return p;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> per_sample_losses(const Eigen::MatrixXd& ds, const Eigen::MatrixXd& di,
                                                              const Eigen::MatrixXd& cj, const Eigen::MatrixXd& fs,
                                                              const Eigen::MatrixXd& fi) {
  const Index k = fs.cols();
  const Index l = fi.cols();
  if (cj.cols() != k + l || ds.cols() != cj.rows() || di.cols() != cj.rows() || ds.rows() != fs.rows() ||
      di.rows() != fi.rows()) {
    throw DimensionError("per_sample_losses: shapes do not agree");
  }
  Eigen::VectorXd ls = (fs - ds * cj.leftCols(k)).colwise().squaredNorm().transpose();
  Eigen::VectorXd li = (fi - di * cj.rightCols(l)).colwise().squaredNorm().transpose();
  return {std::move(ls), std::move(li)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> per_sample_losses(const Dictionary& ds, const Dictionary& di,
                                                              const CodeMatrix& cj, const FeatureMatrix& fs,
                                                              const FeatureMatrix& fi) {
  return per_sample_losses(ds.atoms(), di.atoms(), cj.values(), fs.values(), fi.values());
}

Eigen::MatrixXd PacingQP::dense_R() const {
  const Index n = qp.variables();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  r.topLeftCorner(qp.dense_count(), qp.dense_count()) = qp.quad_block;
  return r;
}

Eigen::MatrixXd PacingQP::dense_G() const { return Eigen::MatrixXd(qp.ineq); }

PacingQP assemble_qp(const Eigen::VectorXd& losses_s, const Eigen::VectorXd& losses_i, const Eigen::MatrixXd& cj,
                     const GraphLaplacian& lap, const GroupAssignment* groups_s, const GroupAssignment* groups_i,
                     const CurriculumConstraintSet& constraints, const PacingParams& params) {
  if (!(params.gamma > 0.0)) throw std::invalid_argument("assemble_qp: gamma must be > 0");
  if (!(params.mu >= 0.0)) throw std::invalid_argument("assemble_qp: mu must be >= 0");
  if (!(params.order_margin >= 0.0)) throw std::invalid_argument("assemble_qp: order margin must be >= 0");
  const Index k = losses_s.size();
  const Index l = losses_i.size();
  const Index n = k + l;
  if (cj.cols() != n || lap.nodes() != n || lap.sketch_count() != k) {
    throw DimensionError("assemble_qp: codes/Laplacian do not match the sample counts");
  }
  constraints.validate(k, l);

  PacingQP out;
  out.sketch_count = k;
  out.image_count = l;
  out.constraints = constraints.ordered();
  out.order_margin = params.order_margin;
  const Index nc = static_cast<Index>(out.constraints.size());

  Eigen::VectorXd losses(n);
  losses << losses_s, losses_i;

  // Quadratic block over v.
  Eigen::MatrixXd r(n, n);
  const Eigen::MatrixXd gram = cj.transpose() * cj;
  if (params.laplacian_form == LaplacianForm::paper) {
    const Eigen::VectorXd sq = gram.diagonal();
    for (Index q = 0; q < n; ++q) {
      for (Index p = 0; p < n; ++p) {
        const double dist = std::max(0.0, sq(p) + sq(q) - 2.0 * gram(p, q));
        r(p, q) = p == q ? 0.0 : params.beta * lap.weights()(p, q) * dist;
      }
    }
  } else {
    r = params.beta * (gram.array() * lap.laplacian().array()).matrix();
  }
  r = (0.5 * (r + r.transpose())).eval();
  r.diagonal() += losses;

  Eigen::VectorXd b(n + nc);
  if (params.regularizer == Regularizer::A) {
    if (groups_s == nullptr || groups_i == nullptr) {
      throw DataError("regularizer A needs a group for every sample");
    }
    if (groups_s->samples() != k || groups_i->samples() != l) {
      throw DataError("regularizer A: group assignment does not cover every sample");
    }
    for (Index p = 0; p < k; ++p) b(p) = -params.gamma / static_cast<double>(groups_s->size_of_group_of(p));
    for (Index q = 0; q < l; ++q) b(k + q) = -params.gamma / static_cast<double>(groups_i->size_of_group_of(q));
  } else if (params.literal_sp_b) {
    r.diagonal().array() -= 0.5 * params.gamma;
    b.head(n).setConstant(params.gamma);
  } else {
    r.diagonal().array() += 0.5 * params.gamma;
    b.head(n).setConstant(-params.gamma);
  }
  b.tail(nc).setConstant(params.mu);

  const Index rows = 2 * n + 2 * nc;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(2 * n + 4 * nc));
  Eigen::VectorXd h(rows);
  for (Index p = 0; p < n; ++p) {
    trip.emplace_back(p, p, 1.0);
    h(p) = 1.0;
    trip.emplace_back(n + p, p, -1.0);
    h(n + p) = 0.0;
  }
  for (Index c = 0; c < nc; ++c) {
    const auto& con = out.constraints[static_cast<std::size_t>(c)];
    const Index offset = con.modality == Modality::sketch ? 0 : k;
    trip.emplace_back(2 * n + c, n + c, -1.0);
    h(2 * n + c) = 0.0;
    const Index row = 2 * n + nc + c;
    trip.emplace_back(row, offset + con.hard, 1.0);
    trip.emplace_back(row, offset + con.easy, -1.0);
    trip.emplace_back(row, n + c, -1.0);
    h(row) = -params.order_margin;
  }

  out.qp.quad_block = std::move(r);
  out.qp.linear = std::move(b);
  out.qp.ineq.resize(rows, n + nc);
  out.qp.ineq.setFromTriplets(trip.begin(), trip.end());
  out.qp.bound = std::move(h);
  return out;
}

namespace {

Eigen::VectorXd slacks_for(const PacingQP& qp, const Eigen::VectorXd& v) {
  const Index nc = static_cast<Index>(qp.constraints.size());
  Eigen::VectorXd xi(nc);
  for (Index c = 0; c < nc; ++c) {
    const auto& con = qp.constraints[static_cast<std::size_t>(c)];
    const Index offset = con.modality == Modality::sketch ? 0 : qp.sketch_count;
    xi(c) = std::max(0.0, v(offset + con.hard) - v(offset + con.easy) + qp.order_margin);
  }
  return xi;
}

}  // namespace

PacingSolution solve_pacing(const PacingQP& qp, const QpOptions& opts) {
  const QpResult res = solve_qp(qp.qp, opts);
  const Index n = qp.samples();
  const Eigen::VectorXd v = res.y.head(n).cwiseMax(0.0).cwiseMin(1.0);
  const Eigen::VectorXd xi = slacks_for(qp, v);

  PacingSolution out{PacingState(v.head(qp.sketch_count), v.tail(qp.image_count), xi)};
  out.converged = res.converged;
  out.convex = res.convex;
  out.iterations = res.iterations;
  out.objective = pacing_objective(qp, out.state);
  return out;
}

double pacing_objective(const PacingQP& qp, const PacingState& state) {
  Eigen::VectorXd y(qp.qp.variables());
  y << state.v_joint(), state.slacks();
  return qp.qp.objective(y);
}

double advance_pace(double gamma, double eta) {
  if (!(eta > 1.0)) throw std::invalid_argument("advance_pace: eta must be > 1");
  return gamma * eta;
}

}  // namespace cprl
