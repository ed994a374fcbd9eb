#include "cprl/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "cprl/dictionary_update.hpp"
#include "cprl/error.hpp"
#include "cprl/matrix_io.hpp"
#include "cprl/pacing.hpp"
#include "cprl/rng.hpp"
#include "cprl/sparse_coding.hpp"
#include "cprl/text_files.hpp"

namespace cprl {

namespace {

Eigen::MatrixXd initial_atoms(const Eigen::MatrixXd& f, Index n, Rng& rng) {
  const auto count = static_cast<std::uint64_t>(f.cols());
  std::vector<std::uint64_t> picks = rng.sample_without_replacement(count, std::min<std::uint64_t>(count, n));
  while (static_cast<Index>(picks.size()) < n) picks.push_back(rng.uniform_index(count));

  Eigen::MatrixXd d(f.rows(), n);
  for (Index j = 0; j < n; ++j) {
    Eigen::VectorXd col = f.col(static_cast<Index>(picks[static_cast<std::size_t>(j)]));
    if (col.norm() < 1e-12) {
      for (Index r = 0; r < col.size(); ++r) col(r) = rng.normal();
    }
    d.col(j) = col / col.norm();
  }
  return d;
}

Eigen::MatrixXd encode_all(const Eigen::MatrixXd& d, const Eigen::MatrixXd& f, double alpha) {
  const LassoEncoder enc(d, alpha);
  Eigen::MatrixXd c(d.cols(), f.cols());
  for (Index j = 0; j < f.cols(); ++j) c.col(j) = enc.encode(f.col(j));
  return c;
}

Eigen::MatrixXd warm_up(const Eigen::MatrixXd& f, Eigen::MatrixXd d, double alpha, int iters) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(f.cols());
  for (int it = 0; it < iters; ++it) {
    const Eigen::MatrixXd c = encode_all(d, f, alpha);
    d = update_dictionary(f, c, ones, d).atoms;
  }
  return d;
}

Eigen::VectorXd minimal_slacks(const std::vector<CurriculumConstraint>& ordered, const Eigen::VectorXd& vs,
                               const Eigen::VectorXd& vi, double margin) {
  Eigen::VectorXd xi(static_cast<Index>(ordered.size()));
  for (std::size_t c = 0; c < ordered.size(); ++c) {
    const auto& con = ordered[c];
    const auto& v = con.modality == Modality::sketch ? vs : vi;
    xi(static_cast<Index>(c)) = std::max(0.0, v(con.hard) - v(con.easy) + margin);
  }
  return xi;
}

double self_paced_term(const Eigen::VectorXd& v, const GroupAssignment* groups, const ModelConfig& cfg,
                       double gamma) {
  if (gamma == 0.0 || v.size() == 0) return 0.0;
  if (cfg.regularizer == Regularizer::A) {
    if (groups == nullptr) throw DataError("regularizer A needs a group for every sample");
    double sum = 0.0;
    for (Index p = 0; p < v.size(); ++p) sum += v(p) / static_cast<double>(groups->size_of_group_of(p));
    return -gamma * sum;
  }
  const double quad = 0.5 * gamma * (v.squaredNorm() - 2.0 * v.sum());
  return cfg.literal_sp_b ? -quad : quad;
}

ObjectiveTerms terms_for(const Eigen::MatrixXd& ds, const Eigen::MatrixXd& di, const Eigen::MatrixXd& cj,
                         const Eigen::VectorXd& vs, const Eigen::VectorXd& vi, const Eigen::VectorXd& xi,
                         const TrainData& data, const ModelConfig& cfg, double gamma) {
  const Index k = data.fs.samples();
  const Index l = data.fi.samples();
  ObjectiveTerms t;
  t.recon_sketch = weighted_reconstruction(data.fs.values(), ds, cj.leftCols(k), vs);
  t.recon_image = weighted_reconstruction(data.fi.values(), di, cj.rightCols(l), vi);
  t.sparsity = cfg.alpha * cj.cwiseAbs().sum();
  Eigen::VectorXd v(k + l);
  v << vs, vi;
  t.laplacian = cfg.beta * laplacian_quadform(data.lap, cj, v);
  t.self_paced = self_paced_term(vs, data.groups_s, cfg, gamma) + self_paced_term(vi, data.groups_i, cfg, gamma);
  t.curriculum = cfg.mu * xi.sum();
  return t;
}

void check_data(const TrainData& data, const ModelConfig& cfg) {
  const Index k = data.fs.samples();
  const Index l = data.fi.samples();
  if (data.lap.sketch_count() != k || data.lap.image_count() != l) {
    throw DimensionError("train: Laplacian does not match the sample counts");
  }
  data.constraints.validate(k, l);
  if (cfg.self_paced() && cfg.regularizer == Regularizer::A) {
    if (data.groups_s == nullptr || data.groups_i == nullptr) {
      throw DataError("regularizer A needs group assignments for both modalities");
    }
    if (data.groups_s->samples() != k || data.groups_i->samples() != l) {
      throw DimensionError("group assignments do not cover every sample");
    }
  }
}

}  // namespace

PacingState initial_pacing(Index sketch_count, Index image_count, const CurriculumConstraintSet& constraints,
                           double order_margin) {
  const Eigen::VectorXd vs = Eigen::VectorXd::Ones(sketch_count);
  const Eigen::VectorXd vi = Eigen::VectorXd::Ones(image_count);
  return PacingState(vs, vi, minimal_slacks(constraints.ordered(), vs, vi, order_margin));
}

TrainState initialize(const FeatureMatrix& fs, const FeatureMatrix& fi, const ModelConfig& cfg) {
  cfg.validate();
  if (fs.samples() == 0 || fi.samples() == 0) throw DataError("initialize: empty modality");
  const Index n = cfg.dict_size;
  Rng rng(cfg.rng_seed);
  std::vector<std::string> warnings;
  if (n > std::min(fs.samples(), fi.samples())) {
    warnings.push_back("dictionary size exceeds the smaller sample count");
  }

  Eigen::MatrixXd ds;
  Eigen::MatrixXd di;
  if (fs.dim() == fi.dim()) {
    Eigen::MatrixXd stacked(fs.dim(), fs.samples() + fi.samples());
    stacked << fs.values(), fi.values();
    ds = warm_up(stacked, initial_atoms(stacked, n, rng), cfg.alpha, cfg.warmup_iters);
    di = ds;
  } else {
    ds = warm_up(fs.values(), initial_atoms(fs.values(), n, rng), cfg.alpha, cfg.warmup_iters);
    di = warm_up(fi.values(), initial_atoms(fi.values(), n, rng), cfg.alpha, cfg.warmup_iters);
  }
  Eigen::MatrixXd cs = encode_all(ds, fs.values(), cfg.alpha);
  Eigen::MatrixXd ci = encode_all(di, fi.values(), cfg.alpha);

  TrainState st{Dictionary(Modality::sketch, std::move(ds)),
                Dictionary(Modality::image, std::move(di)),
                CodeMatrix::joint(cs, ci),
                PacingState::ones(fs.samples(), fi.samples(), 0),
                cfg.self_paced() ? cfg.gamma0 : 0.0,
                0,
                false,
                {},
                std::move(warnings),
                {}};
  return st;
}

ObjectiveTerms objective_terms(const TrainState& state, const TrainData& data, const ModelConfig& cfg,
                               double gamma) {
  return terms_for(state.ds.atoms(), state.di.atoms(), state.codes.values(), state.pacing.v_sketch(),
                   state.pacing.v_image(), state.pacing.slacks(), data, cfg, gamma);
}

double total_objective(const TrainState& state, const TrainData& data, const ModelConfig& cfg, double gamma) {
  return objective_terms(state, data, cfg, gamma).total();
}

TrainState train(const TrainData& data, const ModelConfig& cfg) {
  return train(initialize(data.fs, data.fi, cfg), data, cfg);
}

TrainState train(TrainState state, const TrainData& data, const ModelConfig& cfg) {
  cfg.validate();
  check_data(data, cfg);
  const Index k = data.fs.samples();
  const Index l = data.fi.samples();
  if (state.codes.samples() != k + l || state.ds.dim() != data.fs.dim() || state.di.dim() != data.fi.dim()) {
    throw DimensionError("train: state does not match the data");
  }
  const bool paced = cfg.self_paced();
  const auto ordered = data.constraints.ordered();

  if (paced) {
    const bool keep = state.pacing.v_sketch().size() == k && state.pacing.v_image().size() == l;
    const Eigen::VectorXd vs = keep ? state.pacing.v_sketch() : Eigen::VectorXd::Ones(k);
    const Eigen::VectorXd vi = keep ? state.pacing.v_image() : Eigen::VectorXd::Ones(l);
    state.pacing = PacingState(vs, vi, minimal_slacks(ordered, vs, vi, cfg.order_margin));
    if (state.gamma <= 0.0) state.gamma = cfg.gamma0;
  } else {
    state.pacing = PacingState::ones(k, l, static_cast<Index>(ordered.size()));
    state.gamma = 0.0;
  }

  const PacingParams base_params = PacingParams::from(cfg, 1.0);
  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    HistoryEntry e;
    e.iter = state.iteration + 1;
    e.gamma = state.gamma;
    try {
      const double gamma = state.gamma;
      e.objective_start = total_objective(state, data, cfg, gamma);
      e.after_pacing = e.objective_start;

      if (paced) {
        const auto [ls, li] = per_sample_losses(state.ds, state.di, state.codes, data.fs, data.fi);
        PacingParams params = base_params;
        params.gamma = gamma;
        const PacingQP qp = assemble_qp(ls, li, state.codes.values(), data.lap, data.groups_s, data.groups_i,
                                        data.constraints, params);
        const PacingSolution sol = solve_pacing(qp);
        e.pacing_converged = sol.converged;

        // The QP may only approximate the objective (paper-form R), so
        // accept the best point on the segment toward its solution. Every
        // point of the segment is feasible and the objective is quadratic
        // along it, so three evaluations pin it down.
        const Eigen::VectorXd vs0 = state.pacing.v_sketch();
        const Eigen::VectorXd vi0 = state.pacing.v_image();
        const Eigen::VectorXd xi0 = state.pacing.slacks();
        const auto& s1 = sol.state;
        auto at = [&](double t) {
          return terms_for(state.ds.atoms(), state.di.atoms(), state.codes.values(),
                           (1.0 - t) * vs0 + t * s1.v_sketch(), (1.0 - t) * vi0 + t * s1.v_image(),
                           (1.0 - t) * xi0 + t * s1.slacks(), data, cfg, gamma)
              .total();
        };
        const double f0 = e.objective_start;
        const double fh = at(0.5);
        const double f1 = at(1.0);
        double best_t = 0.0;
        double best_f = f0;
        if (f1 < best_f) best_t = 1.0, best_f = f1;
        if (fh < best_f) best_t = 0.5, best_f = fh;
        const double a = 2.0 * (f1 + f0 - 2.0 * fh);
        const double b = f1 - f0 - a;
        if (a > 0.0) {
          const double t = std::clamp(-b / (2.0 * a), 0.0, 1.0);
          const double ft = at(t);
          if (ft < best_f) best_t = t, best_f = ft;
        }
        e.pacing_step = best_t;
        if (best_t > 0.0) {
          const Eigen::VectorXd vs = ((1.0 - best_t) * vs0 + best_t * s1.v_sketch()).cwiseMax(0.0).cwiseMin(1.0);
          const Eigen::VectorXd vi = ((1.0 - best_t) * vi0 + best_t * s1.v_image()).cwiseMax(0.0).cwiseMin(1.0);
          const Eigen::VectorXd xi = minimal_slacks(ordered, vs, vi, cfg.order_margin);
          PacingState candidate(vs, vi, xi);
          const double fc = terms_for(state.ds.atoms(), state.di.atoms(), state.codes.values(), vs, vi, xi, data,
                                      cfg, gamma)
                                .total();
          if (fc <= f0) state.pacing = std::move(candidate);
        }
        e.after_pacing = total_objective(state, data, cfg, gamma);
      }

      const CodingProblem problem{state.ds, state.di, data.fs, data.fi, state.pacing, data.lap, cfg.alpha, cfg.beta};
      state.codes = update_codes(problem, state.codes, cfg.code_solver);
      e.after_codes = total_objective(state, data, cfg, gamma);

      state.ds = update_dictionary(data.fs, state.codes.sketch_codes(), state.pacing.v_sketch(), state.ds);
      state.di = update_dictionary(data.fi, state.codes.image_codes(), state.pacing.v_image(), state.di);
      e.terms = objective_terms(state, data, cfg, gamma);
      e.after_dictionary = e.terms.total();
    } catch (const NumericalError& err) {
      state.error = err.what();
      state.warnings.push_back(std::string("training stopped: ") + err.what());
      break;
    }

    e.rel_change = std::abs(e.objective_start - e.after_dictionary) / std::max(std::abs(e.after_dictionary), 1.0);
    e.min_v = state.pacing.min_v();
    e.max_slack = state.pacing.slacks().size() > 0 ? state.pacing.slacks().maxCoeff() : 0.0;
    state.history.push_back(e);
    ++state.iteration;

    const bool saturated = !paced || e.min_v >= cfg.pace_saturation;
    if (saturated && e.rel_change < cfg.rel_tol) {
      state.converged = true;
      break;
    }
    if (paced && !saturated) state.gamma = advance_pace(state.gamma, cfg.eta);
  }
  return state;
}

std::string encode_history(const std::vector<HistoryEntry>& history) {
  std::string out = "iter,gamma,objective,recon_s,recon_i,sparsity,laplacian,fsp,fpc\n";
  for (const auto& e : history) {
    const auto& t = e.terms;
    out += std::to_string(e.iter);
    for (double x : {e.gamma, t.total(), t.recon_sketch, t.recon_image, t.sparsity, t.laplacian, t.self_paced,
                     t.curriculum}) {
      out += ',';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

namespace {

std::string encode_blocks(const std::vector<HistoryEntry>& history) {
  std::string out = "iter,gamma,start,after_pacing,after_codes,after_dictionary,min_v,max_slack,pacing_step\n";
  for (const auto& e : history) {
    out += std::to_string(e.iter);
    for (double x : {e.gamma, e.objective_start, e.after_pacing, e.after_codes, e.after_dictionary, e.min_v,
                     e.max_slack, e.pacing_step}) {
      out += ',';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

void save_checkpoint(const TrainState& state, const ModelConfig& cfg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  save_matrix(state.ds.atoms(), dir / "D_sketch.cpm");
  save_matrix(state.di.atoms(), dir / "D_image.cpm");
  save_matrix(state.codes.sketch_codes(), dir / "C_sketch.cpm");
  save_matrix(state.codes.image_codes(), dir / "C_image.cpm");
  write_file_atomic(dir / "pacing.csv", encode_pacing(state.pacing));
  write_file_atomic(dir / "history.csv", encode_history(state.history));
  write_file_atomic(dir / "blocks.csv", encode_blocks(state.history));
  write_file_atomic(dir / "config.txt", encode_config(cfg));
}

}  // namespace cprl
