#include <benchmark/benchmark.h>

#include "cprl/curriculum.hpp"
#include "cprl/dictionary_update.hpp"
#include "cprl/pacing.hpp"
#include "cprl/retrieval.hpp"
#include "cprl/rng.hpp"
#include "cprl/sparse_coding.hpp"
#include "cprl/synthbench.hpp"
#include "cprl/trainer.hpp"

using namespace cprl;

namespace {

Eigen::MatrixXd gaussian(Index rows, Index cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

struct Setup {
  SynthData data;
  GraphLaplacian lap;
  CurriculumConstraintSet constraints;
  TrainState state;
  ModelConfig cfg;
};

Setup make_setup(Index n) {
  SynthSpec s;
  s.sketch_count = s.image_count = n;
  s.sketch_dim = s.image_dim = 20;
  s.true_atoms = 15;
  auto d = generate(s);
  auto lap = build_weights(d.train.fs, d.train.fi, d.train.groups_s, d.train.groups_i);
  auto cons = constraints_from_scores(d.train.easiness_s, 0.05, 0.3, 1);
  ModelConfig cfg;
  cfg.dict_size = 30;
  auto st = initialize(d.train.fs, d.train.fi, cfg);
  return Setup{std::move(d), std::move(lap), std::move(cons), std::move(st), cfg};
}

}  // namespace

static void BM_Lasso(benchmark::State& state) {
  Rng rng(1);
  const Index atoms = state.range(0);
  Eigen::MatrixXd d = gaussian(20, atoms, rng);
  d.colwise().normalize();
  const Eigen::VectorXd f = gaussian(20, 1, rng).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(lasso_encode(d, f, 0.1));
}
BENCHMARK(BM_Lasso)->Arg(10)->Arg(30)->Arg(100);

static void BM_UpdateCodes(benchmark::State& state) {
  const auto s = make_setup(state.range(0));
  const CodingProblem p{s.state.ds, s.state.di, s.data.train.fs, s.data.train.fi, s.state.pacing, s.lap,
                        s.cfg.alpha, s.cfg.beta};
  for (auto _ : state) benchmark::DoNotOptimize(update_codes(p, s.state.codes.values(), s.cfg.code_solver));
}
BENCHMARK(BM_UpdateCodes)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_SolvePacing(benchmark::State& state) {
  const auto s = make_setup(state.range(0));
  const auto [ls, li] = per_sample_losses(s.state.ds, s.state.di, s.state.codes, s.data.train.fs, s.data.train.fi);
  const auto qp = assemble_qp(ls, li, s.state.codes.values(), s.lap, &s.data.train.groups_s, &s.data.train.groups_i,
                              s.constraints, PacingParams::from(s.cfg, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_pacing(qp));
}
BENCHMARK(BM_SolvePacing)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_UpdateDictionary(benchmark::State& state) {
  const auto s = make_setup(state.range(0));
  const Eigen::VectorXd v = s.state.pacing.v_sketch();
  const Eigen::MatrixXd c = s.state.codes.sketch_codes();
  for (auto _ : state) {
    benchmark::DoNotOptimize(update_dictionary(s.data.train.fs.values(), c, v, s.state.ds.atoms()));
  }
}
BENCHMARK(BM_UpdateDictionary)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_Knn(benchmark::State& state) {
  Rng rng(2);
  const Eigen::MatrixXd gallery = gaussian(30, state.range(0), rng);
  const Eigen::VectorXd q = gaussian(30, 1, rng).col(0);
  for (auto _ : state) benchmark::DoNotOptimize(knn_retrieve(q, gallery, 10));
}
BENCHMARK(BM_Knn)->Arg(1000)->Arg(15000);

BENCHMARK_MAIN();
