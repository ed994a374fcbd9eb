#include "cprl/synthbench.hpp"

#include <algorithm>
#include <cmath>

#include "cprl/error.hpp"
#include "cprl/matrix_io.hpp"
#include "cprl/rng.hpp"

namespace cprl {

void SynthSpec::validate() const {
  if (sketch_count < 1 || image_count < 1) throw DataError("synth: both modalities need samples");
  if (sketch_dim < 1 || image_dim < 1) throw DataError("synth: feature dimensions must be positive");
  if (true_atoms < 1) throw DataError("synth: true_atoms must be positive");
  if (classes < 1) throw DataError("synth: classes must be positive");
  if (!(noise_easy >= 0.0) || !(noise_hard >= noise_easy) || !std::isfinite(noise_hard)) {
    throw DataError("synth: need 0 <= noise_easy <= noise_hard");
  }
  if (!(hard_fraction >= 0.0 && hard_fraction <= 1.0)) throw DataError("synth: hard_fraction must lie in [0, 1]");
  if (test_pairs < 0) throw DataError("synth: test_pairs must be >= 0");
}

namespace {

Eigen::MatrixXd unit_columns(Index rows, Index cols, Rng& rng) {
  Eigen::MatrixXd d(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    do {
      for (Index r = 0; r < rows; ++r) d(r, j) = rng.normal();
    } while (d.col(j).norm() < 1e-12);
    d.col(j).normalize();
  }
  return d;
}

struct Planted {
  const Eigen::MatrixXd& ds;
  const Eigen::MatrixXd& di;
  const std::vector<std::vector<Index>>& supports;
};

Eigen::VectorXd draw_code(const std::vector<Index>& support, Index n, Rng& rng) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (Index a : support) {
    const double mag = rng.uniform(0.5, 1.5);
    c(a) = rng.bernoulli(0.5) ? mag : -mag;
  }
  return c;
}

std::vector<bool> draw_hard(Index count, double fraction, Rng& rng) {
  const auto n_hard = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(count)));
  std::vector<bool> hard(static_cast<std::size_t>(count), false);
  for (auto i : rng.sample_without_replacement(static_cast<std::uint64_t>(count), n_hard)) hard[i] = true;
  return hard;
}

SynthSplit draw_split(const SynthSpec& spec, const Planted& planted, Index k, Index l, Rng& rng) {
  const Index n = spec.true_atoms;
  const Index pairs = std::min(k, l);
  const Index total = std::max(k, l);
  Eigen::MatrixXd cs(n, k);
  Eigen::MatrixXd ci(n, l);
  for (Index j = 0; j < total; ++j) {
    const auto& support = planted.supports[static_cast<std::size_t>(j % spec.classes)];
    if (j < pairs) {
      const Eigen::VectorXd c = draw_code(support, n, rng);
      cs.col(j) = c;
      ci.col(j) = c;
    } else if (j < k) {
      cs.col(j) = draw_code(support, n, rng);
    } else {
      ci.col(j) = draw_code(support, n, rng);
    }
  }
  const auto hard_s = draw_hard(k, spec.hard_fraction, rng);
  const auto hard_i = draw_hard(l, spec.hard_fraction, rng);

  auto features = [&](const Eigen::MatrixXd& d, const Eigen::MatrixXd& c, const std::vector<bool>& hard,
                      std::vector<double>& easiness) {
    Eigen::MatrixXd f = d * c;
    easiness.resize(static_cast<std::size_t>(c.cols()));
    for (Index j = 0; j < c.cols(); ++j) {
      const double sigma = hard[static_cast<std::size_t>(j)] ? spec.noise_hard : spec.noise_easy;
      for (Index r = 0; r < f.rows(); ++r) f(r, j) += sigma * rng.normal();
      easiness[static_cast<std::size_t>(j)] = -sigma;
    }
    return f;
  };
  std::vector<double> es;
  std::vector<double> ei;
  Eigen::MatrixXd fs = features(planted.ds, cs, hard_s, es);
  Eigen::MatrixXd fi = features(planted.di, ci, hard_i, ei);

  auto groups = [&](Index count) {
    std::vector<std::int64_t> g(static_cast<std::size_t>(count));
    for (Index j = 0; j < count; ++j) g[static_cast<std::size_t>(j)] = j % spec.classes;
    return g;
  };
  MatchList matches;
  for (Index j = 0; j < pairs; ++j) matches.emplace_back(j, j);

  return SynthSplit{FeatureMatrix(Modality::sketch, std::move(fs)),
                    FeatureMatrix(Modality::image, std::move(fi)),
                    GroupAssignment(Modality::sketch, groups(k)),
                    GroupAssignment(Modality::image, groups(l)),
                    std::move(matches),
                    EasinessScores(Modality::sketch, std::move(es)),
                    EasinessScores(Modality::image, std::move(ei)),
                    std::move(cs),
                    std::move(ci),
                    hard_s,
                    hard_i};
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  Eigen::MatrixXd ds = unit_columns(spec.sketch_dim, spec.true_atoms, rng);
  Eigen::MatrixXd di = unit_columns(spec.image_dim, spec.true_atoms, rng);
  const Index s = std::max<Index>(1, spec.true_atoms / 5);
  std::vector<std::vector<Index>> supports;
  for (Index c = 0; c < spec.classes; ++c) {
    std::vector<Index> sup;
    for (auto a : rng.sample_without_replacement(static_cast<std::uint64_t>(spec.true_atoms),
                                                 static_cast<std::uint64_t>(s))) {
      sup.push_back(static_cast<Index>(a));
    }
    std::sort(sup.begin(), sup.end());
    supports.push_back(std::move(sup));
  }
  const Planted planted{ds, di, supports};
  SynthSplit train = draw_split(spec, planted, spec.sketch_count, spec.image_count, rng);
  std::optional<SynthSplit> test;
  if (spec.test_pairs > 0) test = draw_split(spec, planted, spec.test_pairs, spec.test_pairs, rng);
  return SynthData{std::move(ds), std::move(di), std::move(train), std::move(test)};
}

namespace {

void write_split(const SynthSplit& split, const std::filesystem::path& dir, const std::string& suffix) {
  save_matrix(split.fs.values(), dir / ("fs" + suffix + ".cpm"));
  save_matrix(split.fi.values(), dir / ("fi" + suffix + ".cpm"));
  write_file_atomic(dir / ("groups" + suffix + ".csv"), encode_groups({split.groups_s, split.groups_i}));
  write_file_atomic(dir / ("matches" + suffix + ".csv"), encode_matches(split.matches));
  write_file_atomic(dir / ("scores_sketch" + suffix + ".csv"), encode_scores(split.easiness_s));
  write_file_atomic(dir / ("scores_image" + suffix + ".csv"), encode_scores(split.easiness_i));
}

}  // namespace

void write_synth(const SynthData& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_matrix(data.ds_true, dir / "D_sketch_true.cpm");
  save_matrix(data.di_true, dir / "D_image_true.cpm");
  write_split(data.train, dir, "");
  if (data.test) write_split(*data.test, dir, "_test");
}

}  // namespace cprl
