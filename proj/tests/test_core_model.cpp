#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "cprl/config.hpp"
#include "cprl/error.hpp"
#include "cprl/matrix_io.hpp"
#include "cprl/rng.hpp"
#include "cprl/text_files.hpp"
#include "cprl/types.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cprl;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "cprl_core_model_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(MatrixIo, IdentityRoundTripsThroughBothFormats) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  save_matrix(eye, scratch("eye.cpm"));
  save_matrix(eye, scratch("eye.csv"));
  EXPECT_EQ(load_matrix(scratch("eye.cpm")), eye);
  EXPECT_EQ(load_matrix(scratch("eye.csv")), eye);
}

TEST(MatrixIo, ParsesCsvText) {
  const auto m = decode_csv_matrix("1.5,2.0\n3.0,4.0");
  Eigen::MatrixXd want(2, 2);
  want << 1.5, 2.0, 3.0, 4.0;
  EXPECT_EQ(m, want);
}

TEST(MatrixIo, RejectsWrongMagic) {
  std::string bytes = encode_cpm1(Eigen::MatrixXd::Zero(1, 1));
  bytes[0] = 'X';
  EXPECT_THROW(decode_cpm1(bytes), FormatError);
}

TEST(MatrixIo, OneByOneZeroLayout) {
  const std::string bytes = encode_cpm1(Eigen::MatrixXd::Zero(1, 1));
  ASSERT_EQ(bytes.size(), 4u + 4u + 4u + 8u);
  EXPECT_EQ(bytes.substr(0, 4), "CPM1");
  EXPECT_EQ(bytes.substr(4, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(8, 4), std::string("\x01\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(12), std::string(8, '\0'));
}

TEST(MatrixIo, RowMajorLittleEndian) {
  Eigen::MatrixXd m(1, 2);
  m << 1.0, -2.0;
  const std::string bytes = encode_cpm1(m);
  // 1.0 = 0x3FF0000000000000, stored low byte first.
  EXPECT_EQ(static_cast<unsigned char>(bytes[12 + 7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12 + 6]), 0xF0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[20 + 7]), 0xC0);
}

TEST(MatrixIo, RandomRoundTripIsBitExact) {
  Rng rng(7);
  const auto m = oracle::random_matrix(7, 5, rng);
  save_matrix(m, scratch("r.cpm"));
  save_matrix(m, scratch("r.csv"));
  EXPECT_EQ(load_matrix(scratch("r.cpm")), m);
  EXPECT_EQ(load_matrix(scratch("r.csv")), m);
}

TEST(MatrixIo, SaveIntoMissingDirectoryIsIoError) {
  EXPECT_THROW(save_matrix(Eigen::MatrixXd::Zero(1, 1), "/nonexistent-dir/x/y.cpm"), IoError);
}

TEST(MatrixIo, RejectsNonFiniteAndTruncated) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(decode_cpm1(encode_cpm1(m)), DataError);
  std::string bytes = encode_cpm1(Eigen::MatrixXd::Zero(2, 2));
  bytes.pop_back();
  EXPECT_THROW(decode_cpm1(bytes), FormatError);
  EXPECT_THROW(decode_csv_matrix("1,2\n3"), FormatError);
  EXPECT_THROW(decode_csv_matrix("1,nan"), DataError);
}

TEST(MatrixIo, ShortestDecimalRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(parse_double(format_double(x)), x);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Types, DictionaryRejectsLongColumns) {
  Eigen::MatrixXd d(2, 1);
  d << 1.0, 1.0;
  EXPECT_THROW(Dictionary(Modality::sketch, d), DataError);
  d.col(0).normalize();
  EXPECT_NO_THROW(Dictionary(Modality::sketch, d));
}

TEST(Types, JointCodesSplit) {
  Eigen::MatrixXd c(2, 3);
  c << 1, 2, 3, 4, 5, 6;
  const auto cj = CodeMatrix::joint(c, 1);
  EXPECT_TRUE(cj.is_joint());
  EXPECT_EQ(cj.sketch_codes(), c.leftCols(1));
  EXPECT_EQ(cj.image_codes(), c.rightCols(2));
}

TEST(Types, ConstraintSetDropsDuplicatesAndOrdersSketchFirst) {
  CurriculumConstraintSet s;
  EXPECT_TRUE(s.add({Modality::image, 0, 1}));
  EXPECT_TRUE(s.add({Modality::sketch, 2, 3}));
  EXPECT_FALSE(s.add({Modality::sketch, 2, 3}));
  EXPECT_FALSE(s.add({Modality::sketch, 4, 4}));
  const auto o = s.ordered();
  ASSERT_EQ(o.size(), 2u);
  EXPECT_EQ(o[0].modality, Modality::sketch);
  EXPECT_THROW(s.validate(3, 5), DataError);
  EXPECT_NO_THROW(s.validate(4, 2));
}

TEST(Types, PacingStateChecksRanges) {
  EXPECT_THROW(PacingState(Eigen::VectorXd::Constant(1, 1.5), Eigen::VectorXd(), Eigen::VectorXd()), DataError);
  EXPECT_THROW(PacingState(Eigen::VectorXd::Ones(1), Eigen::VectorXd(), Eigen::VectorXd::Constant(1, -1)),
               DataError);
}

TEST(Types, GroupSizes) {
  GroupAssignment g(Modality::sketch, {3, 3, 1, 3});
  EXPECT_EQ(g.size_of_group_of(0), 3);
  EXPECT_EQ(g.size_of_group_of(2), 1);
}

TEST(TextFiles, RoundTrips) {
  CurriculumConstraintSet s;
  s.add({Modality::sketch, 1, 0});
  s.add({Modality::image, 2, 5});
  EXPECT_EQ(decode_constraints(encode_constraints(s)).constraints(), s.constraints());

  const GroupsFile g = decode_groups(encode_groups({GroupAssignment(Modality::sketch, {0, 1}),
                                                    GroupAssignment(Modality::image, {1, 1, 0})}));
  EXPECT_EQ(g.get(Modality::image).group_of(), (std::vector<std::int64_t>{1, 1, 0}));

  const MatchList m{{0, 2}, {1, 1}};
  EXPECT_EQ(decode_matches(encode_matches(m)), m);

  const EasinessScores sc(Modality::sketch, {0.25, -1.0});
  EXPECT_EQ(decode_scores(encode_scores(sc), Modality::sketch).scores, sc.scores);
}

TEST(TextFiles, AcceptsHeaderAndRejectsGarbage) {
  EXPECT_EQ(decode_constraints("modality,hard_index,easy_index\nS,1,0\n").size(), 1u);
  EXPECT_THROW(decode_constraints("S,1\n"), FormatError);
  EXPECT_THROW(decode_constraints("X,1,0\n"), FormatError);
  EXPECT_THROW(decode_scores("0,abc\n", Modality::sketch), FormatError);
}

TEST(Config, ParsesKeysAndRejectsUnknown) {
  const auto cfg = parse_config("# comment\nalpha = 2\nregularizer = A\nlaplacian_form = exact\n");
  EXPECT_EQ(cfg.alpha, 2.0);
  EXPECT_EQ(cfg.regularizer, Regularizer::A);
  EXPECT_EQ(cfg.laplacian_form, LaplacianForm::exact);
  EXPECT_THROW(parse_config("alpah = 2\n"), FormatError);
  EXPECT_THROW(parse_config("alpha\n"), FormatError);
}

TEST(Config, EncodeParseRoundTrip) {
  ModelConfig c;
  c.alpha = 0.37;
  c.mu = 1000;
  c.literal_sp_b = true;
  c.code_solver.step_rule = StepRule::fixed;
  const auto back = parse_config(encode_config(c));
  EXPECT_EQ(encode_config(back), encode_config(c));
}

TEST(Config, DefaultsAndPresets) {
  const ModelConfig d;
  EXPECT_EQ(d.gamma0, 1.0);
  EXPECT_EQ(d.eta, 1.3);
  auto c = apply_preset(d, "cufs");
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.beta, 5.0);
  EXPECT_EQ(c.dict_size, 50);
  c = apply_preset(d, "flickr15k");
  EXPECT_EQ(c.alpha, 2.0);
  EXPECT_EQ(c.beta, 25.0);
  EXPECT_EQ(c.gamma0, 0.5);
  EXPECT_EQ(c.dict_size, 1000);
  c = apply_preset(d, "queenmary");
  EXPECT_EQ(c.alpha, 6.0);
  EXPECT_EQ(c.beta, 8.0);
  EXPECT_EQ(c.gamma0, 1.0);
  EXPECT_EQ(c.dict_size, 1500);
  EXPECT_THROW(apply_preset(d, "nope"), std::invalid_argument);
}

TEST(Rng, DeterministicStreams) {
  Rng a(5);
  Rng b(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.normal(), b.normal());
  }
  Rng c(9);
  const auto s = c.sample_without_replacement(10, 10);
  std::vector<std::uint64_t> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::uint64_t i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
}
