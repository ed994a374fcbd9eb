#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cprl/sparse_coding.hpp"
#include "cprl/text_files.hpp"
#include "cprl/types.hpp"

namespace cprl {

// Column j is the lasso code of feature column j; columns are independent.
CodeMatrix encode_gallery(const Dictionary& d, const FeatureMatrix& f, double alpha, LassoOptions opts = {});
Eigen::MatrixXd encode_columns(const Eigen::MatrixXd& d, const Eigen::MatrixXd& f, double alpha,
                               LassoOptions opts = {});

struct Neighbor {
  Index index;
  double distance;
};

// The k nearest gallery columns by Euclidean distance, ties to the lower
// index.
std::vector<Neighbor> knn_retrieve(const Eigen::VectorXd& query, const Eigen::MatrixXd& gallery, Index k);
std::vector<Neighbor> knn_retrieve(const Eigen::VectorXd& query, const CodeMatrix& gallery, Index k);

// Fraction of queries whose nearest gallery column is true_match[q].
double recognition_rate(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& gallery,
                        const std::vector<Index>& true_match);
// Match pairs are (query, gallery); every query needs exactly one.
double recognition_rate(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& gallery, const MatchList& matches);

// Mean over relevant items of (relevant in top r) / r at each relevant
// rank r. Relevant items missing from `ranking` contribute zero.
double average_precision(const std::vector<Index>& ranking, const std::set<Index>& relevant);

struct PrPoint {
  double recall;
  double precision;
};

// One point per rank.
std::vector<PrPoint> precision_recall_curve(const std::vector<Index>& ranking, const std::set<Index>& relevant);
// Maximum precision at recall >= r for r = 0, 1/(n-1), ..., 1.
std::vector<PrPoint> interpolated_pr(const std::vector<PrPoint>& curve, int points = 11);
// Pointwise mean of interpolated curves.
std::vector<PrPoint> macro_pr(const std::vector<std::vector<PrPoint>>& curves, int points = 11);

double mean_average_precision(const std::vector<double>& aps);

struct ResultRow {
  Index query_id;
  Index rank;  // 1-based
  Index gallery_id;
  double distance;
  bool relevant;
};

// `query_id,rank,gallery_id,distance,relevant` with a header line.
std::string encode_results(const std::vector<ResultRow>& rows);
std::vector<ResultRow> decode_results(std::string_view text);
std::string encode_pr(const std::vector<PrPoint>& curve);

}  // namespace cprl
