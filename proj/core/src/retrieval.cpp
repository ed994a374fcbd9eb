#include "cprl/retrieval.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cprl/error.hpp"
#include "cprl/matrix_io.hpp"

namespace cprl {

Eigen::MatrixXd encode_columns(const Eigen::MatrixXd& d, const Eigen::MatrixXd& f, double alpha, LassoOptions opts) {
  if (d.rows() != f.rows()) throw DimensionError("encode: feature dimension differs from dictionary rows");
  const LassoEncoder enc(d, alpha, opts);
  Eigen::MatrixXd c(d.cols(), f.cols());
  for (Index j = 0; j < f.cols(); ++j) c.col(j) = enc.encode(f.col(j));
  return c;
}

CodeMatrix encode_gallery(const Dictionary& d, const FeatureMatrix& f, double alpha, LassoOptions opts) {
  return CodeMatrix(f.modality(), encode_columns(d.atoms(), f.values(), alpha, opts));
}

std::vector<Neighbor> knn_retrieve(const Eigen::VectorXd& query, const Eigen::MatrixXd& gallery, Index k) {
  if (gallery.cols() == 0) throw DataError("knn: empty gallery");
  if (query.size() != gallery.rows()) throw DimensionError("knn: query length differs from gallery rows");
  if (k < 1 || k > gallery.cols()) throw std::invalid_argument("knn: k must lie in [1, gallery size]");
  std::vector<Neighbor> all(static_cast<std::size_t>(gallery.cols()));
  for (Index j = 0; j < gallery.cols(); ++j) {
    all[static_cast<std::size_t>(j)] = {j, (gallery.col(j) - query).norm()};
  }
  auto closer = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
  };
  std::partial_sort(all.begin(), all.begin() + k, all.end(), closer);
  all.resize(static_cast<std::size_t>(k));
  return all;
}

std::vector<Neighbor> knn_retrieve(const Eigen::VectorXd& query, const CodeMatrix& gallery, Index k) {
  return knn_retrieve(query, gallery.values(), k);
}

double recognition_rate(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& gallery,
                        const std::vector<Index>& true_match) {
  if (queries.cols() == 0) throw DataError("recognition rate: no queries");
  if (static_cast<Index>(true_match.size()) != queries.cols()) {
    throw DataError("recognition rate: every query needs a ground-truth match");
  }
  Index hits = 0;
  for (Index q = 0; q < queries.cols(); ++q) {
    const Index truth = true_match[static_cast<std::size_t>(q)];
    if (truth < 0 || truth >= gallery.cols()) throw DataError("recognition rate: match outside the gallery");
    if (knn_retrieve(queries.col(q), gallery, 1).front().index == truth) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.cols());
}

double recognition_rate(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& gallery, const MatchList& matches) {
  std::vector<Index> truth(static_cast<std::size_t>(queries.cols()), -1);
  for (const auto& [q, g] : matches) {
    if (q < 0 || q >= queries.cols()) throw DataError("recognition rate: match for an unknown query");
    auto& slot = truth[static_cast<std::size_t>(q)];
    if (slot != -1 && slot != g) throw DataError("recognition rate: query with two matches");
    slot = g;
  }
  for (std::size_t q = 0; q < truth.size(); ++q) {
    if (truth[q] == -1) throw DataError("recognition rate: query " + std::to_string(q) + " has no match");
  }
  return recognition_rate(queries, gallery, truth);
}

double average_precision(const std::vector<Index>& ranking, const std::set<Index>& relevant) {
  if (relevant.empty()) throw DataError("average precision: empty relevant set");
  double sum = 0.0;
  Index hits = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (relevant.count(ranking[r]) != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

std::vector<PrPoint> precision_recall_curve(const std::vector<Index>& ranking, const std::set<Index>& relevant) {
  if (relevant.empty()) throw DataError("precision-recall: empty relevant set");
  std::vector<PrPoint> out;
  out.reserve(ranking.size());
  Index hits = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (relevant.count(ranking[r]) != 0) ++hits;
    out.push_back({static_cast<double>(hits) / static_cast<double>(relevant.size()),
                   static_cast<double>(hits) / static_cast<double>(r + 1)});
  }
  return out;
}

std::vector<PrPoint> interpolated_pr(const std::vector<PrPoint>& curve, int points) {
  if (points < 2) throw std::invalid_argument("interpolated PR needs at least two points");
  std::vector<PrPoint> out;
  for (int i = 0; i < points; ++i) {
    const double r = static_cast<double>(i) / (points - 1);
    double best = 0.0;
    for (const auto& p : curve) {
      if (p.recall >= r - 1e-12) best = std::max(best, p.precision);
    }
    out.push_back({r, best});
  }
  return out;
}

std::vector<PrPoint> macro_pr(const std::vector<std::vector<PrPoint>>& curves, int points) {
  if (curves.empty()) throw DataError("macro PR: no curves");
  std::vector<PrPoint> out = interpolated_pr(curves.front(), points);
  for (std::size_t c = 1; c < curves.size(); ++c) {
    const auto next = interpolated_pr(curves[c], points);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].precision += next[i].precision;
  }
  for (auto& p : out) p.precision /= static_cast<double>(curves.size());
  return out;
}

double mean_average_precision(const std::vector<double>& aps) {
  if (aps.empty()) throw DataError("mAP: no queries");
  return std::accumulate(aps.begin(), aps.end(), 0.0) / static_cast<double>(aps.size());
}

std::string encode_results(const std::vector<ResultRow>& rows) {
  std::string out = "query_id,rank,gallery_id,distance,relevant\n";
  for (const auto& r : rows) {
    out += std::to_string(r.query_id) + ',' + std::to_string(r.rank) + ',' + std::to_string(r.gallery_id) + ',' +
           format_double(r.distance) + ',' + (r.relevant ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<ResultRow> decode_results(std::string_view text) {
  std::vector<ResultRow> rows;
  auto lines = split_lines(text);
  if (!lines.empty() && lines.front() == "query_id,rank,gallery_id,distance,relevant") lines.erase(lines.begin());
  for (auto line : lines) {
    const auto fields = split_fields(line);
    if (fields.size() != 5) throw FormatError("results: expected 5 fields per line");
    ResultRow r{parse_index(fields[0]), parse_index(fields[1]), parse_index(fields[2]), parse_double(fields[3]),
                false};
    if (fields[4] == "1") {
      r.relevant = true;
    } else if (fields[4] != "0") {
      throw FormatError("results: relevant must be 0 or 1");
    }
    if (r.rank < 1) throw FormatError("results: ranks start at 1");
    rows.push_back(r);
  }
  return rows;
}

std::string encode_pr(const std::vector<PrPoint>& curve) {
  std::string out = "recall,precision\n";
  for (const auto& p : curve) out += format_double(p.recall) + ',' + format_double(p.precision) + '\n';
  return out;
}

}  // namespace cprl
