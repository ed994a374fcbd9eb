#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <csignal>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "annotation_server.hpp"
#include "cprl/config.hpp"
#include "cprl/curriculum.hpp"
#include "cprl/error.hpp"
#include "cprl/graph_laplacian.hpp"
#include "cprl/matrix_io.hpp"
#include "cprl/retrieval.hpp"
#include "cprl/sketch_raster.hpp"
#include "cprl/synthbench.hpp"
#include "cprl/text_files.hpp"
#include "cprl/trainer.hpp"

namespace cprl::cli {

namespace fs = std::filesystem;

namespace {

Modality modality_flag(const std::string& s) {
  try {
    return parse_modality(s);
  } catch (const std::exception&) {
    throw UsageError("modality must be S or I, got '" + s + "'");
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::set<std::string>& extensions) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (extensions.count(ext) != 0) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// ---- gen-synth

struct GenSynthArgs {
  std::string out;
  SynthSpec spec;
};

void add_gen_synth(CLI::App& app, GenSynthArgs& a) {
  app.add_option("--out", a.out, "Output directory")->required();
  app.add_option("--sketches", a.spec.sketch_count, "Number of training sketches")->capture_default_str();
  app.add_option("--images", a.spec.image_count, "Number of training images")->capture_default_str();
  app.add_option("--sketch-dim", a.spec.sketch_dim, "Sketch feature dimension")->capture_default_str();
  app.add_option("--image-dim", a.spec.image_dim, "Image feature dimension")->capture_default_str();
  app.add_option("--true-atoms", a.spec.true_atoms, "Atoms in the planted dictionaries")->capture_default_str();
  app.add_option("--classes", a.spec.classes, "Number of classes")->capture_default_str();
  app.add_option("--noise-easy", a.spec.noise_easy, "Noise level of easy samples")->capture_default_str();
  app.add_option("--noise-hard", a.spec.noise_hard, "Noise level of hard samples")->capture_default_str();
  app.add_option("--hard-fraction", a.spec.hard_fraction, "Fraction of hard samples per modality")
      ->capture_default_str();
  app.add_option("--test-pairs", a.spec.test_pairs, "Held-out matched pairs")->capture_default_str();
  app.add_option("--seed", a.spec.rng_seed, "Random seed")->capture_default_str();
}

int gen_synth(const GenSynthArgs& a, std::ostream& out) {
  const auto data = generate(a.spec);
  write_synth(data, a.out);
  out << "wrote synthetic data to " << a.out << '\n';
  return 0;
}

// ---- build-laplacian

struct LaplacianArgs {
  std::string sketch_features;
  std::string image_features;
  std::string groups;
  double sigma = 1.0;
  std::string out;
};

void add_build_laplacian(CLI::App& app, LaplacianArgs& a) {
  app.add_option("--sketch-features", a.sketch_features, "Sketch feature matrix (columns are samples)")
      ->required();
  app.add_option("--image-features", a.image_features, "Image feature matrix")->required();
  app.add_option("--groups", a.groups, "Groups CSV covering both modalities")->required();
  app.add_option("--sigma", a.sigma, "Gaussian kernel width")->capture_default_str();
  app.add_option("--out", a.out, "Output Laplacian matrix (.csv for text, else binary)")->required();
}

int build_laplacian(const LaplacianArgs& a, std::ostream& out) {
  if (!(a.sigma > 0.0)) throw UsageError("--sigma must be > 0");
  const auto fs_ = load_features(a.sketch_features, Modality::sketch);
  const auto fi = load_features(a.image_features, Modality::image);
  const auto groups = load_groups(a.groups);
  const auto lap = build_weights(fs_, fi, groups.get(Modality::sketch), groups.get(Modality::image), a.sigma);
  save_matrix(lap.laplacian(), a.out);
  out << "wrote " << lap.nodes() << "x" << lap.nodes() << " Laplacian to " << a.out << '\n';
  return 0;
}

// ---- build-curriculum

struct CurriculumArgs {
  std::string pgm_dir;
  std::string sketch_scores;
  std::string image_scores;
  std::vector<std::string> annotations;
  std::optional<double> delta;
  double rho = 1.0;
  std::uint64_t seed = 1;
  std::string scores_out;
  std::string out;
};

void add_build_curriculum(CLI::App& app, CurriculumArgs& a) {
  app.add_option("--pgm-dir", a.pgm_dir, "Directory of sketch rasters (.pgm); edgeness gives sketch scores");
  app.add_option("--sketch-scores", a.sketch_scores, "Sketch easiness scores CSV (index,score)");
  app.add_option("--image-scores", a.image_scores, "Image easiness scores CSV (index,score)");
  app.add_option("--annotations", a.annotations, "Constraint CSVs exported by annotate-serve (merged)");
  app.add_option("--delta", a.delta, "Minimum score gap; default 0.1 of the score range per modality");
  app.add_option("--rho", a.rho, "Fraction of candidate pairs kept")->capture_default_str();
  app.add_option("--seed", a.seed, "Random seed for window sampling and pair subsampling")->capture_default_str();
  app.add_option("--scores-out", a.scores_out, "Also write the computed edgeness scores here");
  app.add_option("--out", a.out, "Output constraints CSV")->required();
}

int build_curriculum(const CurriculumArgs& a, std::ostream& out) {
  if (a.pgm_dir.empty() && a.sketch_scores.empty() && a.image_scores.empty() && a.annotations.empty()) {
    throw UsageError("need at least one of --pgm-dir, --sketch-scores, --image-scores, --annotations");
  }
  if (!a.pgm_dir.empty() && !a.sketch_scores.empty()) {
    throw UsageError("--pgm-dir and --sketch-scores both give sketch scores; pass one");
  }
  if (!(a.rho >= 0.0 && a.rho <= 1.0)) throw UsageError("--rho must lie in [0, 1]");
  if (a.delta && !(*a.delta >= 0.0)) throw UsageError("--delta must be >= 0");
  if (!a.scores_out.empty() && a.pgm_dir.empty()) throw UsageError("--scores-out needs --pgm-dir");

  CurriculumConstraintSet set;
  auto from_scores = [&](const EasinessScores& scores, Modality m) {
    const double delta = a.delta ? *a.delta : default_delta(scores);
    const auto part = constraints_from_scores(scores, delta, a.rho, a.seed);
    set.merge(part);
    if (m == Modality::sketch) {
      set.delta_sketch = delta;
      set.rho_sketch = a.rho;
    } else {
      set.delta_image = delta;
      set.rho_image = a.rho;
    }
  };
  if (!a.pgm_dir.empty()) {
    const auto files = sorted_files(a.pgm_dir, {".pgm"});
    if (files.empty()) throw DataError("no .pgm files in " + a.pgm_dir);
    std::vector<double> values;
    for (const auto& f : files) values.push_back(edgeness_score(load_pgm(f), a.seed));
    const EasinessScores scores(Modality::sketch, std::move(values));
    if (!a.scores_out.empty()) write_file_atomic(a.scores_out, encode_scores(scores));
    from_scores(scores, Modality::sketch);
  }
  if (!a.sketch_scores.empty()) from_scores(load_scores(a.sketch_scores, Modality::sketch), Modality::sketch);
  if (!a.image_scores.empty()) from_scores(load_scores(a.image_scores, Modality::image), Modality::image);
  for (const auto& path : a.annotations) set.merge(load_constraints(path));

  write_file_atomic(a.out, encode_constraints(set));
  out << "wrote " << set.size() << " constraints (" << set.count(Modality::sketch) << " sketch, "
      << set.count(Modality::image) << " image) to " << a.out << '\n';
  return 0;
}

// ---- train

struct TrainArgs {
  std::string sketch_features;
  std::string image_features;
  std::string laplacian;
  std::string groups;
  std::string constraints;
  std::string config;
  std::string preset;
  double sigma = 1.0;
  std::string out;

  double alpha = 0, beta = 0, gamma0 = 0, eta = 0, mu = 0, rel_tol = 0, order_margin = 0;
  int dict_size = 0, max_iters = 0;
  std::uint64_t seed = 0;
  std::string regularizer, laplacian_form;
  bool literal_sp_b = false;
  bool ablation = false;
  CLI::App* app = nullptr;
};

void add_train(CLI::App& app, TrainArgs& a) {
  a.app = &app;
  app.add_option("--sketch-features", a.sketch_features, "Sketch feature matrix")->required();
  app.add_option("--image-features", a.image_features, "Image feature matrix")->required();
  app.add_option("--laplacian", a.laplacian, "Joint Laplacian from build-laplacian");
  app.add_option("--groups", a.groups, "Groups CSV; builds the Laplacian when --laplacian is absent and is "
                                       "required by regularizer A");
  app.add_option("--sigma", a.sigma, "Kernel width when building the Laplacian here")->capture_default_str();
  app.add_option("--constraints", a.constraints, "Curriculum constraints CSV");
  app.add_option("--config", a.config, "Config file of key = value lines");
  app.add_option("--preset", a.preset, "Hyperparameter bundle")->check(CLI::IsMember({"cufs", "flickr15k", "queenmary"}));
  app.add_option("--alpha", a.alpha, "Sparsity weight");
  app.add_option("--beta", a.beta, "Laplacian weight");
  app.add_option("--gamma0", a.gamma0, "Initial pace; 0 pins every weight to 1");
  app.add_option("--eta", a.eta, "Pace growth factor (> 1)");
  app.add_option("--mu", a.mu, "Curriculum slack weight");
  app.add_option("--dict-size", a.dict_size, "Atoms per dictionary");
  app.add_option("--regularizer", a.regularizer, "Self-paced regularizer")->check(CLI::IsMember({"A", "B", "a", "b"}));
  app.add_option("--laplacian-form", a.laplacian_form, "Laplacian term in the pacing QP")
      ->check(CLI::IsMember({"paper", "exact"}));
  app.add_option("--max-iters", a.max_iters, "Maximum outer iterations");
  app.add_option("--rel-tol", a.rel_tol, "Relative objective change that ends training");
  app.add_option("--order-margin", a.order_margin, "Margin of the curriculum ordering rows");
  app.add_option("--seed", a.seed, "Random seed for initialization");
  app.add_flag("--literal-sp-b", a.literal_sp_b, "Use regularizer B with the sign as printed");
  app.add_flag("--ablation", a.ablation, "Shorthand for --gamma0 0 --mu 0");
  app.add_option("--out", a.out, "Checkpoint directory")->required();
}

ModelConfig train_config(const TrainArgs& a) {
  auto given = [&](const char* name) { return a.app->count(name) > 0; };
  ModelConfig cfg;
  try {
    if (!a.preset.empty()) cfg = apply_preset(cfg, a.preset);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!a.config.empty()) cfg = load_config(a.config, cfg);
  if (given("--alpha")) cfg.alpha = a.alpha;
  if (given("--beta")) cfg.beta = a.beta;
  if (given("--gamma0")) cfg.gamma0 = a.gamma0;
  if (given("--eta")) cfg.eta = a.eta;
  if (given("--mu")) cfg.mu = a.mu;
  if (given("--dict-size")) cfg.dict_size = a.dict_size;
  if (given("--regularizer")) cfg.regularizer = parse_regularizer(a.regularizer);
  if (given("--laplacian-form")) cfg.laplacian_form = parse_laplacian_form(a.laplacian_form);
  if (given("--max-iters")) cfg.max_outer_iters = a.max_iters;
  if (given("--rel-tol")) cfg.rel_tol = a.rel_tol;
  if (given("--order-margin")) cfg.order_margin = a.order_margin;
  if (given("--seed")) cfg.rng_seed = a.seed;
  if (a.literal_sp_b) cfg.literal_sp_b = true;
  if (a.ablation) {
    cfg.gamma0 = 0.0;
    cfg.mu = 0.0;
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

int train_cmd(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const ModelConfig cfg = train_config(a);
  if (a.laplacian.empty() && a.groups.empty()) throw UsageError("need --laplacian or --groups");
  const auto fs_ = load_features(a.sketch_features, Modality::sketch);
  const auto fi = load_features(a.image_features, Modality::image);
  std::optional<GroupsFile> groups;
  if (!a.groups.empty()) groups = load_groups(a.groups);
  const GraphLaplacian lap =
      a.laplacian.empty()
          ? build_weights(fs_, fi, groups->get(Modality::sketch), groups->get(Modality::image), a.sigma)
          : GraphLaplacian::from_laplacian(load_matrix(a.laplacian), fs_.samples());
  const CurriculumConstraintSet constraints =
      a.constraints.empty() ? CurriculumConstraintSet{} : load_constraints(a.constraints);
  const GroupAssignment* gs = groups && groups->sketch ? &*groups->sketch : nullptr;
  const GroupAssignment* gi = groups && groups->image ? &*groups->image : nullptr;

  const TrainData data{fs_, fi, lap, constraints, gs, gi};
  const TrainState state = train(data, cfg);
  for (const auto& w : state.warnings) err << "warning: " << w << '\n';
  save_checkpoint(state, cfg, a.out);
  if (!state.error.empty()) throw NumericalError(state.error);
  const double final_obj = state.history.empty() ? 0.0 : state.history.back().after_dictionary;
  out << "iterations " << state.iteration << (state.converged ? " (converged)" : " (iteration limit)")
      << ", objective " << format_double(final_obj) << ", checkpoint " << a.out << '\n';
  return 0;
}

// ---- encode

struct EncodeArgs {
  std::string checkpoint;
  std::string dictionary;
  std::string modality = "S";
  std::optional<double> alpha;
  std::string features;
  std::string out;
};

void add_encode(CLI::App& app, EncodeArgs& a) {
  app.add_option("--checkpoint", a.checkpoint, "Checkpoint directory from train");
  app.add_option("--dictionary", a.dictionary, "Dictionary matrix (instead of --checkpoint)");
  app.add_option("--modality", a.modality, "S or I; picks the checkpoint dictionary")->capture_default_str();
  app.add_option("--alpha", a.alpha, "Sparsity weight; defaults to the checkpoint config");
  app.add_option("--features", a.features, "Feature matrix to encode")->required();
  app.add_option("--out", a.out, "Output code matrix")->required();
}

int encode_cmd(const EncodeArgs& a, std::ostream& out) {
  if (a.checkpoint.empty() == a.dictionary.empty()) throw UsageError("pass exactly one of --checkpoint, --dictionary");
  const Modality m = modality_flag(a.modality);
  fs::path dict_path = a.dictionary;
  double alpha = 0.0;
  if (!a.checkpoint.empty()) {
    dict_path = fs::path(a.checkpoint) / (m == Modality::sketch ? "D_sketch.cpm" : "D_image.cpm");
    alpha = a.alpha ? *a.alpha : load_config(fs::path(a.checkpoint) / "config.txt").alpha;
  } else {
    if (!a.alpha) throw UsageError("--dictionary needs --alpha");
    alpha = *a.alpha;
  }
  if (!(alpha >= 0.0)) throw UsageError("--alpha must be >= 0");
  const auto d = load_dictionary(dict_path, m);
  const auto f = load_features(a.features, m);
  const auto codes = encode_gallery(d, f, alpha);
  save_matrix(codes.values(), a.out);
  out << "encoded " << codes.samples() << " samples with " << codes.atoms() << " atoms to " << a.out << '\n';
  return 0;
}

// ---- retrieve

struct RetrieveArgs {
  std::string queries;
  std::string gallery;
  std::optional<long> k;
  std::string groups;
  std::string matches;
  std::string out;
};

void add_retrieve(CLI::App& app, RetrieveArgs& a) {
  app.add_option("--queries", a.queries, "Query code matrix (sketches)")->required();
  app.add_option("--gallery", a.gallery, "Gallery code matrix (images)")->required();
  app.add_option("--k", a.k, "Results per query; default the whole gallery");
  app.add_option("--groups", a.groups, "Groups CSV: relevant means same class");
  app.add_option("--matches", a.matches, "Matches CSV: relevant means the matched image");
  app.add_option("--out", a.out, "Output results CSV")->required();
}

int retrieve_cmd(const RetrieveArgs& a, std::ostream& out) {
  if (a.groups.empty() == a.matches.empty()) throw UsageError("pass exactly one of --groups, --matches");
  const Eigen::MatrixXd q = load_matrix(a.queries);
  const Eigen::MatrixXd g = load_matrix(a.gallery);
  if (q.rows() != g.rows()) throw DimensionError("queries and gallery have different code lengths");
  if (g.cols() == 0) throw DataError("empty gallery");
  const Index k = a.k ? static_cast<Index>(*a.k) : g.cols();
  if (k < 1 || k > g.cols()) throw UsageError("--k must lie in [1, gallery size]");

  std::function<bool(Index, Index)> relevant;
  std::optional<GroupsFile> groups;
  std::set<std::pair<Index, Index>> match_set;
  if (!a.groups.empty()) {
    groups = load_groups(a.groups);
    const auto& gs = groups->get(Modality::sketch);
    const auto& gi = groups->get(Modality::image);
    if (gs.samples() != q.cols() || gi.samples() != g.cols()) {
      throw DimensionError("groups do not cover the queries and gallery");
    }
    relevant = [&gs, &gi](Index qi, Index gj) { return gs.group(qi) == gi.group(gj); };
  } else {
    for (const auto& m : load_matches(a.matches)) match_set.insert(m);
    relevant = [&match_set](Index qi, Index gj) { return match_set.count({qi, gj}) != 0; };
  }

  std::vector<ResultRow> rows;
  rows.reserve(static_cast<std::size_t>(q.cols() * k));
  for (Index qi = 0; qi < q.cols(); ++qi) {
    const auto nn = knn_retrieve(q.col(qi), g, k);
    for (std::size_t r = 0; r < nn.size(); ++r) {
      rows.push_back({qi, static_cast<Index>(r + 1), nn[r].index, nn[r].distance, relevant(qi, nn[r].index)});
    }
  }
  write_file_atomic(a.out, encode_results(rows));
  out << "wrote " << q.cols() << " rankings of " << k << " to " << a.out << '\n';
  return 0;
}

// ---- evaluate

struct EvaluateArgs {
  std::string results;
  std::string groups;
  std::string matches;
  std::string out;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  app.add_option("--results", a.results, "Results CSV from retrieve")->required();
  app.add_option("--groups", a.groups, "Groups CSV; gives relevant counts per query and per-class AP");
  app.add_option("--matches", a.matches, "Matches CSV; enables the recognition rate");
  app.add_option("--out", a.out, "Report directory (metrics.json, pr_macro.csv, pr/)")->required();
}

int evaluate_cmd(const EvaluateArgs& a, std::ostream& out) {
  const auto rows = decode_results(read_file(a.results));
  if (rows.empty()) throw DataError("results file has no rows");

  struct Query {
    std::vector<std::pair<Index, Index>> ranked;  // (rank, gallery id)
    std::set<Index> relevant_seen;
  };
  std::map<Index, Query> queries;
  for (const auto& r : rows) {
    auto& qr = queries[r.query_id];
    qr.ranked.emplace_back(r.rank, r.gallery_id);
    if (r.relevant) qr.relevant_seen.insert(r.gallery_id);
  }

  std::optional<GroupsFile> groups;
  std::map<std::int64_t, Index> class_count;
  if (!a.groups.empty()) {
    groups = load_groups(a.groups);
    for (auto g : groups->get(Modality::image).group_of()) ++class_count[g];
  }

  nlohmann::json report;
  std::vector<double> aps;
  std::vector<std::vector<PrPoint>> curves;
  std::map<std::int64_t, std::vector<double>> per_class;
  std::size_t skipped = 0;
  const fs::path dir = a.out;
  ensure_dir(dir / "pr");
  for (auto& [qid, qr] : queries) {
    std::sort(qr.ranked.begin(), qr.ranked.end());
    for (std::size_t i = 0; i < qr.ranked.size(); ++i) {
      if (qr.ranked[i].first != static_cast<Index>(i + 1)) {
        throw DataError("query " + std::to_string(qid) + ": ranks must run 1..n without gaps");
      }
    }
    std::vector<Index> ranking;
    for (const auto& rg : qr.ranked) ranking.push_back(rg.second);

    // Relevant items outside a truncated ranking still count; pad the set
    // with placeholder ids that cannot occur in the ranking.
    std::set<Index> relevant = qr.relevant_seen;
    std::optional<std::int64_t> cls;
    if (groups) {
      const auto& gs = groups->get(Modality::sketch);
      if (qid < 0 || qid >= gs.samples()) throw DataError("query " + std::to_string(qid) + " has no group");
      cls = gs.group(qid);
      const Index total = class_count.count(*cls) ? class_count[*cls] : 0;
      for (Index extra = -1; static_cast<Index>(relevant.size()) < total; --extra) relevant.insert(extra);
    }
    if (relevant.empty()) {
      ++skipped;
      continue;
    }
    const double ap = average_precision(ranking, relevant);
    aps.push_back(ap);
    if (cls) per_class[*cls].push_back(ap);
    auto curve = precision_recall_curve(ranking, relevant);
    write_file_atomic(dir / "pr" / ("query_" + std::to_string(qid) + ".csv"), encode_pr(curve));
    curves.push_back(std::move(curve));
  }
  if (aps.empty()) throw DataError("no query has a relevant item");

  const double map = mean_average_precision(aps);
  report["queries"] = aps.size();
  report["queries_without_relevant"] = skipped;
  report["mAP"] = map;
  if (!per_class.empty()) {
    nlohmann::json pc = nlohmann::json::object();
    for (const auto& [c, v] : per_class) pc[std::to_string(c)] = mean_average_precision(v);
    report["per_class_AP"] = pc;
  }
  write_file_atomic(dir / "pr_macro.csv", encode_pr(macro_pr(curves)));

  if (!a.matches.empty()) {
    const auto matches = load_matches(a.matches);
    std::map<Index, Index> truth(matches.begin(), matches.end());
    std::size_t hits = 0;
    for (const auto& [qid, qr] : queries) {
      const auto it = truth.find(qid);
      if (it == truth.end()) throw DataError("query " + std::to_string(qid) + " has no match");
      if (!qr.ranked.empty() && qr.ranked.front().second == it->second) ++hits;
    }
    const double rate = static_cast<double>(hits) / static_cast<double>(queries.size());
    report["recognition_rate"] = rate;
    out << "recognition_rate " << format_double(rate) << '\n';
  }
  write_file_atomic(dir / "metrics.json", report.dump(2) + "\n");
  out << "mAP " << format_double(map) << " over " << aps.size() << " queries\n";
  return 0;
}

// ---- annotate-serve

struct ServeArgs {
  std::string static_dir;
  std::string features;
  std::string groups;
  std::string pairs;
  std::string journal;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string port_file;
};

void add_annotate_serve(CLI::App& app, ServeArgs& a) {
  app.add_option("--static-dir", a.static_dir, "Directory of sketch images; items are its files in name order")
      ->required();
  app.add_option("--features", a.features, "Sketch features used to propose nearest-neighbour pairs");
  app.add_option("--groups", a.groups, "Groups CSV for the sketches (with --features)");
  app.add_option("--pairs", a.pairs, "Explicit pair list CSV (left,right) instead of proposals");
  app.add_option("--journal", a.journal, "JSON-lines answer journal; replayed when it exists")->required();
  app.add_option("--host", a.host, "Listen address")->capture_default_str();
  app.add_option("--port", a.port, "Listen port; 0 picks a free one")->capture_default_str();
  app.add_option("--port-file", a.port_file, "Write the bound port to this file");
}

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

int annotate_serve(const ServeArgs& a, std::ostream& out) {
  const bool proposed = !a.features.empty() || !a.groups.empty();
  if (proposed == !a.pairs.empty()) throw UsageError("pass --features with --groups, or --pairs");
  if (proposed && (a.features.empty() || a.groups.empty())) throw UsageError("--features and --groups go together");
  if (a.port < 0 || a.port > 65535) throw UsageError("--port must lie in [0, 65535]");

  const auto files = sorted_files(a.static_dir, {".pgm", ".png", ".jpg", ".jpeg", ".gif", ".svg", ".bmp"});
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.filename().string());

  std::vector<IndexPair> pairs;
  if (proposed) {
    const auto f = load_features(a.features, Modality::sketch);
    if (f.samples() != static_cast<Index>(names.size())) {
      throw DataError("feature columns (" + std::to_string(f.samples()) + ") differ from image files (" +
                      std::to_string(names.size()) + ")");
    }
    pairs = propose_annotation_pairs(f, load_groups(a.groups).get(Modality::sketch));
  } else {
    pairs = load_matches(a.pairs);
  }

  AnnotationSession session(std::move(pairs), names, a.journal);
  AnnotationServer server(session, a.static_dir);
  const int port = server.bind(a.host, a.port);
  if (!a.port_file.empty()) write_file_atomic(a.port_file, std::to_string(port) + "\n");
  out << "listening on http://" << a.host << ":" << port << " (" << session.progress().remaining
      << " pairs remaining)" << std::endl;

  g_stop.store(false);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread watcher([&server] {
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  });
  server.listen();
  g_stop.store(true);
  watcher.join();
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-paced partial curriculum coupled dictionary learning for sketch-based retrieval", "cprl"};
  app.require_subcommand(1);
  app.fallthrough(false);

  GenSynthArgs gen;
  LaplacianArgs lap;
  CurriculumArgs cur;
  TrainArgs tr;
  EncodeArgs enc;
  RetrieveArgs ret;
  EvaluateArgs ev;
  ServeArgs srv;
  auto* c_gen = app.add_subcommand("gen-synth", "Generate a seeded synthetic cross-modal dataset");
  auto* c_lap = app.add_subcommand("build-laplacian", "Build the joint graph Laplacian");
  auto* c_cur = app.add_subcommand("build-curriculum", "Build curriculum constraints");
  auto* c_tr = app.add_subcommand("train", "Train coupled dictionaries");
  auto* c_enc = app.add_subcommand("encode", "Sparse-code features with a trained dictionary");
  auto* c_ret = app.add_subcommand("retrieve", "Rank gallery codes for each query code");
  auto* c_ev = app.add_subcommand("evaluate", "Compute mAP, PR curves and recognition rate");
  auto* c_srv = app.add_subcommand("annotate-serve", "Serve pairwise easiness annotation over HTTP");
  add_gen_synth(*c_gen, gen);
  add_build_laplacian(*c_lap, lap);
  add_build_curriculum(*c_cur, cur);
  add_train(*c_tr, tr);
  add_encode(*c_enc, enc);
  add_retrieve(*c_ret, ret);
  add_evaluate(*c_ev, ev);
  add_annotate_serve(*c_srv, srv);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    // Subcommand help is reported from the subcommand that was being parsed.
    if (e.get_exit_code() == 0) {
      for (auto* sub : app.get_subcommands()) out << sub->help();
      if (app.get_subcommands().empty()) out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*c_gen) return gen_synth(gen, out);
    if (*c_lap) return build_laplacian(lap, out);
    if (*c_cur) return build_curriculum(cur, out);
    if (*c_tr) return train_cmd(tr, out, err);
    if (*c_enc) return encode_cmd(enc, out);
    if (*c_ret) return retrieve_cmd(ret, out);
    if (*c_ev) return evaluate_cmd(ev, out);
    if (*c_srv) return annotate_serve(srv, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "error: no command\n";
  return 2;
}

}  // namespace cprl::cli
