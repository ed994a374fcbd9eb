#include "annotation_server.hpp"

#include <chrono>
#include <ctime>
#include <set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cprl/error.hpp"
#include "cprl/matrix_io.hpp"
#include "cprl/text_files.hpp"

namespace cprl::cli {

namespace {

using nlohmann::json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

}  // namespace

AnnotationSession::AnnotationSession(std::vector<IndexPair> pairs, std::vector<std::string> item_names,
                                     std::filesystem::path journal, Modality modality)
    : pairs_(std::move(pairs)),
      names_(std::move(item_names)),
      journal_path_(std::move(journal)),
      modality_(modality),
      choices_(pairs_.size()) {
  for (const auto& [l, r] : pairs_) {
    const auto n = static_cast<Index>(names_.size());
    if (l < 0 || r < 0 || l >= n || r >= n) throw DataError("annotation pair refers to a missing item");
  }
  if (std::filesystem::exists(journal_path_)) {
    const std::string text = read_file(journal_path_);
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      json rec;
      try {
        rec = json::parse(lines[i]);
      } catch (const json::exception&) {
        // A torn final line is what a crash mid-append leaves behind.
        if (i + 1 == lines.size()) break;
        throw FormatError("journal line " + std::to_string(i + 1) + " is not JSON");
      }
      const auto id = rec.at("pair_id").get<std::int64_t>();
      if (id < 0 || id >= static_cast<std::int64_t>(pairs_.size())) {
        throw DataError("journal refers to unknown pair " + std::to_string(id));
      }
      const auto& pair = pairs_[static_cast<std::size_t>(id)];
      if (rec.at("left").get<Index>() != pair.first || rec.at("right").get<Index>() != pair.second) {
        throw DataError("journal pair " + std::to_string(id) + " does not match the current pair list");
      }
      auto& slot = choices_[static_cast<std::size_t>(id)];
      if (slot) continue;
      slot = parse_choice(rec.at("choice").get<std::string>());
      order_.push_back(id);
      ++replayed_;
    }
  }
  journal_.open(journal_path_, std::ios::app | std::ios::binary);
  if (!journal_) throw IoError("cannot open journal " + journal_path_.string());
}

std::string AnnotationSession::url_of(Index item) const {
  return "/static/" + names_[static_cast<std::size_t>(item)];
}

std::size_t AnnotationSession::remaining_locked() const { return pairs_.size() - order_.size(); }

std::optional<AnnotationSession::PairView> AnnotationSession::next() const {
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (choices_[i]) continue;
    const auto& [l, r] = pairs_[i];
    return PairView{static_cast<std::int64_t>(i), l, r, url_of(l), url_of(r)};
  }
  return std::nullopt;
}

AnnotationSession::AnswerResult AnnotationSession::answer(std::int64_t pair_id, AnnotationChoice choice) {
  std::lock_guard lock(mu_);
  if (pair_id < 0 || pair_id >= static_cast<std::int64_t>(pairs_.size())) {
    return {AnswerStatus::unknown_pair, remaining_locked()};
  }
  auto& slot = choices_[static_cast<std::size_t>(pair_id)];
  if (slot) return {AnswerStatus::already_answered, remaining_locked()};

  const auto& pair = pairs_[static_cast<std::size_t>(pair_id)];
  const json rec = {{"pair_id", pair_id},
                    {"left", pair.first},
                    {"right", pair.second},
                    {"choice", std::string(to_string(choice))},
                    {"timestamp", utc_timestamp()}};
  journal_ << rec.dump() << '\n';
  journal_.flush();
  if (!journal_) throw IoError("cannot append to journal " + journal_path_.string());
  slot = choice;
  order_.push_back(pair_id);
  return {AnswerStatus::ok, remaining_locked()};
}

AnnotationSession::Progress AnnotationSession::progress() const {
  std::lock_guard lock(mu_);
  Progress p;
  for (auto id : order_) {
    if (*choices_[static_cast<std::size_t>(id)] == AnnotationChoice::skip) {
      ++p.skipped;
    } else {
      ++p.answered;
    }
  }
  p.remaining = remaining_locked();
  return p;
}

std::string AnnotationSession::export_csv() const {
  std::vector<AnnotationAnswer> answers;
  {
    std::lock_guard lock(mu_);
    for (auto id : order_) {
      answers.push_back({pairs_[static_cast<std::size_t>(id)], *choices_[static_cast<std::size_t>(id)]});
    }
  }
  return encode_constraints(constraints_from_annotations(answers, modality_));
}

std::string content_type_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".pgm") return "image/x-portable-graymap";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

struct AnnotationServer::Impl {
  Impl(AnnotationSession& s, std::filesystem::path dir) : session(s), static_dir(std::move(dir)) {}

  AnnotationSession& session;
  std::filesystem::path static_dir;
  std::set<std::string> served;
  httplib::Server http;
};

AnnotationServer::AnnotationServer(AnnotationSession& session, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(session, std::move(static_dir))) {
  impl_->served.insert(session.item_names().begin(), session.item_names().end());
  auto& http = impl_->http;
  Impl* self = impl_.get();

  auto send_json = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };

  http.Get("/api/pairs/next", [self, send_json](const httplib::Request&, httplib::Response& res) {
    const auto pair = self->session.next();
    if (!pair) {
      res.status = 204;
      return;
    }
    send_json(res, 200,
              {{"pair_id", pair->pair_id},
               {"left", {{"id", pair->left}, {"image_url", pair->left_url}}},
               {"right", {{"id", pair->right}, {"image_url", pair->right_url}}}});
  });

  http.Post(R"(/api/pairs/([^/]+)/answer)", [self, send_json](const httplib::Request& req, httplib::Response& res) {
    std::int64_t id = -1;
    try {
      id = parse_index(req.matches[1].str());
    } catch (const FormatError&) {
      send_json(res, 404, {{"error", "unknown pair"}});
      return;
    }
    AnnotationChoice choice;
    try {
      choice = parse_choice(json::parse(req.body).at("choice").get<std::string>());
    } catch (const std::exception&) {
      send_json(res, 400, {{"error", R"(body must be {"choice": "left"|"right"|"skip"})"}});
      return;
    }
    const auto result = self->session.answer(id, choice);
    switch (result.status) {
      case AnnotationSession::AnswerStatus::ok:
        send_json(res, 200, {{"remaining", result.remaining}});
        break;
      case AnnotationSession::AnswerStatus::unknown_pair:
        send_json(res, 404, {{"error", "unknown pair"}});
        break;
      case AnnotationSession::AnswerStatus::already_answered:
        send_json(res, 409, {{"error", "pair already answered"}});
        break;
    }
  });

  http.Get("/api/progress", [self, send_json](const httplib::Request&, httplib::Response& res) {
    const auto p = self->session.progress();
    send_json(res, 200, {{"answered", p.answered}, {"skipped", p.skipped}, {"remaining", p.remaining}});
  });

  http.Get("/api/export", [self](const httplib::Request&, httplib::Response& res) {
    res.set_content(self->session.export_csv(), "text/csv");
  });

  http.Get(R"(/static/(.+))", [self, send_json](const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1].str();
    // Only the listed items are reachable, which also rules out "..".
    if (self->served.count(name) == 0) {
      send_json(res, 404, {{"error", "not found"}});
      return;
    }
    try {
      const auto path = self->static_dir / name;
      res.set_content(read_file(path), content_type_for(path));
    } catch (const std::exception&) {
      send_json(res, 404, {{"error", "not found"}});
    }
  });

  http.set_exception_handler([send_json](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send_json(res, 500, {{"error", what}});
  });
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->http.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->http.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void AnnotationServer::listen() { impl_->http.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_) impl_->http.stop();
}

}  // namespace cprl::cli
