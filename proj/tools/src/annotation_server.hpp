#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cprl/curriculum.hpp"
#include "cprl/types.hpp"

namespace cprl::cli {

// Pairwise easiness questions over a list of sketch files. Answers are
// appended to a JSON-lines journal before they count, and a journal found
// at startup is replayed. All methods are safe to call concurrently.
class AnnotationSession {
 public:
  struct PairView {
    std::int64_t pair_id;
    Index left;
    Index right;
    std::string left_url;
    std::string right_url;
  };
  struct Progress {
    std::size_t answered = 0;  // left or right
    std::size_t skipped = 0;
    std::size_t remaining = 0;
  };
  enum class AnswerStatus { ok, unknown_pair, already_answered };
  struct AnswerResult {
    AnswerStatus status;
    std::size_t remaining;
  };

  AnnotationSession(std::vector<IndexPair> pairs, std::vector<std::string> item_names,
                    std::filesystem::path journal, Modality modality = Modality::sketch);

  std::optional<PairView> next() const;
  AnswerResult answer(std::int64_t pair_id, AnnotationChoice choice);
  Progress progress() const;
  // Constraints CSV of every non-skip answer, in answer order.
  std::string export_csv() const;

  const std::vector<std::string>& item_names() const { return names_; }
  std::size_t replayed() const { return replayed_; }

 private:
  std::string url_of(Index item) const;
  std::size_t remaining_locked() const;

  std::vector<IndexPair> pairs_;
  std::vector<std::string> names_;
  std::filesystem::path journal_path_;
  Modality modality_;
  std::vector<std::optional<AnnotationChoice>> choices_;
  std::vector<std::int64_t> order_;  // pair ids in answer order
  std::size_t replayed_ = 0;
  mutable std::mutex mu_;
  std::ofstream journal_;
};

// HTTP front end for a session; static files come from `static_dir`.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationSession& session, std::filesystem::path static_dir);
  ~AnnotationServer();

  // Returns the bound port (an ephemeral one when `port` is 0).
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string content_type_for(const std::filesystem::path& path);

}  // namespace cprl::cli
