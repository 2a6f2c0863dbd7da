#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <string>

#include "compgrid/records.hpp"
#include "compgrid/rng.hpp"
#include "compgrid/store.hpp"

namespace compgrid {

struct ApiResponse {
  int status = 200;
  Json body = Json::object();
  /// When non-empty the response is this text (line records) instead of `body`.
  std::string text;
  std::string content_type = "application/json";
};

struct ServiceConfig {
  /// Required for /export; an empty token disables export.
  std::string admin_token;
  std::uint64_t seed = 0;
  /// Seconds since the Unix epoch; injectable for tests.
  std::function<double()> clock;
};

/// Transport-independent request handlers for human play. Responses only ever
/// carry revealed tiles; outcomes are computed from the hidden boards.
class SessionService {
 public:
  SessionService(SessionStore& store, ServiceConfig config);

  /// Body: {} or {"distribution": "compositional" | "null"}.
  ApiResponse create_session(const std::string& body);
  ApiResponse get_board(const std::string& session_id) const;
  /// Body: {"row": int, "col": int}; any other fields are ignored.
  ApiResponse reveal(const std::string& session_id, const std::string& body);
  ApiResponse export_sessions(const std::string& token, bool include_incomplete) const;
  ApiResponse health() const;

 private:
  Json board_view(const std::string& id, const SessionProgress& progress, std::size_t n_boards) const;

  SessionStore& store_;
  ServiceConfig config_;
  std::mutex rng_mutex_;
  Rng rng_;
};

}  // namespace compgrid
