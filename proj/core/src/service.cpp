#include "compgrid/service.hpp"

#include <chrono>
#include <sstream>

#include "compgrid/error.hpp"

namespace compgrid {

namespace {

ApiResponse error(int status, const std::string& message) { return {status, Json{{"error", message}}, {}, "application/json"}; }

double wall_clock() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::optional<Json> parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  try {
    Json j = Json::parse(body);
    if (!j.is_object()) return std::nullopt;
    return j;
  } catch (const Json::parse_error&) {
    return std::nullopt;
  }
}

}  // namespace

SessionService::SessionService(SessionStore& store, ServiceConfig config)
    : store_(store), config_(std::move(config)), rng_(config_.seed) {
  if (!config_.clock) config_.clock = wall_clock;
}

ApiResponse SessionService::create_session(const std::string& body) {
  const auto req = parse_body(body);
  if (!req) return error(400, "request body must be a JSON object");
  std::optional<Distribution> dist;
  if (req->contains("distribution") && !(*req)["distribution"].is_null()) {
    const Json& d = (*req)["distribution"];
    if (!d.is_string() || !(dist = distribution_from_string(d.get<std::string>()))) {
      return error(400, "distribution must be \"compositional\" or \"null\"");
    }
  }
  std::lock_guard lock(rng_mutex_);
  if (!dist) {
    if (!store_.has_test_set(Distribution::Compositional) || !store_.has_test_set(Distribution::Null)) {
      return error(503, "test sets are not loaded");
    }
    dist = rng_.bernoulli(0.5) ? Distribution::Compositional : Distribution::Null;
  }
  if (!store_.has_test_set(*dist)) return error(503, "test set not loaded for " + std::string(to_string(*dist)));
  const SessionRecord r = store_.create(*dist, rng_);
  return {200, Json{{"session_id", r.id}, {"n_boards", r.board_order.size()}}, {}, "application/json"};
}

Json SessionService::board_view(const std::string& id, const SessionProgress& p, std::size_t n_boards) const {
  Json revealed = Json::array();
  for (int i = 0; i < kTileCount; ++i) {
    const Tile t = p.state.revealed[static_cast<std::size_t>(i)];
    if (t == Tile::Unrevealed) continue;
    const Pos pos = Pos::from_index(i);
    revealed.push_back({{"row", pos.row}, {"col", pos.col}, {"color", t == Tile::Red ? "red" : "blue"}});
  }
  return Json{{"session_id", id},
              {"board_index", p.board + 1},
              {"n_boards", n_boards},
              {"revealed", revealed},
              {"points", p.points},
              {"board_done", p.state.finished()},
              {"session_done", p.completed}};
}

ApiResponse SessionService::get_board(const std::string& id) const {
  const auto record = store_.record(id);
  if (!record) return error(404, "unknown session");
  if (record->completed) return error(410, "session is complete");
  const SessionProgress p = store_.progress(id);
  return {200, board_view(id, p, record->board_order.size()), {}, "application/json"};
}

ApiResponse SessionService::reveal(const std::string& id, const std::string& body) {
  const auto req = parse_body(body);
  if (!req) return error(400, "request body must be a JSON object");
  const auto row = req->find("row");
  const auto col = req->find("col");
  if (row == req->end() || col == req->end() || !row->is_number_integer() || !col->is_number_integer()) {
    return error(400, "row and col must be integers");
  }
  const Pos pos{row->get<int>(), col->get<int>()};
  if (!pos.in_bounds()) return error(400, "row and col must lie in 0..6");
  try {
    const AppendResult r = store_.append_event(id, pos, config_.clock());
    return {200,
            Json{{"outcome", std::string(to_string(r.event.outcome))},
                 {"reward", r.event.reward},
                 {"points", r.points},
                 {"board_done", r.board_done},
                 {"session_done", r.session_done}},
            {},
            "application/json"};
  } catch (const SessionStore::UnknownSession&) {
    return error(404, "unknown session");
  } catch (const SessionStore::SessionCompleted&) {
    return error(409, "board already finished");
  } catch (const EpisodeFinishedError&) {
    return error(409, "board already finished");
  }
}

ApiResponse SessionService::export_sessions(const std::string& token, bool include_incomplete) const {
  if (config_.admin_token.empty()) return error(403, "export is disabled (no admin token configured)");
  if (token != config_.admin_token) return error(401, "admin token required");
  std::ostringstream out;
  write_records(out, make_header("export", Json{{"include_incomplete", include_incomplete}}),
                store_.export_records(include_incomplete));
  return {200, Json(), out.str(), "application/x-ndjson"};
}

ApiResponse SessionService::health() const {
  return {200,
          Json{{"status", "ok"},
               {"compositional", store_.has_test_set(Distribution::Compositional)},
               {"null", store_.has_test_set(Distribution::Null)}},
          {},
          "application/json"};
}

}  // namespace compgrid
