#include "feedrank/service.hpp"

#include <istream>
#include <ostream>
#include <unordered_map>

#include "json.hpp"

#include "feedrank/reranker.hpp"

using nlohmann::json;

namespace feedrank {

namespace {

struct LiveSession {
  SessionState state;
  long last_touched = 0;
};

Item item_from_json(const json& j) {
  Item item;
  item.id = j.at("id").get<std::string>();
  item.embedding = j.at("embedding").get<Vec>();
  item.topic = j.at("topic").get<int>();
  item.main_score = j.at("main_score").get<double>();
  return item;
}

json error_response(const json& req_id, const std::string& message) {
  json resp;
  resp["req_id"] = req_id;
  resp["error"] = message;
  return resp;
}

}  // namespace

long serve_rerank(std::istream& in, std::ostream& out,
                  const ScorerModel& scorer, const AppConfig& cfg) {
  if (scorer.mode != FeatureMode::contextual) {
    raise(ErrorKind::ModeMismatch, "service requires a contextual model");
  }

  std::unordered_map<std::string, LiveSession> sessions;
  long request_counter = 0;
  std::string line;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++request_counter;

    // Expire sessions that have been idle too long.
    for (auto it = sessions.begin(); it != sessions.end();) {
      if (request_counter - it->second.last_touched >
          cfg.service.session_idle_limit) {
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }

    json req = json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.is_object()) {
      out << error_response(nullptr, "malformed JSON request").dump() << '\n';
      continue;
    }
    const json req_id = req.value("req_id", json(nullptr));

    try {
      const std::string session_id = req.at("session_id").get<std::string>();

      RerankParams params = cfg.rerank;
      if (req.contains("params")) {
        const json& p = req.at("params");
        if (p.contains("window")) params.window = p.at("window").get<int>();
        if (p.contains("context_depth")) {
          params.context_depth = p.at("context_depth").get<int>();
        }
      }
      if (req.contains("page_size")) {
        params.page_size = req.at("page_size").get<int>();
      }
      if (params.window < 1 || params.page_size < 1 || params.context_depth < 1) {
        throw Error(ErrorKind::InvalidConfig, "bad rerank params");
      }

      auto it = sessions.find(session_id);
      if (req.contains("candidates") && !req.at("candidates").empty()) {
        const json& ju = req.at("user");
        UserProfile user;
        user.id = ju.at("id").get<std::string>();
        user.interest_embedding = ju.at("embedding").get<Vec>();
        const int dim = static_cast<int>(user.interest_embedding.size());

        std::vector<Item> candidates;
        for (const json& jc : req.at("candidates")) {
          candidates.push_back(item_from_json(jc));
        }
        candidates = validate_corpus(std::move(candidates), dim);
        user = std::move(validate_users({std::move(user)}, dim).front());

        LiveSession fresh;
        fresh.state = make_session_state(
            make_feed(std::move(user), std::move(candidates)));
        it = sessions.insert_or_assign(session_id, std::move(fresh)).first;
      } else if (it == sessions.end()) {
        throw Error(ErrorKind::SessionExhausted,
                    "unknown session '" + session_id + "' and no candidates");
      }

      it->second.last_touched = request_counter;
      PageResult page =
          rerank_page(it->second.state, scorer, params, cfg.features,
                      cfg.eval.objective_task);

      json resp;
      resp["req_id"] = req_id;
      json order = json::array();
      for (const Item& item : page.page) order.push_back(item.id);
      resp["order"] = std::move(order);
      resp["scores"] = page.scores;
      resp["session_done"] = page.session_done;
      if (page.session_done) sessions.erase(it);
      out << resp.dump() << '\n';
    } catch (const Error& e) {
      out << error_response(req_id, e.what()).dump() << '\n';
    } catch (const json::exception& e) {
      out << error_response(req_id, std::string("bad request: ") + e.what()).dump()
          << '\n';
    }
    out.flush();
  }
  return request_counter;
}

}  // namespace feedrank
