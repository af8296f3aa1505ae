#pragma once

#include <iosfwd>

#include "feedrank/config.hpp"
#include "feedrank/model.hpp"

namespace feedrank {

// Batch re-ranking service over line-delimited JSON. One request per input
// line, one response per output line, responses in request order:
//
//   request  {"req_id": str, "session_id": str, "user": {"id", "embedding"},
//             "candidates": [{"id", "embedding", "topic", "main_score"}, ..],
//             "page_size": int?, "params": {"window"?, "context_depth"?}?}
//   response {"req_id": str, "order": [item ids], "scores": [f64],
//             "session_done": bool}
//
// Requests with candidates start (or restart) a session; requests without
// candidates continue one, paging through the remaining items. Malformed
// lines yield {"req_id": null, "error": str} and the loop keeps serving.
// Returns the number of lines consumed.
long serve_rerank(std::istream& in, std::ostream& out,
                  const ScorerModel& scorer, const AppConfig& cfg);

}  // namespace feedrank
