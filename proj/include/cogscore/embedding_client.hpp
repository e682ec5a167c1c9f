#pragma once

// Client for a remote embedding service. The fetched vectors are materialized into a
// complete EmbeddingTable before any scoring happens.
//
// Wire format (HTTP POST, JSON):
//   request:  {"kind": "text" | "image", "payload": str}
//   response: {"vector": [float]}

#include <map>
#include <string>
#include <vector>

#include <httplib.h>
// <resolv.h> defines _res as a macro, which collides with Eigen parameter names.
#ifdef _res
#undef _res
#endif

#include "cogscore/error.hpp"
#include "cogscore/jsonl.hpp"
#include "cogscore/providers.hpp"

namespace cogscore {

struct EmbeddingServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string path = "/embed";
  int timeout_seconds = 30;
};

inline std::string embedding_request_body(EmbeddingKind kind, const std::string& payload) {
  ordered_json req;
  req["kind"] = to_string(kind);
  req["payload"] = payload;
  return req.dump();
}

inline std::vector<float> parse_embedding_response(const std::string& body) {
  json resp;
  try {
    resp = json::parse(body);
    return resp.at("vector").get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed embedding service response: ") + e.what());
  }
}

/// Fetches one vector per entry of `payloads` (table key -> payload sent to the service).
/// For text tables the key and payload are usually the same normalized label; for image
/// tables the key is the image id and the payload its path or URI.
inline EmbeddingTable fetch_embeddings(const EmbeddingServiceConfig& cfg, EmbeddingKind kind,
                                       const std::map<std::string, std::string>& payloads) {
  httplib::Client client(cfg.host, cfg.port);
  client.set_connection_timeout(cfg.timeout_seconds);
  client.set_read_timeout(cfg.timeout_seconds);

  EmbeddingTable table;
  table.kind = kind;
  for (const auto& [key, payload] : payloads) {
    auto res = client.Post(cfg.path, embedding_request_body(kind, payload), "application/json");
    if (!res) {
      throw InputError("embedding service unreachable at " + cfg.host + ":" +
                       std::to_string(cfg.port) + " (" + httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
      throw InputError("embedding service returned HTTP " + std::to_string(res->status) +
                       " for key '" + key + "'");
    }
    auto vec = parse_embedding_response(res->body);
    if (table.dim == 0) table.dim = vec.size();
    if (table.dim == 0) throw InputError("embedding service returned an empty vector");
    table.insert(key, std::move(vec));
  }
  return table;
}

}  // namespace cogscore
