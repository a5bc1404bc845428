#include "sculptor/semantic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sculptor/error.hpp"

namespace sculptor {

using nlohmann::json;

namespace {

constexpr int kAttempts = 3;
constexpr int kBackoffBaseMs = 100;  // doubles per retry: 100ms, 200ms

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // leading slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("endpoint must include a scheme, e.g. http://host:port/embed");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http")
    throw ValidationError("unsupported endpoint scheme \"" + scheme + "\" (this build speaks plain http)");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool transient_status(int status) { return status >= 500; }

// One batch, with retries. Fills `rows` on success, returns an error message
// (empty on success) so the caller can pick the lowest failing batch index.
std::string fetch_batch(const Endpoint& ep, const SemanticProviderConfig& config,
                        const std::vector<std::string>& texts, std::size_t first,
                        std::size_t count, std::size_t batch_index,
                        std::vector<std::vector<double>>& rows) {
  json body;
  body["texts"] = json::array();
  for (std::size_t i = 0; i < count; ++i) body["texts"].push_back(texts[first + i]);
  const std::string payload = body.dump();

  httplib::Client client(ep.base);
  const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  if (const char* token = std::getenv(kApiTokenEnv); token && *token)
    client.set_bearer_token_auth(token);

  std::string last_error;
  for (int attempt = 1; attempt <= kAttempts; ++attempt) {
    if (attempt > 1)
      std::this_thread::sleep_for(std::chrono::milliseconds(kBackoffBaseMs << (attempt - 2)));

    auto res = client.Post(ep.path, payload, "application/json");
    if (!res) {
      last_error = "batch " + std::to_string(batch_index) + ": connection failed (" +
                   httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status != 200) {
      last_error = "batch " + std::to_string(batch_index) + ": HTTP " + std::to_string(res->status);
      if (transient_status(res->status)) continue;
      return last_error;  // 4xx will not improve on retry
    }

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains("embeddings") ||
        !reply["embeddings"].is_array())
      return "batch " + std::to_string(batch_index) + ": malformed response body";
    const auto& embs = reply["embeddings"];
    if (embs.size() != count)
      return "batch " + std::to_string(batch_index) + ": embedding count mismatch, expected " +
             std::to_string(count) + ", got " + std::to_string(embs.size());

    rows.assign(count, {});
    for (std::size_t i = 0; i < count; ++i) {
      if (!embs[i].is_array())
        return "batch " + std::to_string(batch_index) + ": embedding " + std::to_string(i) +
               " is not an array";
      auto& row = rows[i];
      row.reserve(embs[i].size());
      for (const auto& x : embs[i]) {
        if (!x.is_number())
          return "batch " + std::to_string(batch_index) + ": non-numeric embedding entry";
        const double v = x.get<double>();
        if (!std::isfinite(v))
          return "batch " + std::to_string(batch_index) + ": non-finite embedding entry";
        row.push_back(v);
      }
      if (row.size() != rows[0].size())
        return "batch " + std::to_string(batch_index) + ": inconsistent embedding dimensions";
    }
    return {};
  }
  return last_error;
}

}  // namespace

SemanticMatrix embed_remote(const SemanticProviderConfig& config,
                            const std::vector<std::string>& texts) {
  if (config.endpoint.empty()) throw ValidationError("remote provider requires an endpoint");
  if (config.batch_size < 1) throw ValidationError("batch size must be >= 1");
  const Endpoint ep = split_endpoint(config.endpoint);
  const std::string tag = "remote(" + config.endpoint + ")";

  if (texts.empty()) return {FeatureMatrix(0, 0), tag};

  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t num_batches = (texts.size() + batch - 1) / batch;
  std::vector<std::vector<std::vector<double>>> results(num_batches);
  std::vector<std::string> errors(num_batches);

  const int threads = std::clamp(config.max_in_flight, 1,
                                 static_cast<int>(std::min<std::size_t>(num_batches, 64)));
  const auto total = static_cast<std::int64_t>(num_batches);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t b = 0; b < total; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    const std::size_t first = bi * batch;
    const std::size_t count = std::min(batch, texts.size() - first);
    errors[bi] = fetch_batch(ep, config, texts, first, count, bi, results[bi]);
  }

  for (const auto& err : errors)
    if (!err.empty()) throw ServiceError(config.endpoint + ": " + err);

  const std::size_t dim = results[0][0].size();
  if (dim == 0) throw ServiceError(config.endpoint + ": service returned empty embeddings");
  for (std::size_t b = 1; b < num_batches; ++b)
    if (results[b][0].size() != dim)
      throw ServiceError(config.endpoint + ": batch " + std::to_string(b) +
                         ": dimension mismatch with batch 0 (" + std::to_string(results[b][0].size()) +
                         " vs " + std::to_string(dim) + ")");

  FeatureMatrix mat(texts.size(), dim);
  std::size_t r = 0;
  for (const auto& rows : results)
    for (const auto& row : rows) std::copy(row.begin(), row.end(), mat.row(r++).begin());
  return {std::move(mat), tag};
}

}  // namespace sculptor
