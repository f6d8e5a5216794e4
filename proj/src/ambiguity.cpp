#include "activepose/ambiguity.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "activepose/scene.hpp"

namespace activepose {

namespace {

using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json view_summary(const ViewDescriptor& view, const double* entropy) {
  json j;
  const auto cam = pose_to_seven(view.camera);
  j["camera"] = std::vector<double>(cam.begin(), cam.end());
  j["visible_features"] = view.visible_feature_ids;
  if (entropy) j["entropy"] = *entropy;
  return j;
}

json prompt_body(const GeometricPrompt& prompt) {
  json j;
  j["object"] = prompt.object_name;
  j["unambiguous_views"] = json::array();
  for (const auto& v : prompt.unambiguous) {
    json s = view_summary(v.view, &v.entropy);
    s["source_index"] = v.source_index;
    j["unambiguous_views"].push_back(s);
  }
  j["ambiguous_views"] = json::array();
  for (const auto& v : prompt.ambiguous) {
    json s = view_summary(v.view, &v.entropy);
    s["source_index"] = v.source_index;
    j["ambiguous_views"].push_back(s);
  }
  return j;
}

struct SlotGuard {
  std::counting_semaphore<4096>& sem;
  explicit SlotGuard(std::counting_semaphore<4096>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

}  // namespace

GeometricPrompt build_prompt(const std::vector<EntropyView>& views, int u_count, int a_count,
                             const std::string& object_name) {
  if (u_count < 1 || a_count < 1 ||
      views.size() < static_cast<std::size_t>(u_count) + static_cast<std::size_t>(a_count)) {
    throw InsufficientViews("build_prompt: need at least " +
                            std::to_string(u_count + a_count) + " views, have " +
                            std::to_string(views.size()));
  }

  std::vector<int> order(views.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (views[a].entropy != views[b].entropy) return views[a].entropy < views[b].entropy;
    return a < b;
  });

  GeometricPrompt prompt;
  prompt.object_name = object_name;
  for (int i = 0; i < u_count; ++i) {
    const int idx = order[i];
    prompt.unambiguous.push_back({views[idx].view, views[idx].entropy, idx});
  }

  std::vector<int> rest(order.begin() + u_count, order.end());
  std::sort(rest.begin(), rest.end(), [&](int a, int b) {
    if (views[a].entropy != views[b].entropy) return views[a].entropy > views[b].entropy;
    return a < b;
  });
  for (int i = 0; i < a_count; ++i) {
    const int idx = rest[i];
    prompt.ambiguous.push_back({views[idx].view, views[idx].entropy, idx});
  }
  return prompt;
}

OracleScorer::OracleScorer(ObjectModel object) : object_(std::move(object)) {
  object_.validate();
}

AmbiguityScore OracleScorer::score(const ViewDescriptor& descriptor,
                                   const GeometricPrompt& prompt) const {
  if (!prompt.object_name.empty() && prompt.object_name != object_.name) {
    throw std::invalid_argument("oracle scorer for " + object_.name +
                                " got a prompt for " + prompt.object_name);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto set = indistinguishable_set(object_, descriptor);
  AmbiguityScore s;
  s.p_amb = 1.0 - 1.0 / static_cast<double>(set.size());
  s.scorer_id = "oracle";
  s.latency = seconds_since(t0);
  return s;
}

RemoteScorer::RemoteScorer(RemoteScorerConfig config)
    : config_(std::move(config)), slots_(std::clamp(config_.max_concurrent, 1, 4096)) {
  if (config_.timeout <= 0) throw std::invalid_argument("remote scorer: timeout must be > 0");
  if (config_.max_retries < 0) throw std::invalid_argument("remote scorer: retries must be >= 0");
}

AmbiguityScore RemoteScorer::score(const ViewDescriptor& descriptor,
                                   const GeometricPrompt& prompt) const {
  const auto t0 = std::chrono::steady_clock::now();

  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Unreachable("remote scorer: endpoint has no scheme: " + config_.endpoint);
  }
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  const std::string base = config_.endpoint.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

  const std::string body = render_score_request(prompt, descriptor);

  auto attempt = [&]() -> double {
    SlotGuard guard(slots_);
    httplib::Client client(base);
    const auto whole = static_cast<time_t>(config_.timeout);
    const auto micros = static_cast<time_t>((config_.timeout - whole) * 1e6);
    client.set_connection_timeout(whole, micros);
    client.set_read_timeout(whole, micros);
    client.set_write_timeout(whole, micros);
    if (!config_.auth_token_env.empty()) {
      if (const char* token = std::getenv(config_.auth_token_env.c_str()); token && *token) {
        client.set_default_headers({{"Authorization", std::string("Bearer ") + token}});
      }
    }

    auto res = client.Post(path, body, "application/json");
    if (!res) {
      switch (res.error()) {
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::Read:
        case httplib::Error::Write:
          throw Timeout("remote scorer: request to " + config_.endpoint + " timed out");
        default:
          throw Unreachable("remote scorer: cannot reach " + config_.endpoint);
      }
    }
    if (res->status != 200) {
      throw MalformedResponse("remote scorer: HTTP " + std::to_string(res->status));
    }

    json parsed;
    try {
      parsed = json::parse(res->body);
    } catch (const json::exception&) {
      throw MalformedResponse("remote scorer: response is not valid JSON");
    }
    if (!parsed.is_object() || !parsed.contains("ambiguous_probability") ||
        !parsed["ambiguous_probability"].is_number()) {
      throw MalformedResponse("remote scorer: missing numeric ambiguous_probability");
    }
    const double raw = parsed["ambiguous_probability"].get<double>();
    if (!std::isfinite(raw)) throw MalformedResponse("remote scorer: non-finite score");
    if (config_.strict_range && (raw < -1e-9 || raw > 1.0 + 1e-9)) {
      throw MalformedResponse("remote scorer: score " + std::to_string(raw) +
                              " outside [0, 1]");
    }
    return std::clamp(raw, 0.0, 1.0);
  };

  for (int tries_left = config_.max_retries;; --tries_left) {
    try {
      AmbiguityScore s;
      s.p_amb = attempt();
      s.scorer_id = "remote";
      s.latency = seconds_since(t0);
      return s;
    } catch (const ScorerError&) {
      if (tries_left == 0) throw;
    }
  }
}

AmbiguityScore score_ambiguity(const AmbiguityScorer& scorer, const ViewDescriptor& descriptor,
                               const GeometricPrompt& prompt) {
  return scorer.score(descriptor, prompt);
}

std::string render_prompt_json(const GeometricPrompt& prompt, int indent) {
  return prompt_body(prompt).dump(indent);
}

std::string render_score_request(const GeometricPrompt& prompt, const ViewDescriptor& live_view) {
  json j = prompt_body(prompt);
  j["live_view"] = view_summary(live_view, nullptr);
  j["instruction"] =
      "Compare the live view against the reference views and respond with "
      "{\"ambiguous_probability\": <number in [0,1]>}.";
  return j.dump();
}

void export_prompt(const std::string& path, const GeometricPrompt& prompt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write prompt to " + path);
  out << render_prompt_json(prompt) << "\n";
}

}  // namespace activepose
