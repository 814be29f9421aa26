#include "dlab/http_backend.hpp"

#include "dlab/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dlab::sim {

namespace {

using json = nlohmann::json;

json param_value(const std::string& text) {
  try {
    json parsed = json::parse(text);
    if (parsed.is_number() || parsed.is_boolean()) return parsed;
  } catch (const json::exception&) {
  }
  return text;
}

bool transient_status(int status) { return status == 408 || status == 409 || status == 429 || status >= 500; }

}  // namespace

std::string build_chat_request(const BackendRequest& request, std::string_view model) {
  nlohmann::ordered_json body;
  body["model"] = std::string(model);
  nlohmann::ordered_json messages = nlohmann::ordered_json::array();
  messages.push_back({{"role", "system"}, {"content", request.system_text}});
  for (const ChatMessage& m : request.history) messages.push_back({{"role", m.role}, {"content", m.text}});
  body["messages"] = std::move(messages);
  for (const auto& [key, value] : request.params) body[key] = param_value(value);
  return body.dump();
}

BackendReply parse_chat_response(std::string_view body) {
  json parsed;
  try {
    parsed = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("malformed chat response: ") + e.what(), false);
  }
  try {
    BackendReply reply;
    const json& content = parsed.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError("chat response content is not a string", false);
    reply.text = content.get<std::string>();
    if (auto usage = parsed.find("usage"); usage != parsed.end() && usage->is_object())
      for (const auto& [key, value] : usage->items())
        if (value.is_number_integer()) reply.usage[key] = std::to_string(value.get<long long>());
    return reply;
  } catch (const json::exception& e) {
    throw BackendError(std::string("unexpected chat response shape: ") + e.what(), false);
  }
}

HttpChatBackend::HttpChatBackend(std::string base_url, std::string model, std::string token,
                                 std::chrono::seconds timeout)
    : model_(std::move(model)), token_(std::move(token)), timeout_(timeout) {
  const std::size_t scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw BackendError("backend URL needs a scheme: " + base_url, false);
  const std::size_t path_start = base_url.find('/', scheme_end + 3);
  origin_ = base_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? std::string() : base_url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  constexpr std::string_view suffix = "/chat/completions";
  if (path_.size() < suffix.size() || path_.compare(path_.size() - suffix.size(), suffix.size(), suffix) != 0)
    path_ += suffix;
}

BackendReply HttpChatBackend::complete(const BackendRequest& request) {
  // One client per call: httplib clients are not meant to be shared across threads.
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  auto model = request.params.find("model");
  const std::string body = build_chat_request(request, model != request.params.end() ? model->second : model_);
  auto result = client.Post(path_, headers, body, "application/json");
  if (!result) throw BackendError("request to " + origin_ + path_ + " failed: " + httplib::to_string(result.error()), true);
  if (result->status != 200)
    throw BackendError("chat backend returned HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200),
                       transient_status(result->status));
  return parse_chat_response(result->body);
}

}  // namespace dlab::sim
