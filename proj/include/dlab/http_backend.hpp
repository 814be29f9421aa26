#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "dlab/sim.hpp"

namespace dlab::sim {

/// Request body in the common chat-completions schema: {"model", "messages":[system, history...], params...}.
/// Parameter values that parse as JSON numbers or booleans are sent as such, the rest as strings.
std::string build_chat_request(const BackendRequest& request, std::string_view model);

/// Extracts choices[0].message.content and the usage counters. Throws BackendError (permanent)
/// on an unexpected body.
BackendReply parse_chat_response(std::string_view body);

/// POSTs to `<base_url>/chat/completions` with `Authorization: Bearer <token>` when a token is
/// given. Connection failures, 408, 409, 429 and 5xx are transient.
class HttpChatBackend final : public ChatBackend {
 public:
  HttpChatBackend(std::string base_url, std::string model, std::string token,
                  std::chrono::seconds timeout = std::chrono::seconds(120));

  BackendReply complete(const BackendRequest& request) override;

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;
  std::string model_;
  std::string token_;
  std::chrono::seconds timeout_;
};

}  // namespace dlab::sim
