#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlab/corpus.hpp"
#include "dlab/error.hpp"

namespace dlab::sim {

enum class AgentRole { teacher, student, dean };

std::string_view to_string(AgentRole role);

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string text;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct BackendRequest {
  AgentRole agent = AgentRole::teacher;
  std::string session;  // problem_id of the dialogue being simulated
  std::string system_text;
  std::vector<ChatMessage> history;
  std::map<std::string, std::string> params;

  friend bool operator==(const BackendRequest&, const BackendRequest&) = default;
};

struct BackendReply {
  std::string text;
  std::map<std::string, std::string> usage;
};

/// A chat-completion endpoint. Implementations must be safe to call from several threads.
/// Failures throw BackendError; transient() marks errors worth retrying.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply complete(const BackendRequest& request) = 0;
};

/// Deterministic test double serving canned replies in order. Replies may be keyed by
/// session, so concurrent dialogues each consume their own queue; requests whose session has
/// no queue draw from the shared one. Exhaustion throws a non-transient BackendError.
class ScriptedBackend final : public ChatBackend {
 public:
  struct Entry {
    std::string reply;
    bool fail = false;  // throw a transient BackendError carrying `reply` instead of answering
  };

  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<std::string> replies);
  ScriptedBackend(std::vector<Entry> shared, std::map<std::string, std::vector<Entry>> sessions);

  BackendReply complete(const BackendRequest& request) override;

  std::vector<BackendRequest> requests() const;
  std::size_t calls() const;

 private:
  struct Queue {
    std::vector<Entry> entries;
    std::size_t next = 0;
  };

  mutable std::mutex mutex_;
  Queue shared_;
  std::map<std::string, Queue> sessions_;
  std::vector<BackendRequest> log_;
};

/// Script file: one JSON object per line, `{"reply": ..}` or `{"error": ..}` for an injected
/// transient failure, with an optional `"session"` key.
/// Entries without a session are returned under the empty key.
std::map<std::string, std::vector<ScriptedBackend::Entry>> parse_script(std::string_view text);
std::unique_ptr<ScriptedBackend> load_script(std::string_view text);

struct SimulationScenario {
  std::string problem_id;
  std::string question;
  std::string tutoring_approach;
  std::string student_profile;
};

/// One scenario per line with keys problem_id, question, tutoring_approach, student_profile.
std::vector<SimulationScenario> parse_scenarios(std::string_view text);
std::string serialize_scenarios(std::span<const SimulationScenario> scenarios);

struct AgentConfig {
  AgentRole role = AgentRole::teacher;
  std::string prompt_template;  // placeholders {question} {approach} {profile} {history}
  std::map<std::string, std::string> params;
};

struct AgentConfigs {
  AgentConfig teacher;
  AgentConfig student;
  AgentConfig dean;
};

/// Placeholders each role may use. The teacher does not see the hidden student profile and
/// the student does not see the tutoring approach.
std::vector<std::string_view> allowed_placeholders(AgentRole role);

/// Throws SimulationError naming any placeholder the role cannot resolve.
void check_template(const AgentConfig& config);

std::string render_template(const AgentConfig& config, const SimulationScenario& scenario, std::string_view history);

/// Reads teacher.txt, student.txt, dean.txt from `directory`.
AgentConfigs load_agent_configs(const std::filesystem::path& directory);

enum class TurnAction { speak_teacher, speak_student, terminate };

std::string_view to_string(TurnAction action);

struct TurnDecision {
  TurnAction action = TurnAction::terminate;
  std::string rationale;
};

/// Parse failure of a dean reply; keeps the raw reply for audit.
class DeanParseError : public SimulationError {
 public:
  explicit DeanParseError(std::string reply)
      : SimulationError("dean reply has no TEACHER/STUDENT/TERMINATE token: \"" + reply + "\""),
        reply_(std::move(reply)) {}
  const std::string& reply() const noexcept { return reply_; }

 private:
  std::string reply_;
};

/// The earliest whole-word, case-insensitive occurrence of TEACHER, STUDENT, or TERMINATE
/// decides; the remaining text is the rationale.
TurnDecision parse_turn_decision(std::string_view reply);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};  // doubles after each failed attempt
};

struct SimulationLimits {
  std::size_t max_turns = 30;
  std::size_t max_chars = 20000;  // transcript budget in Unicode scalars
  RetryPolicy retry;
};

/// "Teacher: ...\nStudent: ..." transcript used for the {history} placeholder.
std::string render_history(std::span<const Utterance> history);

/// Calls `backend` with bounded retries on transient errors.
BackendReply complete_with_retry(ChatBackend& backend, const BackendRequest& request, const RetryPolicy& retry);

/// Asks the dean for the next move. An unparseable reply is retried once with a clarification
/// appended; a second failure throws DeanParseError.
TurnDecision dean_decide(std::span<const Utterance> history, const SimulationScenario& scenario,
                         const AgentConfig& dean, ChatBackend& backend, const RetryPolicy& retry = {});

/// Dean-mediated loop producing one ai-group dialogue with id "ai-<problem_id>". Stops on
/// TERMINATE or when a limit is reached (metadata "truncated" = "max_turns" | "max_chars").
/// Throws SimulationError if the result would not validate (e.g. a role never spoke).
Dialogue run_simulation(const SimulationScenario& scenario, const AgentConfigs& configs, ChatBackend& backend,
                        const SimulationLimits& limits = {});

struct SimulationFailure {
  std::string problem_id;
  std::string message;
};

struct BatchResult {
  Corpus corpus;  // sorted by problem_id
  std::vector<SimulationFailure> failures;
};

/// Runs every scenario with at most `concurrency` dialogues in flight. Throws
/// std::invalid_argument for duplicate problem ids; per-scenario errors are collected.
BatchResult batch_simulate(std::span<const SimulationScenario> scenarios, const AgentConfigs& configs,
                           ChatBackend& backend, const SimulationLimits& limits = {}, std::size_t concurrency = 1);

}  // namespace dlab::sim
