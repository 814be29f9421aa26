#include "dlab/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <optional>
#include <set>
#include <stdexcept>
#include <thread>

#include "dlab/error.hpp"
#include "dlab/manifest.hpp"
#include "json.hpp"

namespace dlab::sim {

namespace {

using json = nlohmann::json;

constexpr std::string_view kDeanInstruction =
    "Decide the next turn. Reply with TEACHER, STUDENT, or TERMINATE, followed by a brief reason.";
constexpr std::string_view kDeanClarification =
    "Your previous reply could not be parsed. Answer with exactly one of TEACHER, STUDENT, or TERMINATE.";

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view() : text.substr(newline + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    fn(line, line_no);
  }
}

json parse_line(std::string_view line, std::size_t line_no) {
  try {
    json value = json::parse(line);
    if (!value.is_object()) throw ParseError("expected an object", line_no);
    return value;
  } catch (const json::parse_error& e) {
    std::string message = e.what();
    if (auto pos = message.find(": "); pos != std::string::npos) message = message.substr(pos + 2);
    throw ParseError(message, line_no, e.byte);
  }
}

std::string string_field(const json& object, const char* key, std::size_t line_no, bool required = true) {
  auto it = object.find(key);
  if (it == object.end()) {
    if (required) throw ParseError(std::string("missing key '") + key + "'", line_no);
    return {};
  }
  if (!it->is_string()) throw ParseError(std::string("key '") + key + "' must be a string", line_no);
  return it->get<std::string>();
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

Role speaker_of(AgentRole role) { return role == AgentRole::student ? Role::student : Role::teacher; }

const AgentConfig& config_for(const AgentConfigs& configs, AgentRole role) {
  switch (role) {
    case AgentRole::teacher: return configs.teacher;
    case AgentRole::student: return configs.student;
    case AgentRole::dean: return configs.dean;
  }
  return configs.dean;
}

BackendRequest speaker_request(AgentRole role, std::span<const Utterance> history, const SimulationScenario& scenario,
                               const AgentConfig& config) {
  BackendRequest request;
  request.agent = role;
  request.session = scenario.problem_id;
  request.system_text = render_template(config, scenario, render_history(history));
  request.params = config.params;
  const Role self = speaker_of(role);
  for (const Utterance& u : history) request.history.push_back({u.speaker == self ? "assistant" : "user", u.text});
  if (request.history.empty()) {
    request.history.push_back({"user", "Begin the tutoring session."});
  } else if (request.history.back().role == "assistant") {
    request.history.push_back({"user", "Continue."});
  }
  return request;
}

}  // namespace

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::teacher: return "teacher";
    case AgentRole::student: return "student";
    case AgentRole::dean: return "dean";
  }
  return "";
}

std::string_view to_string(TurnAction action) {
  switch (action) {
    case TurnAction::speak_teacher: return "speak_teacher";
    case TurnAction::speak_student: return "speak_student";
    case TurnAction::terminate: return "terminate";
  }
  return "";
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies) {
  for (auto& r : replies) shared_.entries.push_back({std::move(r), false});
}

ScriptedBackend::ScriptedBackend(std::vector<Entry> shared, std::map<std::string, std::vector<Entry>> sessions) {
  shared_.entries = std::move(shared);
  for (auto& [session, entries] : sessions) sessions_[session].entries = std::move(entries);
}

BackendReply ScriptedBackend::complete(const BackendRequest& request) {
  std::lock_guard lock(mutex_);
  log_.push_back(request);
  auto it = sessions_.find(request.session);
  Queue& queue = it != sessions_.end() ? it->second : shared_;
  if (queue.next >= queue.entries.size())
    throw BackendError("script exhausted" + (it != sessions_.end() ? " for session '" + request.session + "'" : std::string()),
                       false);
  const Entry& entry = queue.entries[queue.next++];
  if (entry.fail) throw BackendError(entry.reply, true);
  return {entry.reply, {}};
}

std::vector<BackendRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return log_.size();
}

std::map<std::string, std::vector<ScriptedBackend::Entry>> parse_script(std::string_view text) {
  std::map<std::string, std::vector<ScriptedBackend::Entry>> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const json object = parse_line(line, line_no);
    const std::string session = string_field(object, "session", line_no, false);
    if (object.contains("error")) {
      out[session].push_back({string_field(object, "error", line_no), true});
    } else {
      out[session].push_back({string_field(object, "reply", line_no), false});
    }
  });
  return out;
}

std::unique_ptr<ScriptedBackend> load_script(std::string_view text) {
  auto entries = parse_script(text);
  std::vector<ScriptedBackend::Entry> shared;
  if (auto it = entries.find(""); it != entries.end()) {
    shared = std::move(it->second);
    entries.erase(it);
  }
  return std::make_unique<ScriptedBackend>(std::move(shared), std::move(entries));
}

std::vector<SimulationScenario> parse_scenarios(std::string_view text) {
  std::vector<SimulationScenario> out;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    const json object = parse_line(line, line_no);
    SimulationScenario s{string_field(object, "problem_id", line_no), string_field(object, "question", line_no),
                         string_field(object, "tutoring_approach", line_no),
                         string_field(object, "student_profile", line_no, false)};
    if (s.problem_id.empty()) throw ParseError("empty problem_id", line_no);
    if (trim(s.question).empty()) throw SchemaError(s.problem_id, "question is empty");
    if (trim(s.tutoring_approach).empty()) throw SchemaError(s.problem_id, "tutoring_approach is empty");
    out.push_back(std::move(s));
  });
  return out;
}

std::string serialize_scenarios(std::span<const SimulationScenario> scenarios) {
  std::string out;
  for (const SimulationScenario& s : scenarios) {
    nlohmann::ordered_json object;
    object["problem_id"] = s.problem_id;
    object["question"] = s.question;
    object["tutoring_approach"] = s.tutoring_approach;
    object["student_profile"] = s.student_profile;
    out += object.dump() + '\n';
  }
  return out;
}

std::vector<std::string_view> allowed_placeholders(AgentRole role) {
  switch (role) {
    case AgentRole::teacher: return {"question", "approach", "history"};
    case AgentRole::student: return {"question", "profile", "history"};
    case AgentRole::dean: return {"question", "approach", "profile", "history"};
  }
  return {};
}

namespace {

// Walks a template, calling on_text for literal runs and on_name for {name} placeholders.
template <typename Text, typename Name>
void scan_template(std::string_view tpl, Text&& on_text, Name&& on_name) {
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl.compare(i, 2, "{{") == 0 || tpl.compare(i, 2, "}}") == 0) {
      on_text(tpl.substr(i, 1));
      i += 2;
      continue;
    }
    if (tpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tpl.size() && (std::islower(static_cast<unsigned char>(tpl[j])) || tpl[j] == '_')) ++j;
      if (j < tpl.size() && tpl[j] == '}' && j > i + 1) {
        on_name(tpl.substr(i + 1, j - i - 1));
        i = j + 1;
        continue;
      }
    }
    on_text(tpl.substr(i, 1));
    ++i;
  }
}

}  // namespace

void check_template(const AgentConfig& config) {
  const auto allowed = allowed_placeholders(config.role);
  if (trim(config.prompt_template).empty())
    throw SimulationError(std::string(to_string(config.role)) + " prompt template is empty");
  scan_template(config.prompt_template, [](std::string_view) {}, [&](std::string_view name) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
      throw SimulationError(std::string(to_string(config.role)) + " prompt template uses unresolvable placeholder {" +
                            std::string(name) + "}");
  });
}

std::string render_template(const AgentConfig& config, const SimulationScenario& scenario, std::string_view history) {
  check_template(config);
  std::string out;
  scan_template(config.prompt_template, [&](std::string_view text) { out += text; }, [&](std::string_view name) {
    if (name == "question") out += scenario.question;
    else if (name == "approach") out += scenario.tutoring_approach;
    else if (name == "profile") out += scenario.student_profile;
    else if (name == "history") out += history.empty() ? std::string_view("(no turns yet)") : history;
  });
  return out;
}

AgentConfigs load_agent_configs(const std::filesystem::path& directory) {
  AgentConfigs configs;
  configs.teacher = {AgentRole::teacher, read_file(directory / "teacher.txt"), {}};
  configs.student = {AgentRole::student, read_file(directory / "student.txt"), {}};
  configs.dean = {AgentRole::dean, read_file(directory / "dean.txt"), {}};
  check_template(configs.teacher);
  check_template(configs.student);
  check_template(configs.dean);
  return configs;
}

TurnDecision parse_turn_decision(std::string_view reply) {
  static constexpr std::pair<std::string_view, TurnAction> kTokens[] = {
      {"teacher", TurnAction::speak_teacher},
      {"student", TurnAction::speak_student},
      {"terminate", TurnAction::terminate},
  };
  const std::string lower = lowercase(reply);
  std::optional<std::pair<std::size_t, std::size_t>> best;  // position, token index
  for (std::size_t t = 0; t < std::size(kTokens); ++t) {
    const std::string_view token = kTokens[t].first;
    for (std::size_t pos = lower.find(token); pos != std::string::npos; pos = lower.find(token, pos + 1)) {
      const bool left = pos == 0 || !is_word_char(lower[pos - 1]);
      const bool right = pos + token.size() >= lower.size() || !is_word_char(lower[pos + token.size()]);
      if (left && right) {
        if (!best || pos < best->first) best = {pos, t};
        break;
      }
    }
  }
  if (!best) throw DeanParseError(std::string(reply));

  const auto [pos, t] = *best;
  std::string rest = std::string(reply.substr(0, pos)) + std::string(reply.substr(pos + kTokens[t].first.size()));
  std::string_view rationale = trim(rest);
  while (!rationale.empty() && (rationale.front() == ':' || rationale.front() == '-' || rationale.front() == ','))
    rationale = trim(rationale.substr(1));
  return {kTokens[t].second, std::string(rationale)};
}

std::string render_history(std::span<const Utterance> history) {
  std::string out;
  for (const Utterance& u : history) {
    if (!out.empty()) out += '\n';
    out += u.speaker == Role::teacher ? "Teacher: " : "Student: ";
    out += u.text;
  }
  return out;
}

BackendReply complete_with_retry(ChatBackend& backend, const BackendRequest& request, const RetryPolicy& retry) {
  auto backoff = retry.initial_backoff;
  const int attempts = std::max(1, retry.attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      BackendReply reply = backend.complete(request);
      if (trim(reply.text).empty()) throw BackendError("empty reply", true);
      return reply;
    } catch (const BackendError& e) {
      if (!e.transient() || attempt >= attempts) throw;
    }
    if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

TurnDecision dean_decide(std::span<const Utterance> history, const SimulationScenario& scenario,
                         const AgentConfig& dean, ChatBackend& backend, const RetryPolicy& retry) {
  BackendRequest request;
  request.agent = AgentRole::dean;
  request.session = scenario.problem_id;
  request.system_text = render_template(dean, scenario, render_history(history));
  request.params = dean.params;
  request.history.push_back({"user", std::string(kDeanInstruction)});

  const BackendReply first = complete_with_retry(backend, request, retry);
  try {
    return parse_turn_decision(first.text);
  } catch (const DeanParseError&) {
  }
  request.history.push_back({"assistant", first.text});
  request.history.push_back({"user", std::string(kDeanClarification)});
  return parse_turn_decision(complete_with_retry(backend, request, retry).text);
}

Dialogue run_simulation(const SimulationScenario& scenario, const AgentConfigs& configs, ChatBackend& backend,
                        const SimulationLimits& limits) {
  if (limits.max_turns < 2) throw SimulationError("max_turns must be at least 2");
  if (limits.max_chars == 0) throw SimulationError("max_chars must be positive");
  check_template(configs.teacher);
  check_template(configs.student);
  check_template(configs.dean);

  Dialogue dialogue;
  dialogue.id = "ai-" + scenario.problem_id;
  dialogue.group = Group::ai;
  dialogue.problem_id = scenario.problem_id;

  std::size_t chars = 0;
  while (true) {
    if (dialogue.utterances.size() >= limits.max_turns) {
      dialogue.metadata["truncated"] = "max_turns";
      break;
    }
    if (chars >= limits.max_chars) {
      dialogue.metadata["truncated"] = "max_chars";
      break;
    }
    const TurnDecision decision = dean_decide(dialogue.utterances, scenario, configs.dean, backend, limits.retry);
    if (decision.action == TurnAction::terminate) break;
    const AgentRole role = decision.action == TurnAction::speak_teacher ? AgentRole::teacher : AgentRole::student;
    const BackendRequest request = speaker_request(role, dialogue.utterances, scenario, config_for(configs, role));
    const BackendReply reply = complete_with_retry(backend, request, limits.retry);
    std::string text(trim(reply.text));
    chars += count_scalars(text);
    dialogue.utterances.push_back({speaker_of(role), std::move(text), std::nullopt});
  }

  const Corpus single{{dialogue}, {}};
  if (auto violations = validate(single); !violations.empty())
    throw SimulationError("simulated dialogue for '" + scenario.problem_id + "' is invalid: " + to_string(violations.front()));
  return dialogue;
}

BatchResult batch_simulate(std::span<const SimulationScenario> scenarios, const AgentConfigs& configs,
                           ChatBackend& backend, const SimulationLimits& limits, std::size_t concurrency) {
  std::set<std::string> ids;
  for (const auto& s : scenarios)
    if (!ids.insert(s.problem_id).second) throw std::invalid_argument("duplicate problem_id '" + s.problem_id + "'");

  std::vector<std::optional<Dialogue>> dialogues(scenarios.size());
  std::vector<std::optional<std::string>> errors(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        dialogues[i] = run_simulation(scenarios[i], configs, backend, limits);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(concurrency, 1, std::max<std::size_t>(1, scenarios.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  BatchResult result;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (dialogues[i]) result.corpus.dialogues.push_back(std::move(*dialogues[i]));
    if (errors[i]) result.failures.push_back({scenarios[i].problem_id, *errors[i]});
  }
  std::sort(result.corpus.dialogues.begin(), result.corpus.dialogues.end(),
            [](const Dialogue& a, const Dialogue& b) { return a.problem_id < b.problem_id; });
  std::sort(result.failures.begin(), result.failures.end(),
            [](const auto& a, const auto& b) { return a.problem_id < b.problem_id; });
  return result;
}

}  // namespace dlab::sim
