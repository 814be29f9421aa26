#include "doctest.h"

#include <random>
#include <thread>

#include "dlab/error.hpp"
#include "dlab/http_backend.hpp"
#include "dlab/sim.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace dlab;
using namespace dlab::sim;

namespace {

using Entry = ScriptedBackend::Entry;

AgentConfigs configs() {
  return {{AgentRole::teacher, "Teach {question} using {approach}.\n{history}", {{"temperature", "0.7"}}},
          {AgentRole::student, "You are {profile}. Solve {question}.\n{history}", {}},
          {AgentRole::dean, "Supervise {question} ({approach}, {profile}).\n{history}", {{"temperature", "0"}}}};
}

SimulationScenario scenario(std::string pid = "p01") {
  return {std::move(pid), "What is 5+3?", "Socratic questioning", "Grade 3, shy"};
}

SimulationLimits limits(std::size_t max_turns = 30) {
  SimulationLimits l;
  l.max_turns = max_turns;
  l.retry.initial_backoff = std::chrono::milliseconds(0);
  return l;
}

// Dean decision then speaker text for each turn, then a final terminate.
std::vector<Entry> scripted_turns(const std::vector<std::string>& turns, bool terminate = true) {
  std::vector<Entry> out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    out.push_back({i % 2 == 0 ? "TEACHER" : "STUDENT: their turn", false});
    out.push_back({turns[i], false});
  }
  if (terminate) out.push_back({"TERMINATE", false});
  return out;
}

ScriptedBackend session(const std::string& pid, std::vector<Entry> entries) {
  std::map<std::string, std::vector<Entry>> sessions;
  sessions.emplace(pid, std::move(entries));
  return ScriptedBackend({}, std::move(sessions));
}

}  // namespace

TEST_CASE("dean reply parsing") {
  CHECK(parse_turn_decision("TEACHER: student needs another hint").action == TurnAction::speak_teacher);
  CHECK(parse_turn_decision("TEACHER: student needs another hint").rationale == "student needs another hint");
  CHECK(parse_turn_decision("I think we should TERMINATE now").action == TurnAction::terminate);
  CHECK(parse_turn_decision("student").action == TurnAction::speak_student);
  CHECK(parse_turn_decision("Teacher first, then the student").action == TurnAction::speak_teacher);
  CHECK(parse_turn_decision("let the STUDENT answer before the teacher").action == TurnAction::speak_student);
  CHECK_THROWS_AS(parse_turn_decision("maybe?"), DeanParseError);
  CHECK_THROWS_AS(parse_turn_decision("the students are teachers"), DeanParseError);
  try {
    parse_turn_decision("maybe?");
  } catch (const DeanParseError& e) {
    CHECK(e.reply() == "maybe?");
  }
}

TEST_CASE("scripted backend") {
  ScriptedBackend b(std::vector<std::string>{"one", "two", "three"});
  BackendRequest r;
  CHECK(b.complete(r).text == "one");
  CHECK(b.complete(r).text == "two");
  CHECK(b.complete(r).text == "three");
  try {
    b.complete(r);
    FAIL("expected exhaustion");
  } catch (const BackendError& e) {
    CHECK_FALSE(e.transient());
  }
  CHECK(b.calls() == 4);
  CHECK(b.requests().size() == b.calls());
}

TEST_CASE("script files") {
  const auto script = parse_script(
      "{\"session\":\"p1\",\"reply\":\"TEACHER\"}\n{\"reply\":\"shared\"}\n{\"session\":\"p1\",\"error\":\"rate limit\"}\n");
  REQUIRE(script.size() == 2);
  CHECK(script.at("p1").size() == 2);
  CHECK(script.at("p1")[1].fail);
  CHECK(script.at("")[0].reply == "shared");
  CHECK_THROWS_AS(parse_script("{\"session\":\"p1\"}\n"), ParseError);
  CHECK_THROWS_AS(parse_script("not json\n"), ParseError);
}

TEST_CASE("templates") {
  auto c = configs();
  CHECK(render_template(c.teacher, scenario(), "") ==
        "Teach What is 5+3? using Socratic questioning.\n(no turns yet)");
  AgentConfig escaped{AgentRole::student, "{{profile}} is {profile}", {}};
  CHECK(render_template(escaped, scenario(), "") == "{profile} is Grade 3, shy");
  AgentConfig leaky{AgentRole::teacher, "Profile: {profile}", {}};
  CHECK_THROWS_AS(check_template(leaky), SimulationError);
  AgentConfig unknown{AgentRole::dean, "{mood}", {}};
  CHECK_THROWS_AS(check_template(unknown), SimulationError);
}

TEST_CASE("scenario files") {
  const std::vector<SimulationScenario> s{scenario("p01"), scenario("p02")};
  const auto parsed = parse_scenarios(serialize_scenarios(s));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].problem_id == "p02");
  CHECK(parsed[0].student_profile == "Grade 3, shy");
  CHECK_THROWS(parse_scenarios(
      "{\"problem_id\":\"p\",\"question\":\"\",\"tutoring_approach\":\"a\",\"student_profile\":\"b\"}\n"));
}

TEST_CASE("run_simulation") {
  const auto cfg = configs();
  SUBCASE("six scripted turns then terminate") {
    ScriptedBackend b = session("p01", scripted_turns({"What is 5+3?", "8", "Good. And 6+3?", "9", "Great.", "Thanks"}));
    const Dialogue d = run_simulation(scenario(), cfg, b, limits());
    REQUIRE(d.utterances.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(d.utterances[i].speaker == (i % 2 ? Role::student : Role::teacher));
    CHECK(d.id == "ai-p01");
    CHECK(d.group == Group::ai);
    CHECK(validate(Corpus{{d}, {}}).empty());
    CHECK_FALSE(d.metadata.count("truncated"));

    // Request shapes: dean first, every speaker call preceded by a dean call.
    const auto log = b.requests();
    REQUIRE(log.size() == 13);
    CHECK(log[0].agent == AgentRole::dean);
    CHECK(log[0].params.at("temperature") == "0");
    CHECK(log[1].agent == AgentRole::teacher);
    CHECK(log[1].history.front().text == "Begin the tutoring session.");
    CHECK(log[3].agent == AgentRole::student);
    CHECK(log[3].history.back() == ChatMessage{"user", "What is 5+3?"});
    CHECK(log[5].history.size() == 2);
    CHECK(log[5].history[0] == ChatMessage{"assistant", "What is 5+3?"});
    CHECK(log[12].system_text.find("Student: Thanks") != std::string::npos);
  }
  SUBCASE("terminate after two turns") {
    ScriptedBackend b = session("p01", scripted_turns({"Hi", "Hello"}));
    CHECK(run_simulation(scenario(), cfg, b, limits()).utterances.size() == 2);
  }
  SUBCASE("dean never terminates") {
    std::vector<std::string> turns(40, "more");
    ScriptedBackend b = session("p01", scripted_turns(turns, false));
    const Dialogue d = run_simulation(scenario(), cfg, b, limits(30));
    CHECK(d.utterances.size() == 30);
    CHECK(d.metadata.at("truncated") == "max_turns");
  }
  SUBCASE("character budget") {
    std::vector<std::string> turns(40, std::string(50, 'x'));
    ScriptedBackend b = session("p01", scripted_turns(turns, false));
    SimulationLimits l = limits();
    l.max_chars = 120;
    const Dialogue d = run_simulation(scenario(), cfg, b, l);
    CHECK(d.utterances.size() == 3);
    CHECK(d.metadata.at("truncated") == "max_chars");
  }
  SUBCASE("unparseable dean reply is retried once with a clarification") {
    auto script = scripted_turns({"Hi", "Hello"});
    script.insert(script.begin(), Entry{"hmm", false});
    ScriptedBackend b = session("p01", script);
    CHECK(run_simulation(scenario(), cfg, b, limits()).utterances.size() == 2);
    const auto log = b.requests();
    CHECK(log[1].agent == AgentRole::dean);
    REQUIRE(log[1].history.size() == 3);
    CHECK(log[1].history[1] == ChatMessage{"assistant", "hmm"});
  }
  SUBCASE("two unparseable dean replies fail") {
    ScriptedBackend b = session("p01", std::vector<Entry>{{"hmm", false}, {"still unsure", false}});
    CHECK_THROWS_AS(run_simulation(scenario(), cfg, b, limits()), DeanParseError);
  }
  SUBCASE("transient failures are retried up to three attempts") {
    auto script = scripted_turns({"Hi", "Hello"});
    script.insert(script.begin() + 1, {{"rate limit", true}, {"rate limit", true}});
    ScriptedBackend ok = session("p01", script);
    CHECK(run_simulation(scenario(), cfg, ok, limits()).utterances.size() == 2);

    auto failing = scripted_turns({"Hi", "Hello"});
    failing.insert(failing.begin() + 1, {{"down", true}, {"down", true}, {"down", true}});
    ScriptedBackend bad = session("p01", failing);
    CHECK_THROWS_AS(run_simulation(scenario(), cfg, bad, limits()), BackendError);
  }
  SUBCASE("a dialogue where only the teacher speaks is rejected") {
    ScriptedBackend b = session("p01", std::vector<Entry>{{"TEACHER", false}, {"a", false}, {"TEACHER", false},
                                                        {"b", false}, {"TERMINATE", false}});
    CHECK_THROWS_AS(run_simulation(scenario(), cfg, b, limits()), SimulationError);
  }
  SUBCASE("empty replies count as transient") {
    auto script = scripted_turns({"Hi", "Hello"});
    script.insert(script.begin() + 1, Entry{"   ", false});
    ScriptedBackend b = session("p01", script);
    CHECK(run_simulation(scenario(), cfg, b, limits()).utterances[0].text == "Hi");
  }
}

TEST_CASE("run_simulation is deterministic") {
  const auto cfg = configs();
  std::string first;
  for (int run = 0; run < 10; ++run) {
    ScriptedBackend b = session("p01", scripted_turns({"What is 5+3?", "8", "Good.", "Thanks"}));
    const std::string text = serialize_dialogue(run_simulation(scenario(), cfg, b, limits()));
    if (run == 0) first = text;
    CHECK(text == first);
  }
}

TEST_CASE("batch_simulate") {
  const auto cfg = configs();
  SUBCASE("no scenarios") {
    ScriptedBackend b;
    const auto r = batch_simulate({}, cfg, b, limits(), 4);
    CHECK(r.corpus.dialogues.empty());
    CHECK(r.failures.empty());
  }
  SUBCASE("one failing scenario") {
    std::vector<SimulationScenario> s{scenario("p3"), scenario("p1"), scenario("p2")};
    ScriptedBackend b({}, {{"p1", scripted_turns({"a", "b"})}, {"p2", std::vector<Entry>{{"down", true}, {"down", true}, {"down", true}}},
                           {"p3", scripted_turns({"c", "d", "e"})}});
    const auto r = batch_simulate(s, cfg, b, limits(), 3);
    REQUIRE(r.corpus.dialogues.size() == 2);
    CHECK(r.corpus.dialogues[0].problem_id == "p1");
    CHECK(r.corpus.dialogues[1].problem_id == "p3");
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].problem_id == "p2");
  }
  SUBCASE("duplicate problem ids") {
    std::vector<SimulationScenario> s{scenario("p1"), scenario("p1")};
    ScriptedBackend b;
    CHECK_THROWS_AS(batch_simulate(s, cfg, b, limits(), 1), std::invalid_argument);
  }
  SUBCASE("output does not depend on concurrency") {
    std::vector<SimulationScenario> s;
    std::map<std::string, std::vector<Entry>> script;
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
      const std::string pid = "q" + std::to_string(i);
      s.push_back(scenario(pid));
      std::vector<std::string> turns(2 + rng() % 8);
      for (auto& t : turns) t = "turn " + std::to_string(rng() % 1000);
      script[pid] = scripted_turns(turns);
    }
    std::shuffle(s.begin(), s.end(), rng);
    std::string reference;
    for (std::size_t c : {1, 2, 8, 32}) {
      ScriptedBackend b({}, script);
      const auto r = batch_simulate(s, cfg, b, limits(), c);
      CHECK(r.failures.empty());
      const std::string text = serialize_corpus(r.corpus);
      if (reference.empty()) reference = text;
      CHECK(text == reference);
    }
  }
}

TEST_CASE("chat-completions wire format") {
  BackendRequest r;
  r.system_text = "sys";
  r.history = {{"user", "hi"}, {"assistant", "hello"}};
  r.params = {{"temperature", "0.7"}, {"stream", "false"}, {"stop", "END"}};
  const auto body = nlohmann::json::parse(build_chat_request(r, "gpt-4o"));
  CHECK(body["model"] == "gpt-4o");
  REQUIRE(body["messages"].size() == 3);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][2]["content"] == "hello");
  CHECK(body["temperature"] == 0.7);
  CHECK(body["stream"] == false);
  CHECK(body["stop"] == "END");

  const auto reply = parse_chat_response(
      R"({"choices":[{"message":{"role":"assistant","content":"TEACHER"}}],"usage":{"prompt_tokens":12,"completion_tokens":1}})");
  CHECK(reply.text == "TEACHER");
  CHECK(reply.usage.at("prompt_tokens") == "12");
  CHECK_THROWS_AS(parse_chat_response("{}"), BackendError);
  CHECK_THROWS_AS(parse_chat_response("<html>"), BackendError);
}

TEST_CASE("http backend against a local server") {
  httplib::Server server;
  std::atomic<int> calls{0};
  std::string seen_auth, seen_body;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++calls;
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    if (n == 1) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
      return;
    }
    if (n == 3) {
      res.status = 400;
      res.set_content("bad request", "text/plain");
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"STUDENT"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpChatBackend backend("http://127.0.0.1:" + std::to_string(port) + "/v1", "test-model", "secret");
  BackendRequest r;
  r.system_text = "sys";
  r.history = {{"user", "go"}};
  RetryPolicy retry{3, std::chrono::milliseconds(1)};
  CHECK(complete_with_retry(backend, r, retry).text == "STUDENT");
  CHECK(calls == 2);
  CHECK(seen_auth == "Bearer secret");
  CHECK(nlohmann::json::parse(seen_body)["model"] == "test-model");
  try {
    complete_with_retry(backend, r, retry);
    FAIL("expected a permanent error");
  } catch (const BackendError& e) {
    CHECK_FALSE(e.transient());
  }
  CHECK(calls == 3);

  server.stop();
  thread.join();

  HttpChatBackend closed("http://127.0.0.1:" + std::to_string(port), "m", "");
  try {
    closed.complete(r);
    FAIL("expected a connection error");
  } catch (const BackendError& e) {
    CHECK(e.transient());
  }
}
