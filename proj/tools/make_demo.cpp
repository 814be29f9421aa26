// Writes the bundled demo inputs: scenarios, a scripted backend, a coded human
// corpus, and the code sidecar for the simulated dialogues.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

#include "dlab/coding.hpp"
#include "dlab/manifest.hpp"
#include "dlab/sim.hpp"
#include "dlab/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dlab;

namespace {

const char* kQuestions[] = {
    "Xiaoming is 10 years old and his father is 25 years older. How old is his father?",
    "A triangle has angles of 40 and 50 degrees. What is the third angle?",
    "What is one third of 12?",
    "Which is larger, 0.3 or 0.25?",
    "A pencil costs 2 yuan. How much do 7 pencils cost?",
    "What is the value of the digit 6 in 4,682?",
    "Lily read 15 pages on Monday and 18 on Tuesday. How many pages did she read?",
};

const char* kApproaches[] = {
    "Socratic questioning: lead the student with questions instead of giving answers.",
    "Worked example: model a similar problem, then let the student try.",
    "Hint ladder: start with a small hint and give stronger hints only when needed.",
    "Error analysis: ask the student to explain each step and look for mistakes together.",
    "Concrete to abstract: start from objects or drawings before symbols.",
    "Check for understanding: ask the student to restate the problem in their own words.",
    "Encouraging coach: praise effort and guide with short prompts.",
};

const char* kProfiles[] = {
    "Grade 3, shy, answers briefly and often says 'I don't know'.",
    "Grade 4, confident, sometimes rushes and makes careless errors.",
    "Grade 5, curious, likes to explain their reasoning.",
    "Grade 3, easily distracted, needs reminders to focus.",
    "Grade 4, careful but slow, asks for confirmation often.",
    "Grade 5, strong at arithmetic, unsure about fractions.",
    "Grade 4, anxious about mistakes, answers quietly.",
};

std::string dean_reply(std::mt19937_64& rng, Role next) {
  static const char* teacher[] = {"TEACHER", "Teacher: the teacher should respond.", "TEACHER - follow up on the answer"};
  static const char* student[] = {"STUDENT", "Student, let them try.", "STUDENT - the question needs an answer"};
  const auto& bank = next == Role::teacher ? teacher : student;
  return bank[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? argv[1] : "data/demo";
  fs::create_directories(out);
  const CodeScheme& scheme = scheme_default();
  std::mt19937_64 rng(20241016);

  std::vector<sim::SimulationScenario> scenarios;
  for (std::size_t i = 0; i < 49; ++i) {
    char pid[16];
    std::snprintf(pid, sizeof pid, "p%02zu", i + 1);
    scenarios.push_back({pid, kQuestions[i % 7], kApproaches[(i / 7) % 7], kProfiles[(i * 3 + i / 7) % 7]});
  }
  write_file(out / "scenarios.jsonl", sim::serialize_scenarios(scenarios));

  synth::TwoGroupSpec spec;
  spec.seed = 7;
  Corpus human;
  std::string script, sidecar;
  const std::vector<std::string> ai_cycle = spec.ai_cycle;
  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
  for (const auto& sc : scenarios) {
    const auto human_codes = synth::cycle_codes(rng, scheme, spec.human_cycle, spec.noise, length(rng), spec.tail_skip);
    human.dialogues.push_back(
        synth::dialogue_from_codes("h-" + sc.problem_id, Group::human, sc.problem_id, human_codes, scheme, rng));
    human.dialogues.back().metadata["source"] = "synthetic demo";

    // Both roles must speak for the dialogue to validate.
    std::vector<std::string> ai_codes;
    do ai_codes = synth::cycle_codes(rng, scheme, ai_cycle, spec.noise, length(rng), spec.tail_skip);
    while (std::none_of(ai_codes.begin(), ai_codes.end(), [&](const auto& c) {
      return scheme.at(c).role_constraint == Role::student;
    }));
    auto emit = [&](const std::string& key, const std::string& value) {
      nlohmann::ordered_json line;
      line["session"] = sc.problem_id;
      line[key] = value;
      script += line.dump() + '\n';
    };
    for (std::size_t u = 0; u < ai_codes.size(); ++u) {
      const Role speaker = scheme.at(ai_codes[u]).role_constraint;
      if (sc.problem_id == "p05" && u == 2) emit("reply", "Let us see how this develops.");  // needs clarification
      if (sc.problem_id == "p11" && u == 1) emit("error", "simulated rate limit");
      emit("reply", dean_reply(rng, speaker));
      emit("reply", synth::utterance_text(rng, ai_codes[u], Group::ai, speaker));
      char line[128];
      std::snprintf(line, sizeof line, "ai-%s\t%zu\t%s\n", sc.problem_id.c_str(), u, ai_codes[u].c_str());
      sidecar += line;
    }
    emit("reply", "TERMINATE: the problem is solved.");
  }
  write_file(out / "script.jsonl", script);
  write_file(out / "ai_codes.tsv", "# dialogue_id\tutterance\tcode\n" + sidecar);
  write_corpus(out / "human.jsonl", human);
  std::cout << "wrote demo inputs to " << out.string() << '\n';
}
