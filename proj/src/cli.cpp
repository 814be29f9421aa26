#include "dlab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "dlab/analysis.hpp"
#include "dlab/coding.hpp"
#include "dlab/corpus.hpp"
#include "dlab/ena.hpp"
#include "dlab/error.hpp"
#include "dlab/http_backend.hpp"
#include "dlab/manifest.hpp"
#include "dlab/report.hpp"
#include "dlab/sim.hpp"

#ifndef DLAB_DEFAULT_PROMPTS_DIR
#define DLAB_DEFAULT_PROMPTS_DIR "data/prompts"
#endif

namespace fs = std::filesystem;

namespace dlab {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Resolved settings: flags > config file > defaults.
class Settings {
 public:
  void load(const std::string& path) {
    if (path.empty()) return;
    file_ = parse_config(read_file(path));
    config_path_ = path;
  }

  // `raw` is the flag value, used when `opt` was given on the command line.
  std::string resolve(const std::string& key, const CLI::Option* opt, const std::string& raw,
                      const std::vector<std::string>& sections, const std::string& fallback) {
    std::string value = fallback;
    std::string source = "default";
    if (opt != nullptr && opt->count() > 0) {
      value = raw;
      source = "flag";
    } else {
      for (const std::string& section : sections) {
        const auto it = file_.find(section.empty() ? key : section + "." + key);
        if (it != file_.end()) {
          value = it->second;
          source = "file";
          break;
        }
      }
      if (source == "default")
        if (const auto it = file_.find(key); it != file_.end()) {
          value = it->second;
          source = "file";
        }
    }
    resolved_.emplace_back(key, value, source);
    return value;
  }

  void record(RunManifest& manifest) const {
    if (!config_path_.empty()) manifest.add_input("config", config_path_);
    for (const auto& [key, value, source] : resolved_) {
      manifest.set("config." + key, value);
      manifest.set("config_source." + key, source);
    }
  }

 private:
  std::map<std::string, std::string> file_;
  std::string config_path_;
  std::vector<std::tuple<std::string, std::string, std::string>> resolved_;
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size())
    throw UsageError("invalid value '" + text + "' for " + key);
  return value;
}

ena::StanzaConfig stanza_config(const std::string& window, const std::string& accumulation) {
  ena::StanzaConfig cfg;
  if (window == "whole") {
    cfg.whole_conversation = true;
  } else {
    cfg.window = parse_number<std::size_t>("window", window);
    if (cfg.window < 2) throw UsageError("window must be at least 2 or 'whole'");
  }
  if (accumulation == "binary")
    cfg.accumulation = ena::Accumulation::binary;
  else if (accumulation == "weighted")
    cfg.accumulation = ena::Accumulation::weighted;
  else
    throw UsageError("accumulation must be 'binary' or 'weighted'");
  return cfg;
}

LengthUnit length_unit(const std::string& text) {
  const auto unit = parse_length_unit(text);
  if (!unit) throw UsageError("length unit must be 'characters' or 'whitespace_tokens'");
  return *unit;
}

Breakdown breakdown(const std::string& text) {
  if (text == "subtype") return Breakdown::subtype;
  if (text == "dimension") return Breakdown::dimension;
  throw UsageError("--by must be 'subtype' or 'dimension'");
}

std::string fixed(double v) { return report::format_fixed(v, 6); }

std::string test_summary(const stats::TestResult<double>& t) {
  std::string s = "t=" + fixed(t.t) + " df=" + fixed(t.df) + " p=" + report::format_fixed(t.p_two_sided, 12);
  if (t.d) s += " d=" + fixed(*t.d);
  return s;
}

// ---- ena / report ---------------------------------------------------------

struct Figures {
  std::string human;
  std::string ai;
  std::string difference;
};

Figures render_figures(const std::string& nodes_csv, const std::string& human_csv, const std::string& ai_csv,
                       const std::string& diff_csv, const std::string& freq_csv) {
  const auto nodes = report::parse_nodes_csv(nodes_csv);
  const auto freq_rows = report::parse_frequencies_csv(freq_csv);
  std::vector<double> human_freq(nodes.size()), ai_freq(nodes.size()), total_freq(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& f : freq_rows)
      if (f.code == nodes[i].code) {
        human_freq[i] = f.human;
        ai_freq[i] = f.ai;
        total_freq[i] = f.human + f.ai;
      }

  auto draw = [&](const std::string& edges_csv, const std::vector<double>& freq, report::NetworkStyle style) {
    const auto edges = report::parse_edges_csv(edges_csv);
    const auto [n, e] = report::network_from_rows(nodes, edges, freq);
    return report::render_network_svg(n, e, style);
  };
  report::NetworkStyle human_style;
  human_style.title = "Human tutoring: mean network";
  human_style.legend = {{"human co-occurrence", human_style.positive_color}};
  report::NetworkStyle ai_style;
  ai_style.title = "AI tutoring: mean network";
  ai_style.positive_color = ai_style.negative_color;
  ai_style.legend = {{"ai co-occurrence", ai_style.positive_color}};
  report::NetworkStyle diff_style;
  diff_style.title = "Difference network (human - ai)";
  diff_style.legend = {{"stronger in human", diff_style.positive_color}, {"stronger in ai", diff_style.negative_color}};
  return {draw(human_csv, human_freq, human_style), draw(ai_csv, ai_freq, ai_style),
          draw(diff_csv, total_freq, diff_style)};
}

void write_figures(const fs::path& dir, const Figures& f) {
  write_file(dir / "human_network.svg", f.human);
  write_file(dir / "ai_network.svg", f.ai);
  write_file(dir / "difference_network.svg", f.difference);
}

struct EnaInput {
  const Corpus* corpus;
  std::string label;  // as recorded in the manifest
  std::string digest;
};

void run_ena(const EnaInput& input, const ena::StanzaConfig& cfg, LengthUnit unit, const fs::path& out_dir,
             const Settings& settings, std::ostream& err) {
  const auto start = Clock::now();
  const CodeScheme& scheme = scheme_default();
  const Corpus& corpus = *input.corpus;
  const auto model = ena::fit_model<double>(corpus, scheme, cfg);
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.set("tool", std::string(kToolName));
  manifest.set("version", std::string(kToolVersion));
  manifest.set("input.corpus.path", input.label);
  manifest.set("input.corpus.sha256", input.digest);
  settings.record(manifest);
  manifest.set("scheme", scheme.name() + " v" + scheme.version());
  manifest.set("stanza.window", ena::window_label(cfg));
  manifest.set("stanza.accumulation", ena::accumulation_label(cfg.accumulation));
  manifest.set("units", std::to_string(model.units.size()));
  std::size_t humans = 0;
  for (const auto& u : model.units) humans += u.group == Group::human;
  manifest.set("units.human", std::to_string(humans));
  manifest.set("units.ai", std::to_string(model.units.size() - humans));
  manifest.set("exclusions", std::to_string(model.exclusions.size()));
  for (const auto& ex : model.exclusions) manifest.set("exclusion." + ex.dialogue_id, ex.reason);
  for (int d = 0; d < 2; ++d) {
    const std::string dim = "dim" + std::to_string(d + 1);
    manifest.set("fit." + dim + ".variance_explained", fixed(model.variance_explained(d)));
    manifest.set("fit." + dim + ".pearson", fixed(model.nodes.fit(d)));
    const auto& test = model.centroid_tests[static_cast<std::size_t>(d)];
    manifest.set("fit." + dim + ".welch", test ? test_summary(*test) : "degenerate (no variance in either group)");
  }
  manifest.set("fit.co_registration_residual", report::format_fixed(model.nodes.residual, 12));
  manifest.set("fit.rank_deficient", model.nodes.rank_deficient ? "true" : "false");

  // Points and nodes.
  std::vector<report::PointRow> points;
  for (std::size_t i = 0; i < model.units.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    points.push_back({model.units[i].dialogue_id, model.units[i].group, model.points(r, 0), model.points(r, 1)});
  }
  std::vector<report::NodeRow> nodes;
  for (std::size_t c = 0; c < scheme.size(); ++c) {
    const auto r = static_cast<Eigen::Index>(c);
    nodes.push_back({scheme.at(c).id, model.nodes.positions(r, 0), model.nodes.positions(r, 1)});
  }
  const Eigen::VectorXd diff = ena::difference_network(model.human_mean, model.ai_mean);
  const Eigen::VectorXd human_counts = code_counts(corpus, scheme, Group::human);
  const Eigen::VectorXd ai_counts = code_counts(corpus, scheme, Group::ai);
  std::vector<report::FrequencyRow> freq;
  for (std::size_t c = 0; c < scheme.size(); ++c) {
    const auto r = static_cast<Eigen::Index>(c);
    freq.push_back({scheme.at(c).id, human_counts(r), ai_counts(r)});
  }

  const std::string points_csv = report::emit_points_csv(points);
  const std::string nodes_csv = report::emit_nodes_csv(nodes);
  const std::string human_csv = report::emit_edges_csv(report::edge_rows(scheme, model.human_mean));
  const std::string ai_csv = report::emit_edges_csv(report::edge_rows(scheme, model.ai_mean));
  const std::string diff_csv = report::emit_edges_csv(report::edge_rows(scheme, diff));
  const std::string freq_csv = report::emit_frequencies_csv(freq);
  write_file(out_dir / "points.csv", points_csv);
  write_file(out_dir / "nodes.csv", nodes_csv);
  write_file(out_dir / "edges_human.csv", human_csv);
  write_file(out_dir / "edges_ai.csv", ai_csv);
  write_file(out_dir / "edges_diff.csv", diff_csv);
  write_file(out_dir / "code_frequencies.csv", freq_csv);

  // Descriptive tables travel with the model so that report never recomputes them.
  try {
    const auto rows = report::to_table2_rows(compare_proportions(corpus, scheme, Breakdown::subtype));
    write_file(out_dir / "table2.csv", report::emit_table2_csv(rows));
    manifest.set("table2", "table2.csv");
  } catch (const DomainError& e) {
    manifest.set("table2", std::string("unavailable: ") + e.what());
    err << "warning: table2.csv not written: " << e.what() << '\n';
  }
  try {
    const auto rows = report::to_length_rows(compare_lengths(corpus, unit));
    write_file(out_dir / "lengths.csv", report::emit_lengths_csv(rows));
    manifest.set("lengths", std::string("lengths.csv (") + std::string(to_string(unit)) + ")");
  } catch (const DomainError& e) {
    manifest.set("lengths", std::string("unavailable: ") + e.what());
    err << "warning: lengths.csv not written: " << e.what() << '\n';
  }

  write_figures(out_dir, render_figures(nodes_csv, human_csv, ai_csv, diff_csv, freq_csv));
  manifest.set_timing("total", seconds_since(start));
  manifest.write(out_dir / "model_manifest.txt");
}

void run_report(const fs::path& in_dir, const fs::path& out_dir, const Settings& settings) {
  const auto start = Clock::now();
  RunManifest manifest;
  manifest.set("tool", std::string(kToolName));
  manifest.set("version", std::string(kToolVersion));
  settings.record(manifest);
  std::map<std::string, std::string> inputs;
  for (const char* name : {"nodes.csv", "edges_human.csv", "edges_ai.csv", "edges_diff.csv", "code_frequencies.csv",
                           "table2.csv", "lengths.csv"}) {
    inputs[name] = read_file(in_dir / name);
    manifest.set(std::string("input.") + name + ".sha256", sha256_hex(inputs[name]));
  }
  // Parse before writing anything so that a malformed table fails cleanly.
  const auto table2 = report::parse_table2_csv(inputs["table2.csv"]);
  const auto lengths = report::parse_lengths_csv(inputs["lengths.csv"]);
  const Figures figures = render_figures(inputs["nodes.csv"], inputs["edges_human.csv"], inputs["edges_ai.csv"],
                                         inputs["edges_diff.csv"], inputs["code_frequencies.csv"]);
  fs::create_directories(out_dir);
  write_figures(out_dir, figures);
  write_file(out_dir / "table2.csv", report::emit_table2_csv(table2));
  write_file(out_dir / "lengths.csv", report::emit_lengths_csv(lengths));
  manifest.set_timing("total", seconds_since(start));
  manifest.write(out_dir / "manifest.txt");
}

// ---- simulate -----------------------------------------------------------------

struct SimulateOptions {
  std::string backend;
  std::string model;
  std::string token_env;
  fs::path prompts;
  sim::SimulationLimits limits;
  std::size_t concurrency = 4;
};

std::unique_ptr<sim::ChatBackend> make_backend(const SimulateOptions& opt) {
  if (opt.backend.rfind("script:", 0) == 0) return sim::load_script(read_file(opt.backend.substr(7)));
  if (opt.backend.rfind("http://", 0) == 0 || opt.backend.rfind("https://", 0) == 0) {
    const char* token = std::getenv(opt.token_env.c_str());
    return std::make_unique<sim::HttpChatBackend>(opt.backend, opt.model, token ? token : "");
  }
  throw UsageError("--backend must be an http(s) URL or script:<file>");
}

sim::BatchResult simulate(const std::vector<sim::SimulationScenario>& scenarios, const SimulateOptions& opt) {
  const sim::AgentConfigs configs = sim::load_agent_configs(opt.prompts);
  const auto backend = make_backend(opt);
  return sim::batch_simulate(scenarios, configs, *backend, opt.limits, opt.concurrency);
}

void annotate_simulation(Corpus& corpus, const SimulateOptions& opt, const std::string& scenarios_digest) {
  corpus.metadata["tool"] = std::string(kToolName) + " " + std::string(kToolVersion);
  corpus.metadata["backend"] = opt.backend.rfind("script:", 0) == 0 ? "script" : opt.backend;
  corpus.metadata["model"] = opt.model;
  corpus.metadata["max_turns"] = std::to_string(opt.limits.max_turns);
  corpus.metadata["max_chars"] = std::to_string(opt.limits.max_chars);
  corpus.metadata["scenarios_sha256"] = scenarios_digest;
}

struct SimFlags {
  std::string backend, model, token_env, prompts, max_turns, max_chars, concurrency;
  CLI::Option *backend_opt = nullptr, *model_opt = nullptr, *token_opt = nullptr, *prompts_opt = nullptr,
              *turns_opt = nullptr, *chars_opt = nullptr, *concurrency_opt = nullptr;

  void add(CLI::App* app) {
    backend_opt = app->add_option("--backend", backend, "http(s) chat-completions URL or script:<file>");
    model_opt = app->add_option("--model", model, "model name sent to the backend");
    token_opt = app->add_option("--token-env", token_env, "environment variable holding the bearer token");
    prompts_opt = app->add_option("--prompts", prompts, "directory with teacher.txt, student.txt, dean.txt");
    turns_opt = app->add_option("--max-turns", max_turns, "turn limit per dialogue");
    chars_opt = app->add_option("--max-chars", max_chars, "character budget per dialogue");
    concurrency_opt = app->add_option("--concurrency", concurrency, "dialogues in flight");
  }

  SimulateOptions resolve(Settings& s, const std::vector<std::string>& sections) const {
    SimulateOptions o;
    o.backend = s.resolve("backend", backend_opt, backend, sections, "");
    if (o.backend.empty()) throw UsageError("--backend is required");
    o.model = s.resolve("model", model_opt, model, sections, "gpt-4o");
    o.token_env = s.resolve("token_env", token_opt, token_env, sections, "DIALOGUE_LAB_TOKEN");
    o.prompts = s.resolve("prompts", prompts_opt, prompts, sections, DLAB_DEFAULT_PROMPTS_DIR);
    o.limits.max_turns = parse_number<std::size_t>("max_turns", s.resolve("max_turns", turns_opt, max_turns, sections, "30"));
    o.limits.max_chars =
        parse_number<std::size_t>("max_chars", s.resolve("max_chars", chars_opt, max_chars, sections, "20000"));
    o.concurrency =
        parse_number<std::size_t>("concurrency", s.resolve("concurrency", concurrency_opt, concurrency, sections, "4"));
    if (o.concurrency == 0) throw UsageError("concurrency must be positive");
    return o;
  }
};

struct EnaFlags {
  std::string window, accumulation, unit;
  CLI::Option *window_opt = nullptr, *accumulation_opt = nullptr, *unit_opt = nullptr;

  void add(CLI::App* app) {
    window_opt = app->add_option("--window", window, "stanza window size, or 'whole'");
    accumulation_opt = app->add_option("--accumulation", accumulation, "binary or weighted");
    unit_opt = app->add_option("--length-unit", unit, "characters or whitespace_tokens");
  }
};

int report_failures(const std::vector<sim::SimulationFailure>& failures, std::ostream& err) {
  for (const auto& f : failures) err << "simulation failed for " << f.problem_id << ": " << f.message << '\n';
  return failures.empty() ? kExitOk : kExitIo;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate tutoring dialogues and compare dialogue corpora", std::string(kToolName)};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  std::string config_path;
  std::string seed;
  app.add_option("--config", config_path, "key = value configuration file");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "reserved; recorded in manifests");

  std::string file_a, file_b, out_path, codes_path;

  auto* validate_cmd = app.add_subcommand("validate", "check a corpus file");
  validate_cmd->add_option("corpus", file_a)->required();

  auto* kappa_cmd = app.add_subcommand("kappa", "Cohen's kappa between two code sidecars");
  kappa_cmd->add_option("codes_a", file_a)->required();
  kappa_cmd->add_option("codes_b", file_b)->required();

  std::string by, paired_on;
  auto* stats_cmd = app.add_subcommand("stats", "per-code proportion comparison");
  stats_cmd->add_option("corpus", file_a)->required();
  CLI::Option* by_opt = stats_cmd->add_option("--by", by, "subtype or dimension");
  CLI::Option* paired_opt = stats_cmd->add_option("--paired-on", paired_on, "pairing key (problem_id)");
  stats_cmd->add_option("--codes", codes_path, "code sidecar applied before analysis");
  stats_cmd->add_option("--out", out_path, "output CSV (default: standard output)");

  EnaFlags ena_flags;
  auto* ena_cmd = app.add_subcommand("ena", "fit an epistemic network model");
  ena_cmd->add_option("corpus", file_a)->required();
  ena_flags.add(ena_cmd);
  ena_cmd->add_option("--codes", codes_path, "code sidecar applied before analysis");
  ena_cmd->add_option("--out", out_path, "output directory")->required();

  SimFlags sim_flags;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate ai tutoring dialogues");
  simulate_cmd->add_option("scenarios", file_a)->required();
  sim_flags.add(simulate_cmd);
  simulate_cmd->add_option("--out", out_path, "output corpus file")->required();

  auto* report_cmd = app.add_subcommand("report", "render figures and tables from an ena directory");
  report_cmd->add_option("ena_dir", file_a)->required();
  report_cmd->add_option("--out", out_path, "output directory")->required();

  std::string human_path;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "simulate, code, analyze, and report");
  pipeline_cmd->add_option("--scenarios", file_a, "scenario file")->required();
  pipeline_cmd->add_option("--human", human_path, "coded human corpus")->required();
  pipeline_cmd->add_option("--codes", codes_path, "code sidecar for the simulated dialogues")->required();
  SimFlags pipe_sim;
  pipe_sim.add(pipeline_cmd);
  EnaFlags pipe_ena;
  pipe_ena.add(pipeline_cmd);
  pipeline_cmd->add_option("--out", out_path, "output directory")->required();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolName << ' ' << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const CodeScheme& scheme = scheme_default();
  try {
    Settings settings;
    settings.load(config_path);
    settings.resolve("seed", seed_opt, seed, {""}, "0");

    if (*validate_cmd) {
      const auto violations = validate(read_corpus(file_a, scheme), scheme);
      for (const auto& v : violations) out << to_string(v) << '\n';
      return violations.empty() ? kExitOk : kExitData;
    }

    if (*kappa_cmd) {
      const auto aligned = align_ratings(read_sidecar(file_a), read_sidecar(file_b));
      const auto r = cohen_kappa(aligned.rater_a, aligned.rater_b, scheme);
      out << "kappa," << fixed(r.kappa) << '\n'
          << "observed," << fixed(r.observed_agreement) << '\n'
          << "expected," << fixed(r.expected_agreement) << '\n'
          << "n_items," << r.n_items << '\n'
          << "rater_a\\rater_b";
      for (const auto& def : scheme.codes()) out << ',' << def.id;
      out << '\n';
      for (std::size_t i = 0; i < scheme.size(); ++i) {
        out << scheme.at(i).id;
        for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) out << ',' << r.confusion(static_cast<Eigen::Index>(i), j);
        out << '\n';
      }
      return kExitOk;
    }

    if (*stats_cmd) {
      const Breakdown by_value = breakdown(settings.resolve("by", by_opt, by, {"stats"}, "subtype"));
      if (settings.resolve("paired_on", paired_opt, paired_on, {"stats"}, "problem_id") != "problem_id")
        throw UsageError("--paired-on supports only problem_id");
      Corpus corpus = read_corpus(file_a, scheme);
      if (!codes_path.empty()) corpus = apply_sidecar(corpus, read_sidecar(codes_path), scheme);
      const std::string csv =
          report::emit_table2_csv(report::to_table2_rows(compare_proportions(corpus, scheme, by_value)));
      if (out_path.empty())
        out << csv;
      else
        write_file(out_path, csv);
      return kExitOk;
    }

    if (*ena_cmd) {
      const auto cfg = stanza_config(settings.resolve("window", ena_flags.window_opt, ena_flags.window, {"ena"}, "4"),
                                     settings.resolve("accumulation", ena_flags.accumulation_opt,
                                                      ena_flags.accumulation, {"ena"}, "binary"));
      const LengthUnit unit =
          length_unit(settings.resolve("length_unit", ena_flags.unit_opt, ena_flags.unit, {"ena"}, "characters"));
      Corpus corpus = read_corpus(file_a, scheme);
      std::string digest = file_sha256(file_a);
      if (!codes_path.empty()) {
        corpus = apply_sidecar(corpus, read_sidecar(codes_path), scheme);
        digest += " codes:" + file_sha256(codes_path);
      }
      run_ena({&corpus, file_a, digest}, cfg, unit, out_path, settings, err);
      return kExitOk;
    }

    if (*simulate_cmd) {
      const SimulateOptions opt = sim_flags.resolve(settings, {"simulate"});
      const auto scenarios = sim::parse_scenarios(read_file(file_a));
      auto result = simulate(scenarios, opt);
      annotate_simulation(result.corpus, opt, file_sha256(file_a));
      write_corpus(out_path, result.corpus);
      return report_failures(result.failures, err);
    }

    if (*report_cmd) {
      run_report(file_a, out_path, settings);
      return kExitOk;
    }

    if (*pipeline_cmd) {
      const auto start = Clock::now();
      const SimulateOptions opt = pipe_sim.resolve(settings, {"pipeline", "simulate"});
      const auto cfg = stanza_config(
          settings.resolve("window", pipe_ena.window_opt, pipe_ena.window, {"pipeline", "ena"}, "4"),
          settings.resolve("accumulation", pipe_ena.accumulation_opt, pipe_ena.accumulation, {"pipeline", "ena"},
                           "binary"));
      const LengthUnit unit = length_unit(
          settings.resolve("length_unit", pipe_ena.unit_opt, pipe_ena.unit, {"pipeline", "ena"}, "characters"));
      const fs::path out_dir = out_path;
      fs::create_directories(out_dir);

      RunManifest manifest;
      manifest.set("tool", std::string(kToolName));
      manifest.set("version", std::string(kToolVersion));
      manifest.add_input("scenarios", file_a);
      manifest.add_input("human", human_path);
      manifest.add_input("codes", codes_path);
      for (const char* name : {"teacher.txt", "student.txt", "dean.txt"})
        manifest.set(std::string("input.prompts.") + name + ".sha256", file_sha256(opt.prompts / name));
      if (opt.backend.rfind("script:", 0) == 0) manifest.add_input("script", opt.backend.substr(7));
      settings.record(manifest);

      // simulate
      auto stage = Clock::now();
      const auto scenarios = sim::parse_scenarios(read_file(file_a));
      auto simulated = simulate(scenarios, opt);
      annotate_simulation(simulated.corpus, opt, file_sha256(file_a));
      write_corpus(out_dir / "simulated.jsonl", simulated.corpus);
      manifest.set("simulated.dialogues", std::to_string(simulated.corpus.dialogues.size()));
      manifest.set("simulated.failures", std::to_string(simulated.failures.size()));
      manifest.set_timing("simulate", seconds_since(stage));
      if (const int rc = report_failures(simulated.failures, err); rc != kExitOk) {
        manifest.write(out_dir / "run_manifest.txt");
        return rc;
      }

      // code-merge
      stage = Clock::now();
      const Corpus coded = apply_sidecar(simulated.corpus, read_sidecar(codes_path), scheme);
      Corpus combined = read_corpus(human_path, scheme);
      for (const auto& d : coded.dialogues) combined.dialogues.push_back(d);
      const auto violations = validate(combined, scheme);
      if (!violations.empty()) {
        for (const auto& v : violations) err << to_string(v) << '\n';
        return kExitData;
      }
      write_corpus(out_dir / "combined.jsonl", combined);
      manifest.set_timing("merge", seconds_since(stage));

      // stats
      stage = Clock::now();
      write_file(out_dir / "table2_subtype.csv",
                 report::emit_table2_csv(report::to_table2_rows(compare_proportions(combined, scheme, Breakdown::subtype))));
      write_file(
          out_dir / "table2_dimension.csv",
          report::emit_table2_csv(report::to_table2_rows(compare_proportions(combined, scheme, Breakdown::dimension))));
      manifest.set_timing("stats", seconds_since(stage));

      // ena, report
      stage = Clock::now();
      run_ena({&combined, "combined.jsonl", file_sha256(out_dir / "combined.jsonl")}, cfg, unit, out_dir / "ena",
              settings, err);
      manifest.set_timing("ena", seconds_since(stage));
      stage = Clock::now();
      run_report(out_dir / "ena", out_dir / "report", settings);
      manifest.set_timing("report", seconds_since(stage));

      for (const char* name : {"simulated.jsonl", "combined.jsonl", "table2_subtype.csv", "table2_dimension.csv"})
        manifest.set(std::string("output.") + name + ".sha256", file_sha256(out_dir / name));
      manifest.set_timing("total", seconds_since(start));
      manifest.write(out_dir / "run_manifest.txt");
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace dlab
