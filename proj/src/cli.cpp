#include "smrc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "smrc/errors.hpp"
#include "smrc/evaluation.hpp"
#include "smrc/llm.hpp"
#include "smrc/reward_tree.hpp"
#include "smrc/scripted.hpp"
#include "smrc/search.hpp"
#include "smrc/synthetic.hpp"

namespace smrc::cli {

namespace {

struct Options {
  // dataset selection
  std::string dataset;
  std::string format = "mseb";
  std::size_t count = 200;
  unsigned k = 6;
  unsigned k_min = 1;
  std::uint64_t seed = 0;
  std::string decompose = "numbered";

  // backends
  std::string backend = "oracle";
  std::string script;
  std::string base_url;
  std::string model;
  std::string api_key;
  double timeout = 60.0;
  unsigned max_retries = 3;
  unsigned max_in_flight = 4;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  // synth / build-rewards
  std::string out;
  unsigned branching = 2;
  unsigned depth = 3;
  std::size_t node_cap = 10000;
  std::string out_tree;
  std::string out_records;

  // correct
  std::string search = "mcts";
  SearchConfig search_config;
  bool no_seed_stats = false;
  std::string trace;
  unsigned repeats = 1;

  // evaluate
  std::string results;
  std::string judge = "oracle";
  std::string containment = "verbatim";
  std::string report;
};

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must not throw.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1u, jobs));
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

DatasetRecord synth_record(const synth::Instance& inst) {
  DatasetRecord r;
  r.question = inst.problem.question();
  r.answer = inst.canonical.render();
  r.student_answer = inst.attempt.raw_text;
  r.correct_step = inst.attempt.correct_texts();
  return r;
}

std::vector<DatasetRecord> synth_records(std::size_t count, unsigned k_min, unsigned k_max,
                                         std::uint64_t seed) {
  std::vector<DatasetRecord> out;
  for (const auto& inst : synth::make_suite(count, k_min, k_max, seed))
    out.push_back(synth_record(inst));
  return out;
}

std::vector<DatasetRecord> load_dataset(const Options& o) {
  if (o.format == "synth") return synth_records(o.count, o.k_min, o.k, o.seed);
  if (o.dataset.empty()) {
    if (o.backend == "scripted" && !o.script.empty()) {
      auto script = ScriptedBackend::load(o.script);
      auto p = script.problem();
      DatasetRecord r{p.question, p.reference_answer,
                      script.student_answer().empty() ? p.question : script.student_answer(),
                      {}};
      return {r};
    }
    throw ConfigError("--dataset is required unless --format synth is used");
  }
  if (o.format == "first-error-rows") return load_first_error_rows(o.dataset);
  return load_mseb(o.dataset);
}

std::shared_ptr<llm::ChatClient> make_client(const Options& o) {
  auto config = llm::EndpointConfig::from_env();
  if (!o.base_url.empty()) config.base_url = o.base_url;
  if (!o.model.empty()) config.model = o.model;
  if (!o.api_key.empty()) config.api_key = o.api_key;
  config.timeout_seconds = o.timeout;
  config.max_retries = o.max_retries;
  config.max_in_flight = o.max_in_flight;
  config.jitter_seed = o.seed;
  return std::make_shared<llm::ChatClient>(config);
}

struct Backend {
  std::shared_ptr<Generator> generator;
  std::shared_ptr<Scorer> scorer;
  std::shared_ptr<AnswerJudge> judge;
  std::shared_ptr<StepRestructurer> restructurer;
};

Backend make_backend(const Options& o, const std::string& kind) {
  Backend b;
  if (kind == "oracle") {
    b.generator = std::make_shared<synth::OracleGenerator>();
    b.scorer = std::make_shared<synth::OracleScorer>();
    b.judge = std::make_shared<synth::OracleAnswerJudge>();
  } else if (kind == "scripted") {
    if (o.script.empty()) throw ConfigError("--backend scripted needs --script");
    auto s = std::make_shared<ScriptedBackend>(ScriptedBackend::load(o.script));
    b.generator = serialized(std::shared_ptr<Generator>(s, s.get()));
    b.scorer = serialized(std::shared_ptr<Scorer>(s, s.get()));
    b.judge = serialized(std::shared_ptr<AnswerJudge>(s, s.get()));
  } else {
    auto client = make_client(o);
    auto prompts = llm::PromptSet::defaults();
    b.generator = std::make_shared<llm::RemoteGenerator>(client, prompts);
    b.scorer = std::make_shared<llm::RemoteScorer>(client, prompts);
    b.judge = std::make_shared<llm::RemoteAnswerJudge>(client, prompts);
    b.restructurer = std::make_shared<llm::RemoteRestructurer>(client, prompts);
  }
  return b;
}

DecomposePolicy decompose_policy(const std::string& name) {
  if (name == "lines") return DecomposePolicy::line_split;
  if (name == "llm") return DecomposePolicy::external;
  return DecomposePolicy::numbered_markers;
}

SearchAlgorithm search_algorithm(const std::string& name) {
  if (name == "bfs") return SearchAlgorithm::bfs;
  if (name == "dfs") return SearchAlgorithm::dfs;
  return SearchAlgorithm::mcts;
}

nlohmann::json config_echo(const std::string& command, const Options& o) {
  nlohmann::json j{{"command", command}, {"format", o.format}, {"seed", o.seed}, {"jobs", o.jobs}};
  if (!o.dataset.empty()) j["dataset"] = o.dataset;
  if (o.format == "synth") {
    j["count"] = o.count;
    j["k"] = o.k;
    j["k_min"] = o.k_min;
  }
  if (command == "correct") {
    const auto& c = o.search_config;
    j["backend"] = o.backend;
    j["search"] = o.search;
    j["exploration"] = c.exploration;
    j["max_iterations"] = c.max_iterations;
    j["threshold"] = c.threshold;
    j["feedback_max"] = c.feedback_max;
    j["enum_cap"] = c.enum_cap;
    j["beam_width"] = c.beam_width;
    j["seed_statistics"] = c.seed_statistics;
    j["repeats"] = o.repeats;
  }
  if (command == "evaluate") {
    j["results"] = o.results;
    j["judge"] = o.judge;
    j["containment"] = o.containment;
  }
  return j;
}

void add_dataset_options(CLI::App* sub, Options& o) {
  sub->add_option("--dataset", o.dataset, "Dataset file (JSON array or JSONL)");
  sub->add_option("--format", o.format, "Dataset format")
      ->check(CLI::IsMember({"mseb", "first-error-rows", "synth"}))
      ->capture_default_str();
  sub->add_option("--count", o.count, "Problems to generate with --format synth")
      ->capture_default_str();
  sub->add_option("--k", o.k, "Largest operation count with --format synth")
      ->check(CLI::Range(1, 12))
      ->capture_default_str();
  sub->add_option("--k-min", o.k_min, "Smallest operation count with --format synth")
      ->check(CLI::Range(1, 12))
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "Seed for synthetic data and retry jitter")
      ->capture_default_str();
}

void add_backend_options(CLI::App* sub, Options& o) {
  sub->add_option("--backend", o.backend, "Generator/scorer/judge backend")
      ->check(CLI::IsMember({"oracle", "remote", "scripted"}))
      ->capture_default_str();
  sub->add_option("--script", o.script, "Script file for --backend scripted");
  sub->add_option("--api-base", o.base_url, "Endpoint base URL (default $SMRC_API_BASE)");
  sub->add_option("--model", o.model, "Model name (default $SMRC_MODEL)");
  sub->add_option("--api-key", o.api_key, "Bearer token (default $SMRC_API_KEY)");
  sub->add_option("--timeout", o.timeout, "Request timeout in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--max-retries", o.max_retries, "Retries per request")->capture_default_str();
  sub->add_option("--max-in-flight", o.max_in_flight, "Concurrent requests")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  sub->add_option("--jobs,-j", o.jobs, "Worker threads")->check(CLI::Range(1, 4096));
}

int cmd_synth(const Options& o, std::ostream& out) {
  auto records = synth_records(o.count, o.k_min, o.k, o.seed);
  write_mseb(o.out, records);
  out << "wrote " << records.size() << " records to " << o.out << "\n";
  return kOk;
}

int cmd_build_rewards(const Options& o, std::ostream& out, std::ostream& err) {
  const auto records = load_dataset(o);
  if (records.empty()) throw EmptyDataset("dataset is empty");
  auto backend = make_backend(o, o.backend);
  RolloutOptions ropts;
  ropts.branching = o.branching;
  ropts.max_depth = o.depth;
  ropts.node_cap = o.node_cap;

  struct Outcome {
    std::optional<nlohmann::json> tree;
    std::vector<nlohmann::json> records;
    std::string error;
  };
  std::vector<Outcome> outcomes(records.size());
  parallel_for(records.size(), o.jobs, [&](std::size_t i) {
    try {
      const auto problem = to_problem(records[i], std::to_string(i));
      auto tree = build_rollout_tree(problem, *backend.generator, ropts);
      label_leaves(tree, *backend.judge, problem);
      propagate_rewards(tree);
      for (const auto& r : export_training_records(tree, problem))
        outcomes[i].records.push_back(training_record_to_json(r));
      outcomes[i].tree = tree_to_json(tree);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });

  std::optional<std::ofstream> tree_out, records_out;
  if (!o.out_tree.empty()) tree_out = open_out(o.out_tree);
  if (!o.out_records.empty()) records_out = open_out(o.out_records);
  std::size_t ok = 0, nodes = 0, written = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& oc = outcomes[i];
    if (!oc.tree) {
      err << "record " << i << ": " << oc.error << "\n";
      continue;
    }
    ++ok;
    nodes += (*oc.tree)["nodes"].size();
    if (tree_out) *tree_out << oc.tree->dump() << "\n";
    for (const auto& r : oc.records) {
      if (records_out) *records_out << r.dump() << "\n";
      ++written;
    }
  }
  out << "problems: " << ok << " ok, " << records.size() - ok << " failed; nodes: " << nodes
      << "; training records: " << written << "\n";
  return ok == 0 ? kFailure : kOk;
}

int cmd_correct(const Options& o, std::ostream& out, std::ostream& err) {
  const auto records = load_dataset(o);
  if (records.empty()) throw EmptyDataset("dataset is empty");
  auto config = o.search_config;
  config.seed_statistics = !o.no_seed_stats;
  config.validate();
  if (o.repeats < 1) throw ConfigError("--repeats must be >= 1");
  auto backend = make_backend(o, o.backend);
  const auto policy = decompose_policy(o.decompose);
  if (policy == DecomposePolicy::external && !backend.restructurer)
    throw ConfigError("--decompose llm needs --backend remote");
  const auto algorithm = search_algorithm(o.search);

  const std::size_t tasks = records.size() * o.repeats;
  std::vector<nlohmann::json> results(tasks);
  std::vector<std::vector<nlohmann::json>> traces(tasks);
  parallel_for(tasks, o.jobs, [&](std::size_t t) {
    const auto repeat = t / records.size();
    const auto i = t % records.size();
    const auto id = std::to_string(i);
    nlohmann::json r{{"id", id}, {"repeat", repeat}};
    try {
      const auto problem = to_problem(records[i], id);
      const auto attempt = to_attempt(records[i], policy, TerminalRule{}, backend.restructurer.get());
      TraceSink sink;
      if (!o.trace.empty())
        sink = [&, repeat](const TraceEvent& e) {
          auto j = trace_event_to_json(e);
          j["id"] = id;
          j["repeat"] = repeat;
          traces[t].push_back(std::move(j));
        };
      auto res = run_search(algorithm, problem, attempt, *backend.generator, *backend.scorer,
                            config, sink);
      r["corrected_steps"] = path_to_json(res.best_path);
      r["value"] = res.best_value;
      r["terminated_by"] = std::string(to_string(res.terminated_by));
      r["iterations"] = res.iterations_used;
      r["retained_student_steps"] = res.retained_student_steps;
    } catch (const std::exception& e) {
      r["corrected_steps"] = nlohmann::json::array();
      r["error"] = e.what();
    }
    results[t] = std::move(r);
  });

  auto file = open_out(o.out);
  std::size_t ok = 0, by_threshold = 0;
  for (const auto& r : results) {
    file << r.dump() << "\n";
    if (r.contains("error")) {
      err << "record " << r["id"].get<std::string>() << " (repeat " << r["repeat"].get<std::size_t>()
          << "): " << r["error"].get<std::string>() << "\n";
      continue;
    }
    ++ok;
    if (r["terminated_by"] == "threshold") ++by_threshold;
  }
  if (!o.trace.empty()) {
    auto tfile = open_out(o.trace);
    for (const auto& events : traces)
      for (const auto& e : events) tfile << e.dump() << "\n";
  }
  out << "corrected " << ok << "/" << tasks << " runs; " << by_threshold
      << " reached the threshold\n";
  return ok == 0 ? kFailure : kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const auto started = now_utc();
  const auto records = load_dataset(o);
  const auto rows = read_jsonl(o.results);
  if (records.empty() || rows.empty()) throw JoinError("nothing to join: empty dataset or results");

  std::map<std::size_t, std::map<std::string, ReasoningPath>> by_repeat;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto& row = rows[n];
    try {
      const auto id = row.at("id").get<std::string>();
      const auto repeat = row.value("repeat", std::size_t{0});
      auto& slot = by_repeat[repeat];
      if (slot.count(id)) throw JoinError("duplicate result for id " + id);
      slot.emplace(id, path_from_json(row.at("corrected_steps")));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("results line " + std::to_string(n + 1) + ": " + e.what());
    }
  }

  auto backend_kind = o.judge;
  Options judge_opts = o;
  judge_opts.backend = backend_kind;
  auto answer_judge = make_backend(judge_opts, backend_kind).judge;
  std::shared_ptr<ContainmentJudge> containment;
  if (o.containment == "remote")
    containment = std::make_shared<llm::RemoteContainmentJudge>(make_client(o),
                                                                llm::PromptSet::defaults());
  else
    containment = std::make_shared<VerbatimContainmentJudge>();

  std::vector<EvalReport> reports;
  nlohmann::json per_sample = nlohmann::json::array();
  for (const auto& [repeat, paths] : by_repeat) {
    std::vector<EvalSample> samples;
    for (const auto& [id, path] : paths) {
      std::size_t index = 0;
      try {
        std::size_t used = 0;
        index = std::stoul(id, &used);
        if (used != id.size()) throw std::invalid_argument(id);
      } catch (const std::exception&) {
        throw JoinError("result id '" + id + "' is not a dataset index");
      }
      if (index >= records.size()) throw JoinError("result id " + id + " has no dataset record");
      samples.push_back({id, to_problem(records[index], id), records[index].correct_step, path});
    }
    if (samples.size() != records.size())
      throw JoinError("repeat " + std::to_string(repeat) + " covers " +
                      std::to_string(samples.size()) + " of " + std::to_string(records.size()) +
                      " records");
    std::sort(samples.begin(), samples.end(), [](const EvalSample& a, const EvalSample& b) {
      return std::stoul(a.id) < std::stoul(b.id);
    });
    reports.push_back(evaluate(samples, *answer_judge, *containment));
    for (const auto& s : reports.back().per_sample)
      per_sample.push_back({{"id", s.id},
                            {"repeat", repeat},
                            {"valid", s.valid},
                            {"retained_fraction", s.retained_fraction}});
  }

  std::vector<double> accs, csrrs, hms;
  for (const auto& r : reports) {
    accs.push_back(r.acc);
    csrrs.push_back(r.csrr);
    hms.push_back(r.hm);
  }
  const auto acc_s = spread(accs), csrr_s = spread(csrrs), hm_s = spread(hms);
  nlohmann::json doc{{"acc", acc_s.mean},
                     {"csrr", csrr_s.mean},
                     {"hm", hm(acc_s.mean, csrr_s.mean)},
                     {"per_sample", per_sample},
                     {"run",
                      {{"config", config_echo("evaluate", o)},
                       {"started_at", started},
                       {"finished_at", now_utc()},
                       {"samples", records.size()}}}};
  if (reports.size() > 1) {
    auto spread_json = [](const Spread& s) {
      return nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}};
    };
    doc["repeats"] = {{"count", reports.size()},
                      {"acc", spread_json(acc_s)},
                      {"csrr", spread_json(csrr_s)},
                      {"hm", spread_json(hm_s)}};
  }
  if (!o.report.empty()) open_out(o.report) << doc.dump(2) << "\n";
  out << std::fixed << std::setprecision(4) << "ACC " << acc_s.mean << "  CSRR " << csrr_s.mean
      << "  HM " << doc["hm"].get<double>();
  if (reports.size() > 1)
    out << "  (over " << reports.size() << " repeats; HM sd " << hm_s.stddev << ")";
  out << "\n";
  return kOk;
}

}  // namespace

nlohmann::json path_to_json(const ReasoningPath& path) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : path.steps())
    steps.push_back({{"text", s.step.text()},
                     {"origin", std::string(to_string(s.origin))},
                     {"index", s.step.index()},
                     {"terminal", s.step.terminal()}});
  return steps;
}

ReasoningPath path_from_json(const nlohmann::json& steps) {
  ReasoningPath path;
  for (const auto& s : steps) {
    const auto origin =
        s.value("origin", std::string("generated")) == "student" ? StepOrigin::student
                                                                  : StepOrigin::generated;
    path.append(ReasoningStep(s.at("index").get<std::size_t>(), s.at("text").get<std::string>(),
                              s.value("terminal", false)),
                origin);
  }
  return path;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Student math reasoning correction: rewards, search and evaluation", "smrc"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in MSEB format");
  synth->add_option("--count,-n", o.count, "Number of problems")->capture_default_str();
  synth->add_option("--k", o.k, "Largest operation count")
      ->check(CLI::Range(1, 12))
      ->capture_default_str();
  synth->add_option("--k-min", o.k_min, "Smallest operation count")
      ->check(CLI::Range(1, 12))
      ->capture_default_str();
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  synth->add_option("--out,-o", o.out, "Output file")->required();

  auto* rewards = app.add_subcommand("build-rewards", "Build rollout trees and reward records");
  add_dataset_options(rewards, o);
  add_backend_options(rewards, o);
  rewards->add_option("--branching", o.branching, "Samples per node")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  rewards->add_option("--depth", o.depth, "Maximum tree depth")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  rewards->add_option("--node-cap", o.node_cap, "Node budget per tree")->capture_default_str();
  rewards->add_option("--out-tree", o.out_tree, "Tree snapshots (JSONL)");
  rewards->add_option("--out-records", o.out_records, "Training records (JSONL)");

  auto* correct = app.add_subcommand("correct", "Correct student attempts with tree search");
  add_dataset_options(correct, o);
  add_backend_options(correct, o);
  auto& c = o.search_config;
  correct->add_option("--search", o.search, "Search algorithm")
      ->check(CLI::IsMember({"mcts", "bfs", "dfs"}))
      ->capture_default_str();
  correct->add_option("--exploration,-c", c.exploration, "UCT exploration constant")
      ->capture_default_str();
  correct->add_option("--iterations,-T", c.max_iterations, "Iteration budget")
      ->capture_default_str();
  correct->add_option("--threshold", c.threshold, "Early-stop reward threshold")
      ->capture_default_str();
  correct->add_option("--feedback-max", c.feedback_max, "Feedback rounds per expansion")
      ->capture_default_str();
  correct->add_option("--enum-cap", c.enum_cap, "Full subset enumeration up to this many steps")
      ->capture_default_str();
  correct->add_option("--beam-width", c.beam_width, "Layer width above --enum-cap")
      ->capture_default_str();
  correct->add_flag("--no-seed-stats", o.no_seed_stats,
                    "Start initialization nodes with N = 0 instead of W = v, N = 1");
  correct->add_option("--decompose", o.decompose, "How student answers are split into steps")
      ->check(CLI::IsMember({"numbered", "lines", "llm"}))
      ->capture_default_str();
  correct->add_option("--repeats", o.repeats, "Runs per record")->capture_default_str();
  correct->add_option("--trace", o.trace, "Search trace (JSONL)");
  correct->add_option("--out,-o", o.out, "Results (JSONL)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Compute ACC, CSRR and HM for results");
  add_dataset_options(evaluate, o);
  evaluate->add_option("--results", o.results, "Results from `correct`")->required();
  evaluate->add_option("--judge", o.judge, "Answer judge")
      ->check(CLI::IsMember({"oracle", "remote", "scripted"}))
      ->capture_default_str();
  evaluate->add_option("--containment", o.containment, "Step containment judge")
      ->check(CLI::IsMember({"verbatim", "remote"}))
      ->capture_default_str();
  evaluate->add_option("--script", o.script, "Script file for --judge scripted");
  evaluate->add_option("--api-base", o.base_url, "Endpoint base URL (default $SMRC_API_BASE)");
  evaluate->add_option("--model", o.model, "Model name (default $SMRC_MODEL)");
  evaluate->add_option("--api-key", o.api_key, "Bearer token (default $SMRC_API_KEY)");
  evaluate->add_option("--report", o.report, "Report file (JSON)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
    return kUsage;
  }

  try {
    if (o.k_min > o.k) throw ConfigError("--k-min must not exceed --k");
    if (synth->parsed()) return cmd_synth(o, out);
    if (rewards->parsed()) return cmd_build_rewards(o, out, err);
    if (correct->parsed()) return cmd_correct(o, out, err);
    return cmd_evaluate(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace smrc::cli
