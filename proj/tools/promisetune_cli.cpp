// promisetune command-line driver.
//
//   promisetune tune    --dataset t.csv --budget 50 --seed 1 --out run/
//   promisetune ablate  --synthetic rugged-wells --budgets 50,100 --repeats 30 --out abl/
//   promisetune bench   --synthetic rugged-wells --synthetic deceptive --out bench/
//   promisetune explain --result run/ --k 20

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "promisetune/comparison.hpp"
#include "promisetune/explain.hpp"
#include "promisetune/io.hpp"
#include "promisetune/landscape.hpp"
#include "promisetune/objectives.hpp"
#include "promisetune/tuner.hpp"

namespace fs = std::filesystem;
using namespace promisetune;

namespace {

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SourceFlags {
  std::vector<std::string> datasets;
  std::string command;
  std::string regex = R"(([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))";
  double timeout = 0.0;
  std::vector<std::string> synthetic;
  std::uint64_t synthetic_seed = 1;
  std::size_t synthetic_options = 10;
  std::size_t synthetic_wells = 2;
  std::string space;
};

void add_source_flags(CLI::App& cmd, SourceFlags& f, bool multi) {
  auto* dataset = cmd.add_option("--dataset", f.datasets, "offline measurement CSV");
  auto* command = cmd.add_option("--command", f.command,
                                 "command template with {option} placeholders");
  auto* synthetic = cmd.add_option("--synthetic", f.synthetic,
                                   "synthetic landscape: rugged-wells, deceptive or flat");
  if (!multi) {
    dataset->expected(1);
    synthetic->expected(1);
    dataset->excludes(command)->excludes(synthetic);
    command->excludes(synthetic);
  } else {
    command->excludes(dataset)->excludes(synthetic);
  }
  cmd.add_option("--regex", f.regex, "regex whose first group captures the performance");
  cmd.add_option("--timeout", f.timeout, "command timeout in seconds (0 = none)")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--synthetic-seed", f.synthetic_seed, "seed of the synthetic landscape");
  cmd.add_option("--synthetic-options", f.synthetic_options, "options of the landscape")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--synthetic-wells", f.synthetic_wells, "promising boxes (rugged-wells)");
  cmd.add_option("--space", f.space, "space definition JSON");
}

std::vector<BenchObjective> build_objectives(const SourceFlags& f) {
  const std::size_t sources =
      (f.datasets.empty() ? 0 : 1) + (f.command.empty() ? 0 : 1) + (f.synthetic.empty() ? 0 : 1);
  if (sources == 0) throw UsageError("one of --dataset, --command or --synthetic is required");

  std::optional<ConfigSpace> declared;
  if (!f.space.empty()) declared = space_from_json(Json::parse(read_file(f.space)));

  std::vector<BenchObjective> out;
  for (const auto& path : f.datasets) {
    const OfflineTable table = load_offline(path);
    if (declared && space_to_json(*declared) != space_to_json(table.space())) {
      throw Error("--space does not match the space inferred from " + path);
    }
    const std::string name = fs::path(path).stem().string();
    out.push_back({name, table.space(), table.objective(name)});
  }
  if (!f.command.empty()) {
    if (!declared) throw UsageError("--command requires --space");
    out.push_back({"command", *declared,
                   command_objective(f.command, f.regex, f.timeout, *declared)});
  }
  for (const auto& kind_text : f.synthetic) {
    LandscapeParams params;
    params.options = f.synthetic_options;
    params.wells = f.synthetic_wells;
    const auto landscape =
        synthetic_landscape(parse_landscape_kind(kind_text), params, f.synthetic_seed);
    out.push_back({to_string(landscape->kind()), landscape->space(), landscape->objective()});
  }
  return out;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PROMISETUNE_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*env != '\0' && *end == '\0') return v;
    std::cerr << "warning: ignoring non-numeric PROMISETUNE_SEED\n";
  }
  return 0;
}

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

fs::path under(const fs::path& dir, const std::string& name) {
  const fs::path p(name);
  if (p.is_absolute() || p.lexically_normal().string().starts_with("..")) {
    throw UsageError("report paths must stay inside --out: " + name);
  }
  return dir / p;
}

struct TuneFlags {
  SourceFlags source;
  std::size_t budget = 100;
  std::size_t initial = 10;
  std::uint64_t seed = 0;
  std::size_t l = 10;
  double k = 10.0;
  std::string out;
  unsigned threads = 1;
  bool no_rules = false;
  std::string causal_report = "causal_report.json";
  std::string report = "explain.json";
};

int cmd_tune(const TuneFlags& f) {
  const auto objectives = build_objectives(f.source);
  const BenchObjective& target = objectives.front();
  TunerConfig cfg;
  cfg.budget = f.budget;
  cfg.initial_size = std::min(f.initial, f.budget);
  cfg.leaf_param = f.l;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  ExplainConfig ecfg;
  ecfg.k = f.k;
  ecfg.validate();

  const TunerResult result = f.no_rules ? run_without_rules(target.space, target.objective, cfg)
                                        : run(target.space, target.objective, cfg);
  const fs::path dir = prepare_out(f.out);
  std::vector<Sample> measured;
  for (const Trial& t : result.history) measured.push_back(t.sample);
  const ExplanationReport report = explain(result.final_rules, measured, target.space, ecfg);

  write_file((dir / "space.json").string(), space_to_json(target.space).dump(2) + "\n");
  write_file((dir / "trials.csv").string(), trials_csv(result.history, target.space));
  write_file((dir / "result.json").string(),
             result_to_json(result, target.space, cfg).dump(2) + "\n");
  write_file((dir / "rules.json").string(),
             rules_to_json(result.final_rules, target.space).dump(2) + "\n");
  write_file(under(dir, f.report).string(),
             explanation_to_json(report, target.space).dump(2) + "\n");
  const CausalReport causal = result.final_report.value_or(CausalReport{});
  write_file(under(dir, f.causal_report).string(),
             causal_report_to_json(causal, result.final_learned, target.space).dump(2) + "\n");

  std::cout << "Incumbent trajectory (" << target.name << ", " << result.tuner << "):\n";
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const double p = result.history[i].sample.performance;
    if (p < best) {
      best = p;
      std::cout << "  eval " << (i + 1) << ": " << format_double(p) << '\n';
    }
  }
  std::cout << "Evaluations: " << result.evaluations << " / " << cfg.budget << '\n'
            << "Final promising rules: " << result.final_rules.size() << '\n'
            << format_report(report, target.space);
  return 0;
}

struct CompareFlags {
  SourceFlags source;
  std::vector<std::size_t> budgets{50, 100, 150, 200};
  std::size_t repeats = 30;
  std::uint64_t seed = 0;
  std::size_t l = 10;
  std::string out;
  unsigned threads = 1;
};

int cmd_compare(const CompareFlags& f) {
  const auto objectives = build_objectives(f.source);
  ComparisonConfig cfg;
  cfg.budgets = f.budgets;
  cfg.repeats = f.repeats;
  cfg.seed = f.seed;
  cfg.threads = f.threads;
  cfg.base.leaf_param = f.l;
  const RankTable table = run_comparison(objectives, default_tuners(), cfg);
  const fs::path dir = prepare_out(f.out);
  write_file((dir / "runs.csv").string(), table.runs_csv());
  write_file((dir / "ranks.json").string(), table.to_json());
  write_file((dir / "ranks.md").string(), table.to_markdown());
  std::cout << table.to_markdown();
  return 0;
}

struct ExplainFlags {
  std::string result;
  double k = 10.0;
  std::string out;
};

int cmd_explain(const ExplainFlags& f) {
  const fs::path dir(f.result);
  for (const char* name : {"space.json", "trials.csv", "rules.json"}) {
    if (!fs::exists(dir / name)) {
      throw LoadError("missing artifact " + (dir / name).string() + " from a prior tune run");
    }
  }
  const ConfigSpace space = space_from_json(Json::parse(read_file((dir / "space.json").string())));
  const auto trials = parse_trials_csv(read_file((dir / "trials.csv").string()), space);
  const RuleSet rules = rules_from_json(Json::parse(read_file((dir / "rules.json").string())), space);
  std::vector<Sample> measured;
  for (const Trial& t : trials) measured.push_back(t.sample);
  ExplainConfig cfg;
  cfg.k = f.k;
  const ExplanationReport report = explain(rules, measured, space, cfg);
  if (!f.out.empty()) {
    const fs::path out = prepare_out(f.out);
    write_file((out / "explain.json").string(),
               explanation_to_json(report, space).dump(2) + "\n");
  }
  std::cout << format_report(report, space);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule-guided configuration tuning with causal rule purification"};
  app.require_subcommand(1);
  const std::uint64_t seed = default_seed();

  TuneFlags tune;
  tune.seed = seed;
  auto* tune_cmd = app.add_subcommand("tune", "tune one target");
  add_source_flags(*tune_cmd, tune.source, false);
  tune_cmd->add_option("--budget", tune.budget, "total evaluations B")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--initial", tune.initial, "initial random sample size s")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--seed", tune.seed, "random seed (default $PROMISETUNE_SEED or 0)");
  tune_cmd->add_option("--l", tune.l, "minimum leaf size of the rule forest")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--k", tune.k, "top k% used for explanations")->check(CLI::Range(0.0, 100.0));
  tune_cmd->add_option("--out", tune.out, "artifact directory")->required();
  tune_cmd->add_option("--threads", tune.threads, "worker threads")->check(CLI::PositiveNumber);
  tune_cmd->add_flag("--no-rules", tune.no_rules, "ablation: sample the whole space");
  tune_cmd->add_option("--emit-causal-report", tune.causal_report,
                       "causal report file name inside --out");
  tune_cmd->add_option("--emit-report", tune.report, "explanation report file name inside --out");

  CompareFlags ablate;
  ablate.seed = seed;
  auto* ablate_cmd = app.add_subcommand("ablate", "PromiseTune vs w/o Rules vs Random Search");
  CompareFlags bench;
  bench.seed = seed;
  auto* bench_cmd = app.add_subcommand("bench", "rank the tuners over several objectives");
  for (auto [cmd, flags] : {std::pair{ablate_cmd, &ablate}, std::pair{bench_cmd, &bench}}) {
    add_source_flags(*cmd, flags->source, cmd == bench_cmd);
    cmd->add_option("--budgets", flags->budgets, "comma-separated budgets")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    cmd->add_option("--repeats", flags->repeats, "runs per tuner and budget")
        ->check(CLI::Range(2, 100000));
    cmd->add_option("--seed", flags->seed, "base seed (default $PROMISETUNE_SEED or 0)");
    cmd->add_option("--l", flags->l, "minimum leaf size of the rule forest")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", flags->out, "artifact directory")->required();
    cmd->add_option("--threads", flags->threads, "concurrent runs")->check(CLI::PositiveNumber);
  }

  ExplainFlags expl;
  auto* explain_cmd = app.add_subcommand("explain", "re-run explanation on a prior tune");
  explain_cmd->add_option("--result", expl.result, "directory of a prior tune")->required();
  explain_cmd->add_option("--k", expl.k, "top k% of measured configurations")
      ->check(CLI::Range(0.0, 100.0));
  explain_cmd->add_option("--out", expl.out, "write explain.json into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (tune_cmd->parsed()) return cmd_tune(tune);
    if (ablate_cmd->parsed()) return cmd_compare(ablate);
    if (bench_cmd->parsed()) return cmd_compare(bench);
    return cmd_explain(expl);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
