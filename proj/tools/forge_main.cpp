// Copyright 2026 The Forge Authors
// SPDX-License-Identifier: Apache-2.0
//
// forge: command-line front end. Exit codes: 0 success, 2 usage or config
// error, 3 stage failure.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "forge/adapter.hpp"
#include "forge/dataset.hpp"
#include "forge/error.hpp"
#include "forge/metrics.hpp"
#include "forge/pipeline.hpp"
#include "forge/quant.hpp"
#include "forge/router.hpp"
#include "forge/synthetic.hpp"
#include "forge/task.hpp"
#include "forge/tensor_archive.hpp"

namespace {

using nlohmann::json;
using namespace forge;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr const char* kToolVersion = "0.1.0";

// Raised for bad flag values detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfiguration, "cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::kConfiguration, path + ": invalid JSON");
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error(Errc::kIo, "write failure on '" + path + "'");
}

// "path:weight"; the last colon separates the weight so paths may contain colons.
MergeConfigEntry parse_adapter_arg(const std::string& arg) {
  const size_t colon = arg.rfind(':');
  MergeConfigEntry e;
  if (colon == std::string::npos) {
    e.path = arg;
    return e;
  }
  e.path = arg.substr(0, colon);
  const std::string w = arg.substr(colon + 1);
  try {
    size_t used = 0;
    e.weight = std::stod(w, &used);
    if (used != w.size()) throw std::invalid_argument(w);
  } catch (const std::logic_error&) {
    throw UsageError("bad adapter weight in '" + arg + "'");
  }
  return e;
}

std::vector<int> parse_recipe_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("bad recipe id '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--recipes is empty");
  return out;
}

std::map<std::string, std::map<int, double>> load_systems(const std::string& path) {
  const json j = load_json_file(path);
  std::map<std::string, std::map<int, double>> systems;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      for (auto t = it->begin(); t != it->end(); ++t) systems[it.key()][std::stoi(t.key())] = t->get<double>();
    }
  } catch (const std::exception& e) {
    throw Error(Errc::kConfiguration, path + ": expected {system: {track: score}}: " + e.what());
  }
  return systems;
}

int cmd_inspect(const std::string& path, bool as_json) {
  const TensorArchive a = read_archive(path);
  if (as_json) {
    json j = {{"tensors", json::array()}, {"metadata", a.metadata}};
    for (const auto& [name, t] : a.tensors) {
      j["tensors"].push_back({{"name", name}, {"dtype", dtype_name(t.dtype)}, {"shape", t.shape}});
    }
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  size_t width = 4;
  for (const auto& [name, t] : a.tensors) width = std::max(width, name.size());
  fmt::print("{:<{}}  {:<5}  {}\n", "name", width, "dtype", "shape");
  for (const auto& [name, t] : a.tensors) {
    fmt::print("{:<{}}  {:<5}  {}\n", name, width, dtype_name(t.dtype), shape_to_string(t.shape));
  }
  for (const auto& [k, v] : a.metadata) fmt::print("# {} = {}\n", k, v);
  return kExitOk;
}

int cmd_merge(const std::string& base_path, const std::vector<std::string>& adapter_args, double wise_ft,
              const std::string& out, unsigned jobs) {
  if (!(wise_ft >= 0.0 && wise_ft <= 1.0)) throw UsageError("--wise-ft must lie in [0, 1]");
  const TensorArchive base = read_archive(base_path);
  MergePlan plan;
  for (const std::string& arg : adapter_args) {
    const MergeConfigEntry e = parse_adapter_arg(arg);
    LoraAdapter a = read_adapter(e.path);
    if (wise_ft != 1.0) a = wise_ft_rescale(a, wise_ft);
    plan.steps.push_back(MergeStep{std::move(a), e.weight, std::nullopt});
  }
  write_archive(execute_merge(base, plan, jobs), out);
  fmt::print(stderr, "merged {} adapter(s) into {}\n", plan.steps.size(), out);
  return kExitOk;
}

int cmd_quantize(const std::string& in, const std::string& out, int64_t group_size, bool symmetric,
                 const std::string& report_path, unsigned jobs) {
  QuantConfig config;
  config.group_size = group_size;
  config.symmetric = symmetric;
  try {
    validate_quant_config(config);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const ArchiveQuantResult r = quantize_archive(read_archive(in), config, jobs);
  write_archive(r.archive, out);
  json report = {{"group_size", group_size}, {"symmetric", symmetric}, {"tensors", json::object()}};
  for (const auto& [name, e] : r.errors) {
    report["tensors"][name] = {{"max_abs_error", e.max_abs_error}, {"rmse", e.rmse}};
  }
  if (report_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json_file(report_path, report);
  }
  return kExitOk;
}

int cmd_route(const std::string& questions_path, const std::string& rules_path, const std::string& out) {
  const RouterRules rules =
      rules_path.empty() ? RouterRules::defaults() : RouterRules::from_json(load_json_file(rules_path));
  const Router router(rules);
  std::vector<json> rows;
  for (const Question& q : read_questions(questions_path)) {
    rows.push_back({{"id", q.id}, {"task_type", task_type_name(q.task_type.value_or(router.route(q)))}});
  }
  if (out.empty()) {
    for (const json& r : rows) std::cout << r.dump() << "\n";
  } else {
    write_jsonl(rows, out);
  }
  return kExitOk;
}

int cmd_decode(const std::string& questions_path, const std::string& chain_path, uint64_t seed, int max_new,
               const std::string& out, unsigned jobs, bool strict) {
  if (max_new < 1) throw UsageError("--max-new must be >= 1");
  DecodeOptions opt;
  opt.seed = seed;
  opt.max_new = max_new;
  opt.jobs = jobs;
  opt.strict_parse = strict;
  if (!chain_path.empty()) opt.chain = ChainConfig::from_json(load_json_file(chain_path));
  const std::vector<Question> questions = read_questions(questions_path);
  const DecodeRun run = decode_questions(questions, opt);
  write_answers(run.answers, out);
  size_t failures = 0;
  for (const AnswerRecord& a : run.answers) failures += a.failure_reason.has_value();
  fmt::print(stderr, "decoded {} questions in {:.3f}s ({:.1f} questions/min), {} parse failures\n",
             questions.size(), run.seconds, run.questions_per_minute, failures);
  return kExitOk;
}

int cmd_build_dataset(const std::string& recipes, uint64_t seed, const std::string& esci,
                      const std::string& reviews, const std::string& sessions, const std::string& out) {
  DatasetBuildOptions opt;
  opt.recipes = parse_recipe_list(recipes);
  opt.seed = seed;
  SeedData data;
  if (!esci.empty()) data.esci = read_esci_csv(esci);
  if (!reviews.empty()) data.reviews = read_reviews_csv(reviews);
  if (!sessions.empty()) data.sessions = read_sessions_csv(sessions);
  const DatasetBuildResult r = build_dataset(data, opt);
  emit_jsonl(r.samples, out);

  json meta = {{"seed", seed},
               {"rng", "pcg32"},
               {"recipes", opt.recipes},
               {"prompts_version", kPromptsVersion},
               {"recipes_version", kRecipesVersion},
               {"loss_mask", "answer_only"},
               {"samples", r.samples.size()},
               {"skipped", json::object()}};
  for (const auto& [id, n] : r.skipped) meta["skipped"][std::to_string(id)] = n;
  write_json_file(out + ".meta.json", meta);
  fmt::print(stderr, "wrote {} samples to {}\n", r.samples.size(), out);
  return kExitOk;
}

int cmd_list_recipes() {
  int total = 0;
  fmt::print("{:>3}  {:<20}  {:<33}  {:<24}  {:>6}  {:<3}  {}\n", "id", "source", "task", "type", "size", "llm",
             "status");
  for (const RecipeInfo& r : recipe_registry()) {
    const char* status = r.status == RecipeStatus::kImplemented        ? "implemented"
                         : r.status == RecipeStatus::kRequiresGenerator ? "requires external generator"
                                                                        : "requires source dataset";
    fmt::print("{:>3}  {:<20}  {:<33}  {:<24}  {:>6}  {:<3}  {}\n", r.id, r.source, r.task,
               task_type_name(r.task_type), r.size, r.llm ? "yes" : "no", status);
    total += r.size;
  }
  fmt::print("total reference samples: {}\n", total);
  return kExitOk;
}

int cmd_evaluate(const std::string& questions_path, const std::string& answers_path, const std::string& out,
                 bool token_level, const std::string& systems_path, const std::string& system_name) {
  MetricOptions opt;
  opt.token_level_f1 = token_level;
  MetricReport report = evaluate(read_questions(questions_path), read_answers(answers_path), opt);
  if (!systems_path.empty()) {
    auto systems = load_systems(systems_path);
    systems[system_name] = report.per_track;
    report.rank_table = rank_sum(systems);
  }
  write_json_file(out, report.to_json());
  return kExitOk;
}

int cmd_rank(const std::string& systems_path) {
  std::cout << json(rank_sum(load_systems(systems_path))).dump(2) << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, std::optional<unsigned> jobs) {
  PipelineConfig config = PipelineConfig::load(config_path);
  if (jobs) config.jobs = *jobs;
  const PipelineResult r = run_pipeline(config);
  fmt::print("questions: {}\ndecode_seconds: {:.3f}\nquestions_per_minute: {:.1f}\n", r.questions,
             r.decode_seconds, r.questions_per_minute);
  for (const auto& [track, score] : r.report.per_track) fmt::print("track {}: {:.4f}\n", track, score);
  return kExitOk;
}

int cmd_synth_questions(size_t n, uint64_t seed, bool routed, const std::string& out) {
  SyntheticOptions opt;
  opt.count = n;
  opt.seed = seed;
  opt.unrouted = !routed;
  write_questions(synthetic_questions(opt), out);
  return kExitOk;
}

int cmd_synth_model(uint64_t seed, int64_t hidden, int64_t intermediate, int layers, const std::string& out) {
  if (hidden < 1 || intermediate < 1 || layers < 1) throw UsageError("model dimensions must be >= 1");
  write_archive(random_base(toy_layout(hidden, intermediate, layers), seed), out);
  return kExitOk;
}

int cmd_synth_adapter(const std::string& base, const std::string& name, int64_t rank, double alpha,
                      uint64_t seed, const std::string& out) {
  if (rank < 1) throw UsageError("--rank must be >= 1");
  write_adapter(random_adapter(read_archive(base), name, rank, alpha, seed), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: adapter merging, quantization prep, constrained decoding and scoring"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", fmt::format("forge {}\nruleset {}\nprompts {}\nrecipes {}", kToolVersion,
                                                kRulesetVersion, kPromptsVersion, kRecipesVersion));
  unsigned jobs = 1;
  app.add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  std::function<int()> action;

  auto* inspect = app.add_subcommand("inspect", "Print the tensor table of an archive");
  std::string inspect_path;
  bool inspect_json = false;
  inspect->add_option("path", inspect_path)->required();
  inspect->add_flag("--json", inspect_json, "Emit JSON");
  inspect->callback([&] { action = [&] { return cmd_inspect(inspect_path, inspect_json); }; });

  auto* merge = app.add_subcommand("merge", "Fold weighted LoRA adapters into a base archive");
  std::string merge_base, merge_out;
  std::vector<std::string> merge_adapters;
  double wise_ft = 1.0;
  merge->add_option("--base", merge_base)->required();
  merge->add_option("--adapter", merge_adapters, "file:weight (repeatable)");
  merge->add_option("--wise-ft", wise_ft, "Interpolation factor alpha in [0, 1]");
  merge->add_option("-o,--output", merge_out)->required();
  merge->callback([&] { action = [&] { return cmd_merge(merge_base, merge_adapters, wise_ft, merge_out, jobs); }; });

  auto* quantize = app.add_subcommand("quantize", "Group-wise int4 quantization");
  std::string q_in, q_out, q_report;
  int64_t group_size = 128;
  bool symmetric = false;
  quantize->add_option("--group-size", group_size);
  quantize->add_flag("--symmetric", symmetric);
  quantize->add_option("--report", q_report, "Write the error report here instead of stdout");
  quantize->add_option("input", q_in)->required();
  quantize->add_option("output", q_out)->required();
  quantize->callback([&] {
    action = [&] { return cmd_quantize(q_in, q_out, group_size, symmetric, q_report, jobs); };
  });

  auto* route = app.add_subcommand("route", "Emit id -> task_type JSONL");
  std::string route_in, route_rules, route_out;
  route->add_option("questions", route_in)->required();
  route->add_option("--rules", route_rules, "Routing rules JSON");
  route->add_option("-o,--output", route_out);
  route->callback([&] { action = [&] { return cmd_route(route_in, route_rules, route_out); }; });

  auto* decode = app.add_subcommand("decode", "Greedy-decode questions with the toy LM");
  std::string d_questions, d_chain, d_out;
  uint64_t d_seed = 0;
  int max_new = 16;
  bool strict = false;
  decode->add_option("--questions", d_questions)->required();
  decode->add_option("--chain", d_chain, "Chain config JSON");
  decode->add_option("--seed", d_seed);
  decode->add_option("--max-new", max_new);
  decode->add_flag("--strict", strict, "Reject parser recoveries");
  decode->add_option("-o,--output", d_out)->required();
  decode->callback([&] {
    action = [&] { return cmd_decode(d_questions, d_chain, d_seed, max_new, d_out, jobs, strict); };
  });

  auto* build = app.add_subcommand("build-dataset", "Build instruction samples from seed CSVs");
  std::string recipes, esci, reviews, sessions, b_out;
  uint64_t b_seed = 42;
  bool list = false;
  build->add_flag("--list", list, "List the recipe registry");
  build->add_option("--recipes", recipes, "Comma-separated recipe ids");
  build->add_option("--seed", b_seed);
  build->add_option("--esci", esci);
  build->add_option("--reviews", reviews);
  build->add_option("--sessions", sessions);
  build->add_option("-o,--output", b_out);
  build->callback([&] {
    action = [&] {
      if (list) return cmd_list_recipes();
      if (recipes.empty() || b_out.empty()) throw UsageError("--recipes and -o are required");
      return cmd_build_dataset(recipes, b_seed, esci, reviews, sessions, b_out);
    };
  });

  auto* eval = app.add_subcommand("evaluate", "Score answers against gold");
  std::string e_questions, e_answers, e_out, e_systems, e_name = "this";
  bool token_level = false;
  eval->add_option("--questions", e_questions)->required();
  eval->add_option("--answers", e_answers)->required();
  eval->add_option("-o,--output", e_out)->required();
  eval->add_flag("--token-level-f1", token_level);
  eval->add_option("--systems", e_systems, "Other systems' per-track scores for a rank table");
  eval->add_option("--name", e_name, "This system's name in the rank table");
  eval->callback([&] {
    action = [&] { return cmd_evaluate(e_questions, e_answers, e_out, token_level, e_systems, e_name); };
  });

  auto* rank = app.add_subcommand("rank", "Rank-sum over per-track scores");
  std::string systems;
  rank->add_option("systems", systems, "JSON {system: {track: score}}")->required();
  rank->callback([&] { action = [&] { return cmd_rank(systems); }; });

  auto* run = app.add_subcommand("run", "Run the end-to-end pipeline from a config file");
  std::string config;
  run->add_option("config", config)->required();
  run->callback([&] {
    action = [&] {
      const bool jobs_given = app.count("--jobs") > 0;
      return cmd_run(config, jobs_given ? std::optional<unsigned>(jobs) : std::nullopt);
    };
  });

  auto* synth = app.add_subcommand("synth", "Generate toy inputs");
  synth->require_subcommand(1);
  auto* sq = synth->add_subcommand("questions", "Benchmark-shaped questions with gold answers");
  size_t sq_n = 100;
  uint64_t sq_seed = 0;
  bool sq_routed = false;
  std::string sq_out;
  sq->add_option("-n,--count", sq_n);
  sq->add_option("--seed", sq_seed);
  sq->add_flag("--routed", sq_routed, "Fill task_type instead of leaving it to the router");
  sq->add_option("-o,--output", sq_out)->required();
  sq->callback([&] { action = [&] { return cmd_synth_questions(sq_n, sq_seed, sq_routed, sq_out); }; });

  auto* sm = synth->add_subcommand("model", "Random base archive");
  uint64_t sm_seed = 0;
  int64_t hidden = 32, intermediate = 64;
  int layers = 2;
  std::string sm_out;
  sm->add_option("--seed", sm_seed);
  sm->add_option("--hidden", hidden);
  sm->add_option("--intermediate", intermediate);
  sm->add_option("--layers", layers);
  sm->add_option("-o,--output", sm_out)->required();
  sm->callback([&] { action = [&] { return cmd_synth_model(sm_seed, hidden, intermediate, layers, sm_out); }; });

  auto* sa = synth->add_subcommand("adapter", "Random LoRA adapter for a base archive");
  std::string sa_base, sa_name = "adapter", sa_out;
  int64_t sa_rank = 8;
  double sa_alpha = 16.0;
  uint64_t sa_seed = 0;
  sa->add_option("--base", sa_base)->required();
  sa->add_option("--name", sa_name);
  sa->add_option("--rank", sa_rank);
  sa->add_option("--alpha", sa_alpha);
  sa->add_option("--seed", sa_seed);
  sa->add_option("-o,--output", sa_out)->required();
  sa->callback([&] {
    action = [&] { return cmd_synth_adapter(sa_base, sa_name, sa_rank, sa_alpha, sa_seed, sa_out); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const StageError& e) {
    fmt::print(stderr, "error [{}]: {}\n", e.stage(), e.what());
    return kExitStage;
  } catch (const Error& e) {
    fmt::print(stderr, "error [{}]: {}\n", errc_name(e.code()), e.what());
    return e.code() == Errc::kConfiguration ? kExitConfig : kExitStage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitStage;
  }
}
