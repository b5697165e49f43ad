#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cvrpdiff/archive.hpp"
#include "cvrpdiff/config.hpp"
#include "cvrpdiff/cvrplib.hpp"
#include "cvrpdiff/dataset.hpp"
#include "cvrpdiff/errors.hpp"
#include "cvrpdiff/io.hpp"
#include "cvrpdiff/oracles.hpp"
#include "cvrpdiff/pipeline.hpp"
#include "cvrpdiff/training.hpp"

namespace fs = std::filesystem;
using namespace cvrpdiff;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct GenArgs {
  int n = 0, count = 0;
  std::uint64_t seed = 0;
  std::string out;
};

struct LabelArgs {
  std::string in, solver, out;
};

struct TrainArgs {
  std::string data, config, ckpt_out, report, validation, diffusion_ckpt;
  std::uint64_t seed = 0;
};

struct SolveArgs {
  std::string ckpt, in, out, ref, ref_solver;
  int aug = 8, starts = 100, steps = 0;
  std::uint64_t seed = 0;
  bool timing = false;
};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::ordered_json routes_json(const CvrpSolution& s) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& r : s.routes) j.push_back(r);
  return j;
}

int run_gen(const GenArgs& a) {
  const auto data = build_dataset(a.count, a.n, a.seed);
  write_jsonl(a.out, data);
  std::cout << data.size() << " records written to " << a.out << '\n';
  return 0;
}

int run_label(const LabelArgs& a) {
  const auto solver = parse_label_solver(a.solver);
  auto data = read_jsonl(a.in);
  for (auto& r : data) r.routes = solve_with(solver, r.instance);
  write_jsonl(a.out, data);
  std::cout << data.size() << " records labeled\n";
  return 0;
}

TrainConfig load_config(const std::string& path) {
  TrainConfig c = path.empty() ? TrainConfig{} : read_config(path);
  c.validate();
  return c;
}

std::string report_path(const TrainArgs& a) { return a.report.empty() ? a.ckpt_out + ".report.json" : a.report; }

std::vector<Record> labeled(const std::string& path) {
  auto data = read_jsonl(path);
  if (data.empty()) throw InputError(path + " holds no records");
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!data[i].routes) throw InputError(path + ": record " + std::to_string(i + 1) + " has no routes");
  return data;
}

int run_train_diffusion(const TrainArgs& a) {
  const auto config = load_config(a.config);
  const auto data = labeled(a.data);
  std::optional<std::vector<Record>> val;
  if (!a.validation.empty()) val = labeled(a.validation);
  TrainReport report;
  const auto models = train_diffusion(data, config, a.seed, &report, val ? &*val : nullptr);
  ParameterArchive archive;
  archive.config_text = format_config(config);
  store_diffusion(archive, models);
  archive.save(a.ckpt_out);
  write_file_atomic(report_path(a), report.json());
  std::cout << "trained " << report.steps << " steps, final loss " << number(report.loss_curve.back()) << '\n';
  return 0;
}

int run_train_policy(const TrainArgs& a) {
  const auto config = load_config(a.config);
  const auto base = ParameterArchive::load(a.diffusion_ckpt);
  TrainConfig stored;
  try {
    stored = parse_config(base.config_text);
  } catch (const InputError& e) {
    throw ModelError(std::string("diffusion checkpoint config is invalid: ") + e.what());
  }
  if (!(stored.model == config.model) || stored.diffusion.T != config.diffusion.T)
    throw ModelError("model dimensions of " + a.diffusion_ckpt + " do not match the config");
  const auto diffusion = load_diffusion(base, config);
  const auto data = read_jsonl(a.data);
  if (data.empty()) throw InputError(a.data + " holds no records");
  std::optional<std::vector<Record>> val;
  if (!a.validation.empty()) val = read_jsonl(a.validation);
  TrainReport report;
  const auto policy = train_policy(data, diffusion, config, a.seed, &report, val ? &*val : nullptr);
  ParameterArchive archive;
  archive.config_text = format_config(config);
  store_diffusion(archive, diffusion);
  store_policy(archive, policy);
  archive.save(a.ckpt_out);
  write_file_atomic(report_path(a), report.json());
  std::cout << "trained " << report.steps << " steps over " << report.epochs_run << " epochs\n";
  return 0;
}

struct Problem {
  std::vector<Record> records;
  std::optional<CvrplibInstance> cvrplib;
};

Problem read_problem(const std::string& path) {
  Problem p;
  if (fs::path(path).extension() == ".vrp") {
    p.cvrplib = parse_cvrplib(read_file(path));
    p.records.push_back({p.cvrplib->instance, std::nullopt});
  } else {
    p.records = read_jsonl(path);
  }
  if (p.records.empty()) throw InputError(path + " holds no instances");
  return p;
}

SolveOptions solve_options(const SolveArgs& a, const Models& models) {
  SolveOptions o;
  o.augmentations = a.aug;
  o.starts_limit = a.starts;
  o.inference_steps = a.steps > 0 ? a.steps : models.config.diffusion.inference_steps;
  if (o.inference_steps > models.config.diffusion.T) throw InputError("--steps exceeds the checkpoint's T");
  o.seed = a.seed;
  return o;
}

int run_solve(const SolveArgs& a) {
  const auto models = load_models(ParameterArchive::load(a.ckpt));
  const auto problem = read_problem(a.in);
  const auto options = solve_options(a, models);
  auto out = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < problem.records.size(); ++i) {
    SolveOptions o = options;
    o.seed = substream_seed(a.seed, "instance/" + std::to_string(i));
    const auto r = solve(problem.records[i].instance, models, o);
    nlohmann::ordered_json j;
    j["instance_id"] = i;
    j["objective"] = r.objective;
    if (problem.cvrplib) j["objective_original_units"] = problem.cvrplib->to_original_units(r.objective);
    j["variant"] = r.variant;
    j["start"] = r.start;
    j["routes"] = routes_json(r.solution);
    auto vars = nlohmann::ordered_json::array();
    for (const auto& v : r.variants)
      vars.push_back({{"variant", v.variant},
                      {"start", v.best_start},
                      {"objective", v.objective},
                      {"feasible", v.feasible},
                      {"wall_ms", a.timing ? v.wall_ms : 0.0}});
    j["variants"] = vars;
    out.push_back(j);
    std::cout << "instance " << i << ": objective " << number(r.objective) << '\n';
  }
  write_file_atomic(a.out, out.dump(2) + '\n');
  return 0;
}

// One value per line; "n/a", "-" or an empty line marks a missing reference.
std::vector<std::optional<double>> read_references(const std::string& path) {
  std::vector<std::optional<double>> refs;
  std::istringstream lines(read_file(path));
  std::string line;
  std::size_t no = 0;
  while (std::getline(lines, line)) {
    ++no;
    const auto b = line.find_first_not_of(" \t\r");
    const auto e = line.find_last_not_of(" \t\r");
    const std::string v = b == std::string::npos ? "" : line.substr(b, e - b + 1);
    if (v.empty() || v == "n/a" || v == "-") {
      refs.emplace_back();
      continue;
    }
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size()) throw ParseError("invalid reference '" + v + "'", no);
    refs.emplace_back(x);
  }
  return refs;
}

int run_eval(const SolveArgs& a) {
  const auto models = load_models(ParameterArchive::load(a.ckpt));
  const auto problem = read_problem(a.in);
  const auto options = solve_options(a, models);
  std::vector<std::optional<double>> refs(problem.records.size());
  if (!a.ref.empty()) {
    refs = read_references(a.ref);
    if (refs.size() < problem.records.size()) refs.resize(problem.records.size());
    if (refs.size() > problem.records.size())
      throw InputError(a.ref + " lists more references than there are instances");
  } else if (!a.ref_solver.empty()) {
    const auto solver = parse_label_solver(a.ref_solver);
    for (std::size_t i = 0; i < refs.size(); ++i)
      refs[i] = tour_length(problem.records[i].instance, solve_with(solver, problem.records[i].instance));
  }
  const auto report = evaluate(problem.records, models, refs, options);
  write_file_atomic(a.out + ".csv", report.csv(a.timing));
  write_file_atomic(a.out + ".json", report.json(a.timing));
  std::cout << "mean gap " << number(report.summary.mean_gap) << "% over " << report.summary.count << " instances";
  if (report.summary.missing) std::cout << " (" << report.summary.missing << " without reference)";
  std::cout << ", mean objective " << number(report.summary.mean_obj) << '\n';
  return 0;
}

void add_solve_flags(CLI::App* cmd, SolveArgs& a) {
  cmd->add_option("--ckpt", a.ckpt, "Checkpoint written by train-policy")->required()->check(CLI::ExistingFile);
  cmd->add_option("--in", a.in, "JSONL dataset or a .vrp file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--aug", a.aug, "Number of dihedral variants A")->check(CLI::Range(1, 8))->capture_default_str();
  cmd->add_option("--starts", a.starts, "Maximum number of start nodes")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--steps", a.steps, "Reverse diffusion steps (default: from the checkpoint)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  cmd->add_flag("--timing", a.timing, "Record wall-clock times (output is no longer reproducible)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint-matrix diffusion with a dual-pointer decoder for the CVRP"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cvrpdiff 0.1.0");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a random JSONL dataset");
  gen_cmd->add_option("--n", gen.n, "Customers per instance")->required()->check(CLI::Range(1, 100000));
  gen_cmd->add_option("--count", gen.count, "Number of instances")->required()->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output JSONL path")->required();

  LabelArgs label;
  auto* label_cmd = app.add_subcommand("label", "Attach reference routes to a dataset");
  label_cmd->add_option("--in", label.in, "Input JSONL dataset")->required();
  label_cmd->add_option("--solver", label.solver, "brute (N <= 12) or savings")
      ->required()
      ->check(CLI::IsMember({"brute", "savings"}));
  label_cmd->add_option("--out", label.out, "Output JSONL path")->required();

  TrainArgs tdiff, tpol;
  auto* tdiff_cmd = app.add_subcommand("train-diffusion", "Train the GAT and edge denoiser on labeled data");
  auto* tpol_cmd = app.add_subcommand("train-policy", "Train the masked encoder and decoder with REINFORCE");
  for (auto [cmd, a] : {std::pair{tdiff_cmd, &tdiff}, std::pair{tpol_cmd, &tpol}}) {
    cmd->add_option("--data", a->data, "Training JSONL dataset")->required()->check(CLI::ExistingFile);
    cmd->add_option("--config", a->config, "Config file of key = value lines")->check(CLI::ExistingFile);
    cmd->add_option("--seed", a->seed, "Random seed")->capture_default_str();
    cmd->add_option("--ckpt-out", a->ckpt_out, "Output parameter archive")->required();
    cmd->add_option("--report", a->report, "Training report JSON (default: <ckpt-out>.report.json)");
    cmd->add_option("--val", a->validation, "Validation JSONL dataset")->check(CLI::ExistingFile);
  }
  tpol_cmd->add_option("--diffusion-ckpt", tpol.diffusion_ckpt, "Archive written by train-diffusion")
      ->required()
      ->check(CLI::ExistingFile);

  SolveArgs solve_args, eval_args;
  auto* solve_cmd = app.add_subcommand("solve", "Solve instances and write solution JSON");
  add_solve_flags(solve_cmd, solve_args);
  solve_cmd->add_option("--out", solve_args.out, "Output solution JSON")->required();
  auto* eval_cmd = app.add_subcommand("eval", "Solve instances and report optimality gaps");
  add_solve_flags(eval_cmd, eval_args);
  auto* ref_opt = eval_cmd->add_option("--ref", eval_args.ref, "Reference objectives, one per line (n/a when unknown)")
                      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--ref-solver", eval_args.ref_solver, "Compute references with brute or savings")
      ->check(CLI::IsMember({"brute", "savings"}))
      ->excludes(ref_opt);
  eval_cmd->add_option("--out", eval_args.out, "Output prefix for <out>.csv and <out>.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*label_cmd) return run_label(label);
    if (*tdiff_cmd) return run_train_diffusion(tdiff);
    if (*tpol_cmd) return run_train_policy(tpol);
    if (*solve_cmd) return run_solve(solve_args);
    if (*eval_cmd) return run_eval(eval_args);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
