// qama_cli: instance generation, solving, operator reports, mutation
// landscapes, solver benchmarks and problem export.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "qama/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> batch, heads, seq_len, dim, sweeps, runs, instances;
  std::optional<double> rho0, lambda0, beta_start, beta_end;
  std::optional<std::string> backend, out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--batch", f.batch, "batch size B")->check(CLI::PositiveNumber);
  cmd->add_option("--heads", f.heads, "number of heads H")->check(CLI::PositiveNumber);
  cmd->add_option("--seq-len", f.seq_len, "sequence length N")->check(CLI::PositiveNumber);
  cmd->add_option("--dim", f.dim, "feature dimension D")->check(CLI::PositiveNumber);
  cmd->add_option("--rho0", f.rho0, "static linear coefficient in [0,1]");
  cmd->add_option("--lambda0", f.lambda0, "static penalty coefficient in [0,1]");
  cmd->add_option("--backend", f.backend, "solver backend")
      ->check(CLI::IsMember({"brute", "sa", "glauber", "softspin"}));
  cmd->add_option("--sweeps", f.sweeps, "annealing sweeps")->check(CLI::PositiveNumber);
  cmd->add_option("--beta-start", f.beta_start, "initial inverse temperature");
  cmd->add_option("--beta-end", f.beta_end, "final inverse temperature");
  cmd->add_option("--runs", f.runs, "solver runs per instance")->check(CLI::PositiveNumber);
  cmd->add_option("--instances", f.instances, "bench instance count")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory");
}

template <class T>
void override_with(T& target, const std::optional<T>& flag) {
  if (flag) target = *flag;
}

// Precedence: flags, then the config file, then the environment (output
// directory only), then built-in defaults.
qama::ExperimentConfig resolve(const CommonFlags& f) {
  qama::ExperimentConfig cfg;
  bool file_sets_out = false;
  if (!f.config_path.empty()) {
    cfg = qama::load_config(f.config_path);
    file_sets_out = json::parse(qama::read_text(f.config_path)).contains("out_dir");
  }
  if (!file_sets_out) {
    if (const char* env = std::getenv(qama::kOutDirEnv); env && *env) cfg.out_dir = env;
  }
  override_with(cfg.seed, f.seed);
  override_with(cfg.batch, f.batch);
  override_with(cfg.heads, f.heads);
  override_with(cfg.seq_len, f.seq_len);
  override_with(cfg.dim, f.dim);
  override_with(cfg.rho0, f.rho0);
  override_with(cfg.lambda0, f.lambda0);
  override_with(cfg.backend, f.backend);
  override_with(cfg.sweeps, f.sweeps);
  override_with(cfg.beta_start, f.beta_start);
  override_with(cfg.beta_end, f.beta_end);
  override_with(cfg.runs, f.runs);
  override_with(cfg.instances, f.instances);
  override_with(cfg.out_dir, f.out);
  cfg.coefficients().validate();
  return cfg;
}

json tensor_json(const qama::Tensor& t) {
  return {{"dims", t.dims()}, {"data", std::vector<double>(t.data().begin(), t.data().end())}};
}

void emit_ok(const std::string& command, const json& extra) {
  json line{{"status", "ok"}, {"command", command}};
  line.update(extra);
  std::cout << line.dump() << '\n';
}

json cmd_generate(const qama::ExperimentConfig& cfg) {
  const auto input = qama::generate_instance(cfg.shape(), cfg.seed);
  const fs::path path = fs::path(cfg.out_dir) / "instance.json";
  qama::write_json(path, {{"config", cfg},
                          {"query", tensor_json(input.query())},
                          {"key", tensor_json(input.key())},
                          {"value", tensor_json(input.value())},
                          {"field_weights", tensor_json(input.field_weights())}});
  return {{"files", {path.string()}}};
}

json cmd_solve(const qama::ExperimentConfig& cfg) {
  const auto input = qama::generate_instance(cfg.shape(), cfg.seed);
  const auto backend = cfg.make_solver();
  json elements = json::array();
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    const qama::QuboProblem qubo = qama::build_problem(input, cfg.coefficients(), b);
    const qama::SolveResult res = backend->solve(qama::to_ising(qubo), cfg.seed);
    json el = qama::to_json(res);
    el["qubo_energy"] = qubo.energy(res.best_state);
    el["head_masks"] = qama::extract_head_masks(res.best_state, cfg.heads, cfg.seq_len);
    elements.push_back(std::move(el));
  }
  const fs::path path = fs::path(cfg.out_dir) / "solve.json";
  qama::write_json(path, {{"config", cfg}, {"backend_config", backend->config()},
                          {"elements", elements}});
  return {{"files", {path.string()}}};
}

json cmd_forward(const qama::ExperimentConfig& cfg) {
  const auto report = qama::run_forward_report(cfg);
  json files = json::array();
  for (const auto& f : report.files) files.push_back(f.string());
  return {{"files", files}, {"e_out", report.e_out}};
}

json cmd_landscape(const qama::ExperimentConfig& cfg) {
  const auto input = qama::generate_instance(cfg.shape(), cfg.seed);
  const qama::QuboProblem qubo = qama::build_problem(input, cfg.coefficients(), 0);
  const auto backend = cfg.make_solver();
  const qama::SolveResult res = backend->solve(qama::to_ising(qubo), cfg.seed);
  const auto landscape = qama::mutation_landscape(qubo, res.best_state);
  const fs::path dir(cfg.out_dir);
  qama::write_text(dir / "landscape.csv", qama::landscape_csv(landscape));
  qama::write_json(dir / "landscape_summary.json",
                   {{"config", cfg},
                    {"solver", qama::to_json(res)},
                    {"base_energy", landscape.base_energy},
                    {"mean_mutated_energy", landscape.mean_mutated_energy()}});
  return {{"files", {(dir / "landscape.csv").string(), (dir / "landscape_summary.json").string()}},
          {"base_energy", landscape.base_energy}};
}

json cmd_bench(const qama::ExperimentConfig& cfg) {
  const auto report = qama::benchmark_solvers(cfg);
  const fs::path dir(cfg.out_dir);
  qama::write_text(dir / "bench.csv", qama::bench_csv(report));
  json summaries = json::array();
  for (const auto& s : report.summaries) {
    summaries.push_back({{"backend", s.backend},
                         {"runs", s.runs},
                         {"hits", s.hits},
                         {"success_rate", static_cast<double>(s.hits) / static_cast<double>(s.runs)},
                         {"mean_wall_seconds", s.mean_wall},
                         {"median_wall_seconds", s.median_wall},
                         {"tts", qama::to_json(s.tts)}});
  }
  json barriers = json::array();
  for (const auto& b : report.barriers) {
    json row = qama::to_json(b.barrier);
    row["instance_seed"] = b.instance_seed;
    row["beta_end"] = b.beta_end;
    row["neg_beta_b_min"] = -b.beta_end * b.barrier.b_min;
    json p = json::object();
    for (std::size_t i = 0; i < report.summaries.size(); ++i) {
      p[report.summaries[i].backend] = b.p_success[i];
    }
    row["p_success"] = p;
    barriers.push_back(std::move(row));
  }
  qama::write_json(dir / "bench_summary.json",
                   {{"config", cfg}, {"summaries", summaries}, {"barrier_diagnostic", barriers}});
  return {{"files", {(dir / "bench.csv").string(), (dir / "bench_summary.json").string()}}};
}

json cmd_export(const qama::ExperimentConfig& cfg, const std::string& kind) {
  const auto input = qama::generate_instance(cfg.shape(), cfg.seed);
  const qama::QuboProblem qubo = qama::build_problem(input, cfg.coefficients(), 0);
  const fs::path dir(cfg.out_dir);
  json files = json::array();
  if (kind == "qubo" || kind == "both") {
    qama::export_problem(qubo, dir / "problem_qubo.json");
    files.push_back((dir / "problem_qubo.json").string());
  }
  if (kind == "ising" || kind == "both") {
    qama::export_problem(qama::to_ising(qubo), dir / "problem_ising.json");
    files.push_back((dir / "problem_ising.json").string());
  }
  return {{"files", files}};
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"status", "error"}, {"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QAMA attention-as-annealing toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string export_kind = "both";
  auto* generate = app.add_subcommand("generate", "write a standardized random instance");
  auto* solve = app.add_subcommand("solve", "solve the instance Hamiltonian");
  auto* fwd = app.add_subcommand("forward", "run the operator and write mask/energy reports");
  auto* landscape = app.add_subcommand("landscape", "single-bit mutation landscape");
  auto* bench = app.add_subcommand("bench", "benchmark backends against brute force");
  auto* exp = app.add_subcommand("export", "export the instance QUBO/Ising problem");
  for (auto* cmd : {generate, solve, fwd, landscape, bench, exp}) add_common(cmd, flags);
  exp->add_option("--kind", export_kind, "problem form")
      ->check(CLI::IsMember({"qubo", "ising", "both"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    const qama::ExperimentConfig cfg = resolve(flags);
    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    json result;
    if (cmd == generate) result = cmd_generate(cfg);
    else if (cmd == solve) result = cmd_solve(cfg);
    else if (cmd == fwd) result = cmd_forward(cfg);
    else if (cmd == landscape) result = cmd_landscape(cfg);
    else if (cmd == bench) result = cmd_bench(cfg);
    else result = cmd_export(cfg, export_kind);
    emit_ok(name, result);
    return 0;
  } catch (const qama::IoError& e) {
    return fail("io", e.what(), 3);
  } catch (const qama::CapacityError& e) {
    return fail("capacity", e.what(), 4);
  } catch (const qama::ShapeError& e) {
    return fail("shape", e.what(), 2);
  } catch (const std::invalid_argument& e) {
    return fail("argument", e.what(), 2);
  } catch (const nlohmann::json::exception& e) {
    return fail("argument", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
