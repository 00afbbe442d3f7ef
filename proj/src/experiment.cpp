#include "qama/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rng.hpp"

namespace qama {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

json ExperimentConfig::backend_config() const {
  json cfg = backend_options.is_object() ? backend_options : json::object();
  cfg["sweeps"] = sweeps;
  cfg["beta_start"] = beta_start;
  cfg["beta_end"] = beta_end;
  return cfg;
}

std::unique_ptr<SolverBackend> ExperimentConfig::make_solver(const std::string& name) const {
  json cfg = backend_config();
  if (name == "brute" || name == "softspin") {
    cfg.erase("sweeps");
    cfg.erase("beta_start");
    cfg.erase("beta_end");
  }
  return make_backend(name, cfg);
}

void to_json(json& j, const ExperimentConfig& cfg) {
  j = json{{"batch", cfg.batch},
           {"heads", cfg.heads},
           {"seq_len", cfg.seq_len},
           {"dim", cfg.dim},
           {"rho0", cfg.rho0},
           {"lambda0", cfg.lambda0},
           {"seed", cfg.seed},
           {"backend", cfg.backend},
           {"sweeps", cfg.sweeps},
           {"beta_start", cfg.beta_start},
           {"beta_end", cfg.beta_end},
           {"runs", cfg.runs},
           {"instances", cfg.instances},
           {"bench_backends", cfg.bench_backends},
           {"backend_options", cfg.backend_options},
           {"out_dir", cfg.out_dir}};
}

void from_json(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  static const std::vector<std::string> known{
      "batch", "heads",     "seq_len", "dim",       "rho0",           "lambda0",
      "seed",  "backend",   "sweeps",  "beta_start", "beta_end",      "runs",
      "instances", "bench_backends", "backend_options", "out_dir"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ArgumentError("unknown config key '" + key + "'");
    }
  }
  const ExperimentConfig d;
  cfg.batch = j.value("batch", d.batch);
  cfg.heads = j.value("heads", d.heads);
  cfg.seq_len = j.value("seq_len", d.seq_len);
  cfg.dim = j.value("dim", d.dim);
  cfg.rho0 = j.value("rho0", d.rho0);
  cfg.lambda0 = j.value("lambda0", d.lambda0);
  cfg.seed = j.value("seed", d.seed);
  cfg.backend = j.value("backend", d.backend);
  cfg.sweeps = j.value("sweeps", d.sweeps);
  cfg.beta_start = j.value("beta_start", d.beta_start);
  cfg.beta_end = j.value("beta_end", d.beta_end);
  cfg.runs = j.value("runs", d.runs);
  cfg.instances = j.value("instances", d.instances);
  cfg.bench_backends = j.value("bench_backends", d.bench_backends);
  cfg.backend_options = j.value("backend_options", d.backend_options);
  cfg.out_dir = j.value("out_dir", d.out_dir);
}

ExperimentConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ArgumentError(fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
  }
  return j.get<ExperimentConfig>();
}

// ------------------------------------------------------------- instances

AttentionInput draw_raw_instance(const Shape& shape, std::uint64_t seed) {
  detail::Rng rng(seed);
  const std::vector<std::size_t> dims{shape.batch(), shape.heads(), shape.seq_len(),
                                      shape.dim()};
  const std::size_t count = shape.batch() * shape.qubits() * shape.dim();
  auto draw = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
  };
  Tensor q(dims, draw(count));
  Tensor k(dims, draw(count));
  Tensor v(dims, draw(count));
  std::vector<double> w = draw(shape.dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(shape.dim()));
  for (auto& x : w) x *= scale;
  return AttentionInput(std::move(q), std::move(k), std::move(v),
                        Tensor({shape.dim(), 1}, std::move(w)));
}

namespace {

Tensor standardize(const Tensor& t) {
  const std::size_t D = t.dims().back();
  const std::size_t rows = t.size() / D;
  std::vector<double> out(t.data().begin(), t.data().end());
  for (std::size_t d = 0; d < D; ++d) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += out[r * D + d];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      out[r * D + d] -= mean;
      var += out[r * D + d] * out[r * D + d];
    }
    var /= static_cast<double>(rows);
    if (var > 0.0) {
      const double inv = 1.0 / std::sqrt(var);
      for (std::size_t r = 0; r < rows; ++r) out[r * D + d] *= inv;
    }
  }
  return Tensor(t.dims(), std::move(out));
}

}  // namespace

AttentionInput standardize_features(const AttentionInput& input) {
  return AttentionInput(standardize(input.query()), standardize(input.key()),
                        standardize(input.value()), input.field_weights());
}

AttentionInput generate_instance(const Shape& shape, std::uint64_t seed) {
  return standardize_features(draw_raw_instance(shape, seed));
}

QuboProblem build_problem(const AttentionInput& input, const CoefficientConfig& cfg,
                          std::size_t b) {
  const CouplingTensor J = compute_coupling(input.query_slice(b), input.key_slice(b));
  const FieldVector h = compute_field(input.value_slice(b), input.field_weights());
  return assemble_qubo(J, h, dynamic_coefficients(input.shape(), cfg), input.shape());
}

TensorSummary summarize(const Tensor& t) {
  TensorSummary s;
  if (t.size() == 0) return s;
  for (double v : t.data()) s.mean += v;
  s.mean /= static_cast<double>(t.size());
  double var = 0.0;
  for (double v : t.data()) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(t.size()));
  return s;
}

// ---------------------------------------------------------------- output

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      throw IoError(fmt::format("cannot create directory {}: {}", path.parent_path().string(),
                                ec.message()));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string head_mask_csv(const SelectionMask& mask, std::size_t heads, std::size_t seq_len) {
  std::string out;
  for (const auto& row : extract_head_masks(mask, heads, seq_len)) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i] ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

json to_json(const EnergyBreakdown& b) {
  return {{"h_alpha", b.h_alpha}, {"h_beta", b.h_beta}, {"h_gamma", b.h_gamma},
          {"total", b.total}};
}

json to_json(const SolveResult& r) {
  return {{"backend", r.backend},
          {"seed", r.seed},
          {"best_energy", r.best_energy},
          {"best_state", to_string(r.best_state)},
          {"sweeps_used", r.sweeps_used},
          {"energy_trace", r.energy_trace}};
}

json to_json(const TtsReport& r) {
  json j{{"p_success", r.p_success}, {"t_ann", r.t_ann}};
  j["runs"] = r.runs ? json(*r.runs) : json(nullptr);
  j["t_sol"] = std::isfinite(r.t_sol) ? json(r.t_sol) : json(nullptr);
  return j;
}

json to_json(const BarrierReport& r) {
  return {{"reached", r.reached}, {"b_min", r.b_min}, {"b_u", r.b_u},
          {"flips", r.flips},     {"max_step", r.max_step}, {"witness_path", r.witness_path}};
}

ForwardReport run_forward_report(const ExperimentConfig& config) {
  const Shape shape = config.shape();
  const AttentionInput input = generate_instance(shape, config.seed);
  const auto backend = config.make_solver();
  const ForwardResult fr = forward(input, config.coefficients(), *backend, config.seed);

  ForwardReport report;
  report.e_dist = summarize(fr.output.e_dist);
  const fs::path dir(config.out_dir);
  json elements = json::array();
  for (std::size_t b = 0; b < shape.batch(); ++b) {
    const auto& cache = fr.cache;
    report.breakdowns.push_back(energy_breakdown(cache.masks[b], cache.couplings[b],
                                                 cache.fields[b], cache.coefficients[b]));
    report.coefficients.push_back(cache.coefficients[b]);
    report.e_out.push_back(fr.output.e_out[b]);

    const fs::path mask_path = dir / fmt::format("head_mask_b{}.csv", b);
    write_text(mask_path, head_mask_csv(cache.masks[b], shape.heads(), shape.seq_len()));
    report.files.push_back(mask_path);

    std::string tokens;
    for (std::size_t t = 0; t < shape.heads(); ++t) {
      for (std::size_t i = 0; i < shape.seq_len(); ++i) {
        if (i) tokens += ',';
        tokens += format_real(fr.output.e_token.at({b, t, i}));
      }
      tokens += '\n';
    }
    const fs::path token_path = dir / fmt::format("energy_tokens_b{}.csv", b);
    write_text(token_path, tokens);
    report.files.push_back(token_path);

    const auto& c = cache.coefficients[b];
    json el = to_json(report.breakdowns.back());
    el["rho"] = c.rho;
    el["lambda"] = c.lambda;
    el["penalty_disabled"] = c.penalty_disabled;
    el["e_out"] = fr.output.e_out[b];
    el["mask"] = to_string(cache.masks[b]);
    el["solver"] = to_json(cache.solves[b]);
    elements.push_back(std::move(el));
  }
  json doc{{"config", config},
           {"elements", elements},
           {"e_dist", {{"mean", report.e_dist.mean}, {"std", report.e_dist.std}}}};
  const fs::path report_path = dir / "forward_report.json";
  write_json(report_path, doc);
  report.files.push_back(report_path);
  return report;
}

// -------------------------------------------------------------- landscape

double MutationLandscape::mean_mutated_energy() const {
  if (rows.empty()) return base_energy;
  double acc = 0.0;
  for (const auto& r : rows) acc += r.mutated_energy;
  return acc / static_cast<double>(rows.size());
}

MutationLandscape mutation_landscape(const QuboProblem& problem, const SelectionMask& mask) {
  MutationLandscape out;
  out.base_energy = problem.energy(mask);
  const auto& shape = problem.shape();
  for (std::size_t k = 0; k < problem.size(); ++k) {
    const double e = problem.energy(mask.flipped(k));
    std::size_t head = 0;
    std::size_t token = k;
    if (shape) {
      const auto ht = unflatten_index(k, *shape);
      head = ht.head;
      token = ht.token;
    }
    out.rows.push_back({k, head, token, e, e - out.base_energy});
  }
  return out;
}

std::string landscape_csv(const MutationLandscape& landscape) {
  std::string out = "index,head,token,mutated_energy,delta\n";
  for (const auto& r : landscape.rows) {
    out += fmt::format("{},{},{},{},{}\n", r.index, r.head, r.token,
                       format_real(r.mutated_energy), format_real(r.delta));
  }
  return out;
}

// ------------------------------------------------------------------ bench

BenchReport benchmark_solvers(const ExperimentConfig& config) {
  if (config.runs == 0) throw ArgumentError("bench needs at least one run per instance");
  if (config.instances == 0) throw ArgumentError("bench needs at least one instance");
  const Shape shape(1, config.heads, config.seq_len, config.dim);
  const CoefficientConfig coeff = config.coefficients();

  std::vector<std::unique_ptr<SolverBackend>> backends;
  for (const auto& name : config.bench_backends) backends.push_back(config.make_solver(name));

  BenchReport report;
  std::vector<std::vector<double>> walls(backends.size());
  std::vector<std::size_t> hits(backends.size(), 0);
  const bool with_barrier = shape.qubits() <= kBarrierCap;

  for (std::size_t inst = 0; inst < config.instances; ++inst) {
    const std::uint64_t instance_seed = config.seed + inst;
    const QuboProblem qubo = build_problem(generate_instance(shape, instance_seed), coeff);
    const IsingProblem ising = to_ising(qubo);
    const SolveResult ground = brute_force(ising);
    const double tol = default_success_tolerance(ground.best_energy);

    BarrierRow barrier_row{instance_seed, {}, config.beta_end, {}};
    for (std::size_t bi = 0; bi < backends.size(); ++bi) {
      std::size_t instance_hits = 0;
      for (std::size_t r = 0; r < config.runs; ++r) {
        const std::uint64_t run_seed = config.seed + r;
        const auto t0 = std::chrono::steady_clock::now();
        const SolveResult res = backends[bi]->solve(ising, run_seed);
        const auto t1 = std::chrono::steady_clock::now();
        const double wall = std::chrono::duration<double>(t1 - t0).count();
        const bool hit = res.best_energy <= ground.best_energy + tol;
        report.rows.push_back({backends[bi]->name(), instance_seed, run_seed, res.best_energy,
                               ground.best_energy, hit, wall});
        walls[bi].push_back(wall);
        if (hit) {
          ++hits[bi];
          ++instance_hits;
        }
      }
      barrier_row.p_success.push_back(static_cast<double>(instance_hits) /
                                      static_cast<double>(config.runs));
    }
    if (with_barrier) {
      barrier_row.barrier = min_barrier(ising, SpinState::all_down(ising.size()),
                                        mask_to_spins(ground.best_state));
      report.barriers.push_back(std::move(barrier_row));
    }
  }

  for (std::size_t bi = 0; bi < backends.size(); ++bi) {
    BackendSummary s;
    s.backend = backends[bi]->name();
    s.runs = walls[bi].size();
    s.hits = hits[bi];
    auto w = walls[bi];
    for (double x : w) s.mean_wall += x;
    s.mean_wall /= static_cast<double>(w.size());
    std::sort(w.begin(), w.end());
    s.median_wall = w.size() % 2 ? w[w.size() / 2]
                                 : 0.5 * (w[w.size() / 2 - 1] + w[w.size() / 2]);
    const double p = static_cast<double>(s.hits) / static_cast<double>(s.runs);
    s.tts = time_to_solution(p, std::max(s.mean_wall, 1e-9));
    report.summaries.push_back(std::move(s));
  }
  return report;
}

std::string bench_csv(const BenchReport& report) {
  std::string out = "backend,instance_seed,run_seed,best_energy,ground_energy,hit,wall_seconds\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.backend, r.instance_seed, r.run_seed,
                       format_real(r.best_energy), format_real(r.ground_energy),
                       r.hit ? "true" : "false", format_real(r.wall_seconds));
  }
  return out;
}

// ---------------------------------------------------------- serialization

namespace {

json pairs_to_json(const PairCoefficients& pairs) {
  json arr = json::array();
  for (const auto& [key, value] : pairs) arr.push_back(json::array({key.first, key.second, value}));
  return arr;
}

PairCoefficients pairs_from_json(const json& arr) {
  PairCoefficients out;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 3) throw ArgumentError("pair entries must be [p, q, value]");
    const auto p = e[0].get<std::size_t>();
    const auto q = e[1].get<std::size_t>();
    if (!out.emplace(VariablePair{p, q}, e[2].get<double>()).second) {
      throw ArgumentError(fmt::format("duplicate pair ({}, {})", p, q));
    }
  }
  return out;
}

json shape_json(const std::optional<Shape>& shape) {
  if (!shape) return nullptr;
  return {{"heads", shape->heads()}, {"seq_len", shape->seq_len()}, {"dim", shape->dim()}};
}

std::optional<Shape> shape_from(const json& j) {
  if (!j.contains("shape") || j["shape"].is_null()) return std::nullopt;
  const auto& s = j["shape"];
  return Shape(1, s.at("heads").get<std::size_t>(), s.at("seq_len").get<std::size_t>(),
               s.at("dim").get<std::size_t>());
}

void check_header(const json& j, const char* kind) {
  if (j.value("schema", std::string()) != kProblemSchema) {
    throw ArgumentError(fmt::format("expected schema '{}'", kProblemSchema));
  }
  if (j.value("kind", std::string()) != kind) {
    throw ArgumentError(fmt::format("expected a '{}' problem", kind));
  }
}

}  // namespace

json problem_to_json(const QuboProblem& p) {
  return {{"schema", kProblemSchema}, {"kind", "qubo"},
          {"n", p.size()},           {"offset", p.offset()},
          {"linear", p.linear()},    {"quadratic", pairs_to_json(p.quadratic())},
          {"shape", shape_json(p.shape())}};
}

json problem_to_json(const IsingProblem& p) {
  return {{"schema", kProblemSchema}, {"kind", "ising"},
          {"n", p.size()},           {"offset", p.offset()},
          {"fields", p.fields()},    {"couplings", pairs_to_json(p.couplings())},
          {"shape", shape_json(p.shape())}};
}

QuboProblem qubo_from_json(const json& j) {
  try {
    check_header(j, "qubo");
    return QuboProblem(j.at("n").get<std::size_t>(), pairs_from_json(j.at("quadratic")),
                       j.at("linear").get<std::vector<double>>(), j.at("offset").get<double>(),
                       shape_from(j));
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed qubo document: ") + e.what());
  }
}

IsingProblem ising_from_json(const json& j) {
  try {
    check_header(j, "ising");
    return IsingProblem(j.at("n").get<std::size_t>(), pairs_from_json(j.at("couplings")),
                        j.at("fields").get<std::vector<double>>(), j.at("offset").get<double>(),
                        shape_from(j));
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed ising document: ") + e.what());
  }
}

void export_problem(const QuboProblem& problem, const fs::path& path) {
  write_json(path, problem_to_json(problem));
}

void export_problem(const IsingProblem& problem, const fs::path& path) {
  write_json(path, problem_to_json(problem));
}

QuboProblem import_qubo(const fs::path& path) {
  return qubo_from_json(json::parse(read_text(path)));
}

IsingProblem import_ising(const fs::path& path) {
  return ising_from_json(json::parse(read_text(path)));
}

}  // namespace qama
