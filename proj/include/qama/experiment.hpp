#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qama/analysis.hpp"
#include "qama/annealer.hpp"
#include "qama/core_types.hpp"
#include "qama/hamiltonian.hpp"
#include "qama/problem.hpp"
#include "qama/qama_operator.hpp"

namespace qama {

inline constexpr const char* kProblemSchema = "qama.problem/1";
inline constexpr const char* kOutDirEnv = "QAMA_OUT_DIR";

/// One reproducible experiment manifest. Every CLI flag maps onto a field.
struct ExperimentConfig {
  std::size_t batch = 1;
  std::size_t heads = 2;
  std::size_t seq_len = 6;
  std::size_t dim = 4;
  double rho0 = 0.16;
  double lambda0 = 0.8;
  std::uint64_t seed = 0;
  std::string backend = "sa";
  std::size_t sweeps = 200;
  double beta_start = 0.1;
  double beta_end = 10.0;
  std::size_t runs = 10;       // solver runs per instance
  std::size_t instances = 20;  // bench instance count
  std::vector<std::string> bench_backends{"brute", "sa", "glauber", "softspin"};
  nlohmann::json backend_options = nlohmann::json::object();  // extra per-backend keys
  std::string out_dir = ".";

  Shape shape() const { return Shape(batch, heads, seq_len, dim); }
  CoefficientConfig coefficients() const { return {rho0, lambda0}; }
  /// backend_options merged with the schedule fields.
  nlohmann::json backend_config() const;
  std::unique_ptr<SolverBackend> make_solver(const std::string& name) const;
  std::unique_ptr<SolverBackend> make_solver() const { return make_solver(backend); }
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

ExperimentConfig load_config(const std::filesystem::path& path);

/// i.i.d. standard-normal Q, K, V and W_eps ~ N(0, 1/D), before standardization.
AttentionInput draw_raw_instance(const Shape& shape, std::uint64_t seed);

/// Centres each feature column of Q, K and V to mean 0, variance 1 over all
/// B * H * N positions. A constant column is only centred.
AttentionInput standardize_features(const AttentionInput& input);

AttentionInput generate_instance(const Shape& shape, std::uint64_t seed);

/// The QUBO of batch element b of an instance.
QuboProblem build_problem(const AttentionInput& input, const CoefficientConfig& cfg,
                          std::size_t b = 0);

struct TensorSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
TensorSummary summarize(const Tensor& t);

struct ForwardReport {
  std::vector<EnergyBreakdown> breakdowns;
  std::vector<DynamicCoefficients> coefficients;
  std::vector<double> e_out;
  TensorSummary e_dist;
  std::vector<std::filesystem::path> files;
};

/// Runs the operator on a generated instance and writes head_mask_b<b>.csv,
/// energy_tokens_b<b>.csv and forward_report.json into out_dir.
ForwardReport run_forward_report(const ExperimentConfig& config);

struct MutationRow {
  std::size_t index;
  std::size_t head;
  std::size_t token;
  double mutated_energy;
  double delta;
};

struct MutationLandscape {
  double base_energy = 0.0;
  std::vector<MutationRow> rows;
  double mean_mutated_energy() const;
};

/// Energy of every single-bit mutation of `mask`.
MutationLandscape mutation_landscape(const QuboProblem& problem, const SelectionMask& mask);

struct BenchRow {
  std::string backend;
  std::uint64_t instance_seed;
  std::uint64_t run_seed;
  double best_energy;
  double ground_energy;
  bool hit;
  double wall_seconds;
};

struct BackendSummary {
  std::string backend;
  std::size_t runs = 0;
  std::size_t hits = 0;
  double mean_wall = 0.0;
  double median_wall = 0.0;
  TtsReport tts;
};

struct BarrierRow {
  std::uint64_t instance_seed;
  BarrierReport barrier;
  double beta_end;
  std::vector<double> p_success;  // one entry per backend, in summary order
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BackendSummary> summaries;
  std::vector<BarrierRow> barriers;  // filled when H * N <= kBarrierCap
};

/// Compares each configured backend against brute-force ground truth over
/// `instances` generated problems with `runs` seeded runs each.
BenchReport benchmark_solvers(const ExperimentConfig& config);

// Serialization.
nlohmann::json problem_to_json(const QuboProblem& problem);
nlohmann::json problem_to_json(const IsingProblem& problem);
QuboProblem qubo_from_json(const nlohmann::json& j);
IsingProblem ising_from_json(const nlohmann::json& j);

void export_problem(const QuboProblem& problem, const std::filesystem::path& path);
void export_problem(const IsingProblem& problem, const std::filesystem::path& path);
QuboProblem import_qubo(const std::filesystem::path& path);
IsingProblem import_ising(const std::filesystem::path& path);

nlohmann::json to_json(const SolveResult& result);
nlohmann::json to_json(const TtsReport& report);
nlohmann::json to_json(const BarrierReport& report);
nlohmann::json to_json(const EnergyBreakdown& breakdown);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
std::string read_text(const std::filesystem::path& path);

/// 17 significant digits, so values re-parse exactly.
std::string format_real(double v);

std::string head_mask_csv(const SelectionMask& mask, std::size_t heads, std::size_t seq_len);
std::string landscape_csv(const MutationLandscape& landscape);
std::string bench_csv(const BenchReport& report);

}  // namespace qama
