#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gmrf/io.hpp"

namespace gmrf {

/// Benchmark configuration. Named experiments (table1..table6) pre-populate
/// the study parameters at desk scale; full_scale restores the original
/// lattice sizes and replication counts.
struct ExperimentConfig {
    std::string experiment = "custom";
    LatticeSpec lattice{20, 20, true};
    int reps = 200;
    int n = 1;
    uint64_t seed = 987654321;
    int collection_max_dim = -1; // -1: experiment default
    bool iso = true;
    bool full_scale = false;

    // Truth: either a torus GMRF disc parameter (phi sweep) or a correlation
    // model (plane studies).
    std::vector<double> phi_values;
    std::vector<double> rho_values; // 0 encodes rho = infinity
    std::vector<CorrelationFamily> families;
    std::vector<double> kappa_values;
    std::vector<double> aniso_ratios;
    double range = 3.0;

    std::string output_dir = "bench-out";
    int grid_resolution = 512;
    int kriging_window = 11;

    std::vector<std::string> estimators; // informational; drivers fix the sets
};

/// Desk-scale defaults for a named experiment.
ExperimentConfig named_experiment(const std::string& name);

/// Merge JSON keys into a config (flags override config in the CLI).
void apply_config_json(ExperimentConfig& cfg, const io::json& j);
io::json config_to_json(const ExperimentConfig& cfg);

struct BenchmarkOutput {
    std::vector<io::CsvRow> rows;
    io::json provenance;
    io::json plot_data; // risk vs parameter series per estimator
    std::vector<std::pair<std::string, io::json>> path_dumps; // cell -> path JSON
};

/// Runs the configured experiment; one CSV row per (estimator, parameter)
/// cell. Deterministic given (config, seed).
BenchmarkOutput run_benchmark(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

/// Writes rows, provenance, plot data and path dumps under cfg.output_dir.
void write_benchmark_output(const ExperimentConfig& cfg, const BenchmarkOutput& out);

/// Variogram -> WLS fit -> ordinary kriging estimate, as one estimator.
ThetaField variogram_kriging_estimate(const FieldObservations& obs, CorrelationFamily family,
                                      std::optional<double> fix_kappa, int window,
                                      const std::optional<AnisotropySpec>& known_aniso = {});

} // namespace gmrf
