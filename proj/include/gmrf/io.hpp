#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gmrf/baselines.hpp"
#include "gmrf/cls.hpp"
#include "gmrf/risk.hpp"
#include "gmrf/select.hpp"

namespace gmrf::io {

using nlohmann::json;

// ---- JSON ----

json theta_to_json(const ThetaField& theta);
ThetaField theta_from_json(const json& j);

json model_to_json(const NeighborhoodModel& m);
json collection_to_json(const std::vector<NeighborhoodModel>& collection);

json fit_to_json(const FitResult& fit);
json path_to_json(const SelectionPath& path);
json report_to_json(const SelectionReport& rep);
json variogram_fit_to_json(const VariogramFit& fit);

// ---- field observations: flat binary + CSV ----

/// Header: p1, p2, n as 64-bit little-endian integers; then n*p1*p2 IEEE-754
/// doubles, row-major within a replication, replications in order. The
/// toroidal flag travels in the JSON sidecar, not the binary.
void write_observations(const std::string& path, const FieldObservations& obs);
FieldObservations read_observations(const std::string& path, bool toroidal);

void write_observations_csv(const std::string& path, const FieldObservations& obs);

// ---- benchmark tables ----

struct CsvRow {
    std::string experiment;
    std::string estimator;
    std::string param;
    double risk_mean = 0.0;
    double ci95 = 0.0;
    int reps = 0;
    int failures = 0;
};

/// Columns: experiment, estimator, param, risk_mean, ci95, reps, failures.
/// Values at 6 significant digits; infinities as "inf".
void write_risk_csv(const std::string& path, const std::vector<CsvRow>& rows);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

} // namespace gmrf::io
