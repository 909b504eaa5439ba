#include "gmrf/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include <gsl/gsl_version.h>

#include "gmrf/parallel.hpp"
#include "gmrf/select.hpp"

namespace gmrf {

namespace {

constexpr double kRhoInf = 0.0; // sentinel inside rho_values

std::string rho_label(double rho) {
    return rho == kRhoInf ? "rho=inf" : "rho=" + std::to_string(static_cast<int>(rho));
}

std::string trim_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

ConstraintSpec constraint_for(double rho) {
    if (rho == kRhoInf) return ConstraintSpec{};
    return ConstraintSpec(rho);
}

// Per-replication loss records, merged deterministically by key.
using RepRecord = std::map<std::string, double>;

RiskEstimate aggregate(const std::vector<RepRecord>& recs, const std::string& key) {
    std::vector<double> losses;
    int failures = 0;
    for (const auto& r : recs) {
        auto it = r.find(key);
        if (it == r.end()) ++failures;
        else losses.push_back(it->second);
    }
    return summarize_losses(std::move(losses), failures);
}

// Delta-method CI for a ratio of independent means.
double ratio_ci(const RiskEstimate& num, const RiskEstimate& den, double ratio) {
    if (!std::isfinite(ratio) || num.mean <= 0 || den.mean <= 0) return 0.0;
    double rel2 = (num.ci95_halfwidth / num.mean) * (num.ci95_halfwidth / num.mean) +
                  (den.ci95_halfwidth / den.mean) * (den.ci95_halfwidth / den.mean);
    return ratio * std::sqrt(rel2);
}

int variogram_nbins(const LatticeSpec& lat) { return std::min(lat.p1, lat.p2) / 2; }

int kriging_window_for(const ExperimentConfig& cfg, CorrelationFamily family,
                       double kappa_true) {
    // Near-singular Matern covariances need smaller kriging neighborhoods.
    if (family == CorrelationFamily::matern) {
        if (kappa_true >= 4.0) return 3;
        if (kappa_true >= 2.0) return 7;
    }
    return cfg.kriging_window;
}

struct CellSet {
    std::string experiment;
    std::vector<io::CsvRow> rows;
    io::json plot = io::json::array();

    void add_risk(const std::string& estimator, const std::string& param, double param_value,
                  const RiskEstimate& est) {
        rows.push_back({experiment, estimator, param, est.mean, est.ci95_halfwidth, est.reps,
                        est.failures});
        plot.push_back({{"estimator", estimator},
                        {"param", param_value},
                        {"risk", est.mean},
                        {"ci95", est.ci95_halfwidth}});
    }
    void add_ratio(const std::string& param, double param_value, const RiskEstimate& num,
                   const RiskEstimate& den) {
        double ratio = den.mean == 0.0 ? std::numeric_limits<double>::infinity()
                                       : num.mean / den.mean;
        rows.push_back({experiment, "ratio", param, ratio, ratio_ci(num, den, ratio),
                        num.reps, num.failures});
        plot.push_back({{"estimator", "ratio"}, {"param", param_value}, {"risk", ratio}});
    }
};

// ---- torus drivers (table1, table2) ----

void run_torus_study(const ExperimentConfig& cfg, BenchmarkOutput& out,
                     std::ostream* progress) {
    const bool rho_sweep = cfg.experiment == "table1";
    const auto collection = build_model_collection(cfg.lattice, cfg.collection_max_dim, cfg.iso);
    CellSet cells{cfg.experiment, {}, {}};

    for (double phi : cfg.phi_values) {
        ThetaField truth = make_theta_phi(phi, cfg.lattice);
        TorusSampler sampler(truth);
        std::vector<double> rhos = rho_sweep ? cfg.rho_values : std::vector<double>{kRhoInf};

        std::vector<RepRecord> recs(cfg.reps);
        std::atomic<int> done{0};
        parallel_for(cfg.reps, [&](int rep) {
            FieldObservations obs{cfg.lattice, {}};
            for (int k = 0; k < cfg.n; ++k) {
                Rng rng(cfg.seed, static_cast<uint64_t>(rep) * cfg.n + k);
                obs.data.push_back(sampler.draw(rng));
            }
            RepRecord& rec = recs[rep];
            PeriodogramCache cache = PeriodogramCache::build(obs);
            for (double rho : rhos) {
                std::vector<FitResult> fits;
                fits.reserve(collection.size());
                for (const auto& m : collection)
                    fits.push_back(fit_torus(m, cache, cfg.iso, constraint_for(rho)));
                SelectionPath path = selection_path(
                    fits, cfg.iso, static_cast<double>(cfg.n) * cfg.lattice.size());
                int selected;
                if (path.constant()) {
                    selected = path.breakpoints.front().model_index;
                } else {
                    JumpInfo j = find_N_min(path);
                    selected = path.eval(2.0 * j.N_min);
                }
                const std::string tag = rho_label(rho);
                rec["cls-slope|" + tag] = loss_torus(fits[selected].theta, truth, truth);
                for (size_t k = 0; k < fits.size(); ++k)
                    rec["model" + std::to_string(k) + "|" + tag] =
                        loss_torus(fits[k].theta, truth, truth);
            }
            if (!rho_sweep) {
                // Likelihood baselines share the per-model MLE fits.
                std::vector<LoglikResult> mle;
                mle.reserve(collection.size());
                for (const auto& m : collection) mle.push_back(fit_mle(m, cache, cfg.iso));
                for (auto crit : {InfoCriterion::aic, InfoCriterion::bic}) {
                    const double c = crit == InfoCriterion::aic
                                         ? 2.0
                                         : std::log(static_cast<double>(cfg.lattice.size()));
                    int best = 0;
                    double best_val = std::numeric_limits<double>::infinity();
                    for (size_t k = 0; k < mle.size(); ++k) {
                        double v = -2.0 * mle[k].loglik + c * collection[k].dim(cfg.iso);
                        if (v < best_val) {
                            best_val = v;
                            best = static_cast<int>(k);
                        }
                    }
                    rec[crit == InfoCriterion::aic ? "aic" : "bic"] =
                        loss_torus(mle[best].theta, truth, truth);
                }
            }
            int d = ++done;
            if (progress && d % 50 == 0)
                *progress << cfg.experiment << " phi=" << phi << ": " << d << "/" << cfg.reps
                          << " replications\n";
        });

        const std::string param = rho_sweep ? "" : "phi=" + trim_num(phi);
        for (double rho : rhos) {
            const std::string tag = rho_label(rho);
            const std::string cell_param = rho_sweep ? tag : param;
            RiskEstimate sel = aggregate(recs, "cls-slope|" + tag);
            std::vector<RiskEstimate> per_model;
            for (size_t k = 0; k < collection.size(); ++k)
                per_model.push_back(aggregate(recs, "model" + std::to_string(k) + "|" + tag));
            auto [oracle_idx, ratio] = oracle_and_ratio(per_model, sel);
            cells.add_risk("cls-slope", cell_param, rho_sweep ? rho : phi, sel);
            cells.add_ratio(cell_param, rho_sweep ? rho : phi, sel, per_model[oracle_idx]);
        }
        if (!rho_sweep) {
            cells.add_risk("aic", param, phi, aggregate(recs, "aic"));
            cells.add_risk("bic", param, phi, aggregate(recs, "bic"));
        }

        // One representative path dump per truth value (first replication).
        FieldObservations obs{cfg.lattice, {}};
        for (int k = 0; k < cfg.n; ++k) {
            Rng rng(cfg.seed, static_cast<uint64_t>(k));
            obs.data.push_back(sampler.draw(rng));
        }
        SelectionReport rep0 = slope_select_torus(obs, collection, cfg.iso, {});
        out.path_dumps.emplace_back(cfg.experiment + "_phi" + trim_num(phi) + "_rep0",
                                    io::path_to_json(rep0.path));
    }
    out.rows.insert(out.rows.end(), cells.rows.begin(), cells.rows.end());
    out.plot_data[cfg.experiment] = cells.plot;
}

// ---- plane drivers (table3..table6) ----

struct PlaneCellSpec {
    CorrelationFamily family;
    double kappa = 0.5;
    std::optional<AnisotropySpec> aniso;
    std::string param_label;
    double param_value = 0.0;
    bool estimate_kappa = false;
    bool run_cls = true;
    std::vector<CorrelationFamily> variogram_families; // usually {family}
};

void run_plane_cell(const ExperimentConfig& cfg, const PlaneCellSpec& cell,
                    BenchmarkOutput& out, CellSet& cells, std::ostream* progress) {
    CorrelationModel truth{cell.family, cfg.range, cell.kappa, 1.0};
    PlaneSampler sampler(truth, cfg.lattice, cell.aniso);
    PlaneLossEvaluator loss_eval(truth, cfg.lattice, cell.aniso);
    const auto collection = build_model_collection(cfg.lattice, cfg.collection_max_dim, cfg.iso);
    Sublattice common = common_sublattice(collection, cfg.lattice);
    const int kwin = kriging_window_for(cfg, cell.family, cell.kappa);

    std::vector<RepRecord> recs(cfg.reps);
    std::atomic<int> done{0};
    parallel_for(cfg.reps, [&](int rep) {
        FieldObservations obs{cfg.lattice, {}};
        for (int k = 0; k < cfg.n; ++k) {
            Rng rng(cfg.seed, static_cast<uint64_t>(rep) * cfg.n + k);
            obs.data.push_back(sampler.draw(rng));
        }
        RepRecord& rec = recs[rep];
        if (cell.run_cls) {
            SelectionReport sel =
                slope_select_plane(obs, collection, cfg.iso, cfg.grid_resolution);
            rec["cls-slope"] = loss_eval.loss(sel.final_fit.theta);
            rec["cls-selected-common"] = loss_eval.loss(sel.all_fits[sel.selected_index].theta);
            for (size_t k = 0; k < sel.all_fits.size(); ++k)
                rec["model" + std::to_string(k)] = loss_eval.loss(sel.all_fits[k].theta);
        }
        for (CorrelationFamily vf : cell.variogram_families) {
            std::string key = cell.variogram_families.size() == 1
                                  ? std::string("variogram")
                                  : "variogram-" + family_name(vf);
            try {
                std::optional<double> fix;
                if (vf == CorrelationFamily::matern && !cell.estimate_kappa) fix = cell.kappa;
                ThetaField tv = variogram_kriging_estimate(obs, vf, fix, kwin, cell.aniso);
                rec[key] = loss_eval.loss(tv);
            } catch (const Error&) {
                // failure recorded by the key's absence
            }
        }
        int d = ++done;
        if (progress && d % 25 == 0)
            *progress << cfg.experiment << " " << cell.param_label << ": " << d << "/"
                      << cfg.reps << " replications\n";
    });

    if (cell.run_cls) {
        RiskEstimate refit = aggregate(recs, "cls-slope");
        RiskEstimate sel_common = aggregate(recs, "cls-selected-common");
        std::vector<RiskEstimate> per_model;
        for (size_t k = 0; k < collection.size(); ++k)
            per_model.push_back(aggregate(recs, "model" + std::to_string(k)));
        auto [oracle_idx, ratio] = oracle_and_ratio(per_model, sel_common);
        cells.add_risk("cls-slope", cell.param_label, cell.param_value, refit);
        cells.add_ratio(cell.param_label, cell.param_value, sel_common, per_model[oracle_idx]);
    }
    for (CorrelationFamily vf : cell.variogram_families) {
        std::string key = cell.variogram_families.size() == 1
                              ? std::string("variogram")
                              : "variogram-" + family_name(vf);
        cells.add_risk(key, cell.param_label, cell.param_value, aggregate(recs, key));
    }

    if (cell.run_cls) {
        FieldObservations obs{cfg.lattice, {}};
        for (int k = 0; k < cfg.n; ++k) {
            Rng rng(cfg.seed, static_cast<uint64_t>(k));
            obs.data.push_back(sampler.draw(rng));
        }
        SelectionReport rep0 = slope_select_plane(obs, collection, cfg.iso, cfg.grid_resolution);
        out.path_dumps.emplace_back(cfg.experiment + "_" + cell.param_label + "_rep0",
                                    io::path_to_json(rep0.path));
    }
}

} // namespace

ThetaField variogram_kriging_estimate(const FieldObservations& obs, CorrelationFamily family,
                                      std::optional<double> fix_kappa, int window,
                                      const std::optional<AnisotropySpec>& known_aniso) {
    const double max_lag = std::min(obs.lattice.p1, obs.lattice.p2) / 2.0;
    VariogramBins bins =
        empirical_variogram(obs, max_lag, variogram_nbins(obs.lattice), known_aniso);
    VariogramFit fit = fit_variogram_wls(bins, family, fix_kappa);
    if (!fit.converged) throw NumericError("variogram_kriging_estimate: WLS fit diverged");
    return kriging_theta(fit, window, known_aniso);
}

ExperimentConfig named_experiment(const std::string& name) {
    ExperimentConfig cfg;
    cfg.experiment = name;
    if (name == "table1") {
        cfg.lattice = LatticeSpec(20, 20, true);
        cfg.reps = 200;
        cfg.phi_values = {0.015};
        cfg.rho_values = {2.0, 4.0, 8.0, kRhoInf};
        cfg.collection_max_dim = 21;
        cfg.estimators = {"cls-slope"};
        if (cfg.full_scale) cfg.reps = 1000;
    } else if (name == "table2") {
        cfg.lattice = LatticeSpec(20, 20, true);
        cfg.reps = 200;
        cfg.phi_values = {0.0, 0.0125, 0.015, 0.0175};
        cfg.collection_max_dim = 21;
        cfg.estimators = {"cls-slope", "aic", "bic"};
    } else if (name == "table3") {
        cfg.lattice = LatticeSpec(20, 20, false);
        cfg.reps = 200;
        cfg.families = {CorrelationFamily::exponential, CorrelationFamily::circular,
                        CorrelationFamily::spherical};
        cfg.collection_max_dim = 18;
        cfg.estimators = {"cls-slope", "variogram"};
    } else if (name == "table4") {
        cfg.lattice = LatticeSpec(30, 30, false);
        cfg.reps = 100;
        cfg.families = {CorrelationFamily::matern};
        cfg.kappa_values = {0.05, 0.25, 0.5, 1.0};
        cfg.collection_max_dim = 18;
        cfg.estimators = {"cls-slope", "variogram"};
    } else if (name == "table5") {
        cfg.lattice = LatticeSpec(30, 30, false);
        cfg.reps = 100;
        cfg.families = {CorrelationFamily::matern};
        cfg.kappa_values = {0.05};
        cfg.collection_max_dim = 18;
        cfg.estimators = {"variogram"};
    } else if (name == "table6") {
        cfg.lattice = LatticeSpec(30, 30, false);
        cfg.reps = 100;
        cfg.iso = false;
        cfg.families = {CorrelationFamily::matern};
        cfg.kappa_values = {0.05, 0.5, 1.0};
        cfg.aniso_ratios = {2.0};
        cfg.collection_max_dim = 28;
        cfg.estimators = {"cls-slope", "variogram"};
    } else if (name == "custom") {
        // caller fills everything in
    } else {
        throw ConfigError("unknown experiment: " + name);
    }
    return cfg;
}

void apply_config_json(ExperimentConfig& cfg, const io::json& j) {
    if (j.contains("experiment")) {
        cfg = named_experiment(j.at("experiment").get<std::string>());
    }
    if (j.contains("p1") || j.contains("p2") || j.contains("toroidal"))
        cfg.lattice = LatticeSpec(j.value("p1", cfg.lattice.p1), j.value("p2", cfg.lattice.p2),
                                  j.value("toroidal", cfg.lattice.toroidal));
    cfg.reps = j.value("reps", cfg.reps);
    cfg.n = j.value("n", cfg.n);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.collection_max_dim = j.value("collection_max_dim", cfg.collection_max_dim);
    cfg.iso = j.value("iso", cfg.iso);
    cfg.range = j.value("range", cfg.range);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.grid_resolution = j.value("grid_resolution", cfg.grid_resolution);
    cfg.kriging_window = j.value("kriging_window", cfg.kriging_window);
    if (j.contains("full_scale")) {
        cfg.full_scale = j.at("full_scale").get<bool>();
        if (cfg.full_scale) {
            cfg.reps = 1000;
            if (!cfg.lattice.toroidal) {
                cfg.lattice = LatticeSpec(100, 100, false);
                if (cfg.experiment == "table4")
                    cfg.kappa_values = {0.05, 0.25, 0.5, 1.0, 2.0, 4.0};
                if (cfg.experiment == "table6") {
                    cfg.kappa_values = {0.05, 0.25, 0.5, 1.0, 2.0, 4.0};
                    cfg.aniso_ratios = {2.0, 5.0};
                }
            }
        }
    }
    if (j.contains("phi_values")) cfg.phi_values = j.at("phi_values").get<std::vector<double>>();
    if (j.contains("rho_values")) cfg.rho_values = j.at("rho_values").get<std::vector<double>>();
    if (j.contains("kappa_values"))
        cfg.kappa_values = j.at("kappa_values").get<std::vector<double>>();
    if (j.contains("aniso_ratios"))
        cfg.aniso_ratios = j.at("aniso_ratios").get<std::vector<double>>();
    if (j.contains("families")) {
        cfg.families.clear();
        for (const auto& f : j.at("families"))
            cfg.families.push_back(family_from_name(f.get<std::string>()));
    }
}

io::json config_to_json(const ExperimentConfig& cfg) {
    io::json fams = io::json::array();
    for (auto f : cfg.families) fams.push_back(family_name(f));
    return io::json{{"experiment", cfg.experiment},
                    {"p1", cfg.lattice.p1},
                    {"p2", cfg.lattice.p2},
                    {"toroidal", cfg.lattice.toroidal},
                    {"reps", cfg.reps},
                    {"n", cfg.n},
                    {"seed", cfg.seed},
                    {"collection_max_dim", cfg.collection_max_dim},
                    {"iso", cfg.iso},
                    {"full_scale", cfg.full_scale},
                    {"phi_values", cfg.phi_values},
                    {"rho_values", cfg.rho_values},
                    {"kappa_values", cfg.kappa_values},
                    {"aniso_ratios", cfg.aniso_ratios},
                    {"families", fams},
                    {"range", cfg.range},
                    {"grid_resolution", cfg.grid_resolution},
                    {"kriging_window", cfg.kriging_window},
                    {"output_dir", cfg.output_dir}};
}

BenchmarkOutput run_benchmark(const ExperimentConfig& cfg, std::ostream* progress) {
    if (cfg.reps < 2) throw ConfigError("run_benchmark: reps must be >= 2");
    BenchmarkOutput out;
    out.plot_data = io::json::object();

    if (cfg.experiment == "table1" || cfg.experiment == "table2" ||
        (cfg.experiment == "custom" && cfg.lattice.toroidal)) {
        ExperimentConfig c = cfg;
        if (c.collection_max_dim < 0) c.collection_max_dim = 21;
        if (c.phi_values.empty()) throw ConfigError("torus benchmark: phi_values required");
        if (c.experiment == "table1" && c.rho_values.empty())
            c.rho_values = {2.0, 4.0, 8.0, kRhoInf};
        run_torus_study(c, out, progress);
    } else {
        ExperimentConfig c = cfg;
        if (c.collection_max_dim < 0) c.collection_max_dim = 18;
        if (c.families.empty()) throw ConfigError("plane benchmark: families required");
        CellSet cells{c.experiment, {}, {}};
        for (CorrelationFamily fam : c.families) {
            std::vector<double> kappas =
                fam == CorrelationFamily::matern ? c.kappa_values : std::vector<double>{0.5};
            if (kappas.empty()) kappas = {0.5};
            std::vector<std::optional<AnisotropySpec>> anisos;
            if (c.aniso_ratios.empty()) anisos.push_back(std::nullopt);
            else
                for (double r : c.aniso_ratios) anisos.push_back(AnisotropySpec{r, 0.0});
            for (double kappa : kappas)
                for (const auto& aniso : anisos) {
                    PlaneCellSpec cell;
                    cell.family = fam;
                    cell.kappa = kappa;
                    cell.aniso = aniso;
                    cell.estimate_kappa = fam == CorrelationFamily::matern &&
                                          (c.experiment == "table4" || c.experiment == "table5" ||
                                           c.experiment == "table6");
                    cell.run_cls = c.experiment != "table5";
                    if (c.experiment == "table5")
                        cell.variogram_families = {
                            CorrelationFamily::exponential, CorrelationFamily::circular,
                            CorrelationFamily::spherical, CorrelationFamily::matern};
                    else
                        cell.variogram_families = {fam};
                    std::string label = "family=" + family_name(fam);
                    double value = 0.0;
                    if (fam == CorrelationFamily::matern) {
                        label += ",kappa=" + trim_num(kappa);
                        value = kappa;
                    }
                    if (aniso) {
                        label += ",ratio=" + trim_num(aniso->ratio);
                        value = aniso->ratio * 100 + value;
                    }
                    cell.param_label = label;
                    cell.param_value = value;
                    run_plane_cell(c, cell, out, cells, progress);
                }
        }
        out.rows.insert(out.rows.end(), cells.rows.begin(), cells.rows.end());
        out.plot_data[c.experiment] = cells.plot;
    }

    io::json failures = io::json::array();
    for (const auto& r : out.rows)
        if (r.failures > 0)
            failures.push_back(
                {{"estimator", r.estimator}, {"param", r.param}, {"failures", r.failures}});
    out.provenance = io::json{{"config", config_to_json(cfg)},
                              {"versions",
                               {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                              std::to_string(EIGEN_MINOR_VERSION)},
                                {"gsl", GSL_VERSION}}},
                              {"excluded_failures", failures}};
    return out;
}

void write_benchmark_output(const ExperimentConfig& cfg, const BenchmarkOutput& out) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    io::write_risk_csv((fs::path(cfg.output_dir) / "risks.csv").string(), out.rows);
    io::write_text((fs::path(cfg.output_dir) / "provenance.json").string(),
                   out.provenance.dump(2) + "\n");
    io::write_text((fs::path(cfg.output_dir) / "plot_data.json").string(),
                   out.plot_data.dump(2) + "\n");
    fs::create_directories(fs::path(cfg.output_dir) / "paths");
    for (const auto& [name, j] : out.path_dumps)
        io::write_text((fs::path(cfg.output_dir) / "paths" / (name + ".json")).string(),
                       j.dump(2) + "\n");
}

} // namespace gmrf
