#include "gmrf/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gmrf::io {

static_assert(std::endian::native == std::endian::little,
              "observation files are little-endian; big-endian hosts unsupported");

json theta_to_json(const ThetaField& theta) {
    json nz = json::array();
    StencilCoeffs s = theta.to_stencil();
    for (size_t k = 0; k < s.size(); ++k)
        nz.push_back({{"i", s.offsets[k].di}, {"j", s.offsets[k].dj}, {"value", s.values[k]}});
    return json{{"p1", theta.lattice.p1},
                {"p2", theta.lattice.p2},
                {"toroidal", theta.lattice.toroidal},
                {"sigma2", theta.sigma2},
                {"iso", theta.iso},
                {"nonzero", nz}};
}

ThetaField theta_from_json(const json& j) {
    LatticeSpec lat(j.at("p1").get<int>(), j.at("p2").get<int>(),
                    j.value("toroidal", true));
    ThetaField theta(lat, j.at("sigma2").get<double>(), j.value("iso", false));
    for (const auto& e : j.at("nonzero"))
        theta.coeffs(lat.wrap_row(e.at("i").get<int>()), lat.wrap_col(e.at("j").get<int>())) =
            e.at("value").get<double>();
    theta.check_invariants(1e-9);
    return theta;
}

json model_to_json(const NeighborhoodModel& m) {
    json offs = json::array();
    for (const auto& o : m.offsets) offs.push_back({o.di, o.dj});
    return json{{"radius", m.radius},
                {"offsets", offs},
                {"d_m", m.d_m},
                {"d_m_iso", m.d_m_iso}};
}

json collection_to_json(const std::vector<NeighborhoodModel>& collection) {
    json arr = json::array();
    for (const auto& m : collection) arr.push_back(model_to_json(m));
    return arr;
}

json fit_to_json(const FitResult& fit) {
    json j{{"theta", theta_to_json(fit.theta)},
           {"criterion", fit.criterion},
           {"d_m", fit.model.d_m},
           {"d_m_iso", fit.model.d_m_iso},
           {"radius", fit.model.radius},
           {"on_boundary", fit.on_boundary},
           {"kkt_residual", fit.kkt_residual},
           {"non_unique", fit.non_unique}};
    if (fit.sublattice) j["sublattice_size"] = fit.sublattice->count();
    return j;
}

json path_to_json(const SelectionPath& path) {
    json bps = json::array();
    for (const auto& bp : path.breakpoints)
        bps.push_back({{"N", bp.N},
                       {"model_index", bp.model_index},
                       {"dim", path.dims[bp.model_index]}});
    return json{{"breakpoints", bps},
                {"normalization", path.normalization},
                {"dims", path.dims}};
}

json report_to_json(const SelectionReport& rep) {
    json table = json::array();
    for (const auto& row : rep.table)
        table.push_back(
            {{"index", row.index}, {"dim", row.dim}, {"criterion", row.criterion}});
    return json{{"path", path_to_json(rep.path)},
                {"N_min_hat", rep.N_min_hat},
                {"jump_size", rep.jump_size},
                {"selected_index", rep.selected_index},
                {"final_fit", fit_to_json(rep.final_fit)},
                {"models", table},
                {"warnings", rep.warnings}};
}

json variogram_fit_to_json(const VariogramFit& fit) {
    json bins = json::array();
    for (int k = 0; k < fit.bins.size(); ++k)
        bins.push_back({{"lag", fit.bins.lag[k]},
                        {"semivariance", fit.bins.semivariance[k]},
                        {"count", fit.bins.count[k]}});
    json j{{"family", family_name(fit.family)},
           {"range", fit.range_hat},
           {"variance", fit.variance_hat},
           {"converged", fit.converged},
           {"reweight_rounds", fit.reweight_rounds},
           {"bins", bins}};
    if (fit.kappa_hat) j["kappa"] = *fit.kappa_hat;
    return j;
}

void write_observations(const std::string& path, const FieldObservations& obs) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("write_observations: cannot open " + path);
    auto put_i64 = [&](int64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
    put_i64(obs.lattice.p1);
    put_i64(obs.lattice.p2);
    put_i64(obs.n());
    for (const auto& x : obs.data)
        for (int i = 0; i < obs.lattice.p1; ++i)
            for (int j = 0; j < obs.lattice.p2; ++j) {
                double v = x(i, j);
                f.write(reinterpret_cast<const char*>(&v), 8);
            }
    if (!f) throw ConfigError("write_observations: write failed on " + path);
}

FieldObservations read_observations(const std::string& path, bool toroidal) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("read_observations: cannot open " + path);
    auto get_i64 = [&]() {
        int64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    int64_t p1 = get_i64(), p2 = get_i64(), n = get_i64();
    if (!f || p1 < 2 || p2 < 2 || n < 1 || p1 > 100000 || p2 > 100000)
        throw ConfigError("read_observations: corrupt header in " + path);
    FieldObservations obs{LatticeSpec(static_cast<int>(p1), static_cast<int>(p2), toroidal), {}};
    obs.data.reserve(n);
    for (int64_t k = 0; k < n; ++k) {
        Eigen::MatrixXd x(p1, p2);
        for (int i = 0; i < p1; ++i)
            for (int j = 0; j < p2; ++j) {
                double v;
                f.read(reinterpret_cast<char*>(&v), 8);
                x(i, j) = v;
            }
        obs.data.push_back(std::move(x));
    }
    if (!f) throw ConfigError("read_observations: truncated file " + path);
    return obs;
}

void write_observations_csv(const std::string& path, const FieldObservations& obs) {
    std::ofstream f(path);
    if (!f) throw ConfigError("write_observations_csv: cannot open " + path);
    f << "replication,row,col,value\n";
    for (int k = 0; k < obs.n(); ++k)
        for (int i = 0; i < obs.lattice.p1; ++i)
            for (int j = 0; j < obs.lattice.p2; ++j) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g\n", k, i, j,
                              obs.data[k](i, j));
                f << buf;
            }
}

namespace {

std::string fmt6(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

void write_risk_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    std::ofstream f(path);
    if (!f) throw ConfigError("write_risk_csv: cannot open " + path);
    f << "experiment,estimator,param,risk_mean,ci95,reps,failures\n";
    for (const auto& r : rows)
        f << r.experiment << ',' << r.estimator << ',' << r.param << ',' << fmt6(r.risk_mean)
          << ',' << fmt6(r.ci95) << ',' << r.reps << ',' << r.failures << '\n';
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw ConfigError("write_text: cannot open " + path);
    f << content;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("read_text: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace gmrf::io
