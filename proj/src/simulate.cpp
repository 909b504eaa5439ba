#include "gmrf/simulate.hpp"

#include <cmath>
#include <complex>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>
#include <gsl/gsl_sf_gamma.h>

#include "gmrf/fft.hpp"
#include "gmrf/spectral.hpp"

namespace gmrf {

std::string family_name(CorrelationFamily f) {
    switch (f) {
        case CorrelationFamily::exponential: return "exponential";
        case CorrelationFamily::circular: return "circular";
        case CorrelationFamily::spherical: return "spherical";
        case CorrelationFamily::matern: return "matern";
    }
    return "?";
}

CorrelationFamily family_from_name(const std::string& name) {
    if (name == "exponential" || name == "exp") return CorrelationFamily::exponential;
    if (name == "circular") return CorrelationFamily::circular;
    if (name == "spherical") return CorrelationFamily::spherical;
    if (name == "matern") return CorrelationFamily::matern;
    throw ConfigError("unknown correlation family: " + name);
}

void CorrelationModel::validate() const {
    if (range <= 0) throw ConfigError("CorrelationModel: range must be positive");
    if (variance <= 0) throw ConfigError("CorrelationModel: variance must be positive");
    if (family == CorrelationFamily::matern && kappa <= 0)
        throw ConfigError("CorrelationModel: kappa must be positive");
}

ThetaField make_theta_phi(double phi, const LatticeSpec& lattice) {
    if (!lattice.toroidal) throw ConfigError("make_theta_phi: toroidal lattice required");
    if (phi < 0) throw ConfigError("make_theta_phi: phi must be >= 0");
    ThetaField theta(lattice, 1.0, true);
    const double r2 = 17.0;
    for (int i = 0; i < lattice.p1; ++i)
        for (int j = 0; j < lattice.p2; ++j) {
            if (i == 0 && j == 0) continue;
            double d = toroidal_norm({i, j}, lattice);
            if (d * d <= r2) theta.coeffs(i, j) = phi;
        }
    if (phi > 0) {
        auto v = is_valid_torus(theta);
        if (!v.valid)
            throw NumericError("make_theta_phi: phi = " + std::to_string(phi) +
                               " gives max lambda >= 1");
    }
    return theta;
}

TorusSampler::TorusSampler(const ThetaField& theta) : lattice_(theta.lattice) {
    auto v = is_valid_torus(theta);
    if (!v.valid)
        throw NumericError("TorusSampler: invalid theta, min(1-lambda) = " +
                           std::to_string(v.min_one_minus_lambda));
    EigenGrid g = dft2_eigenvalues(lattice_, theta.coeffs);
    sd_ = (theta.sigma2 / (1.0 - g.values.array())).sqrt().matrix();
}

namespace {

// Fill a Hermitian complex Gaussian grid: self-conjugate frequencies get a
// real N(0,1); conjugate pairs share (a+ib)/sqrt(2). Unit variance per
// frequency either way, so the synthesized field has exactly the target
// covariance.
Eigen::MatrixXcd hermitian_noise(const LatticeSpec& lat, Rng& rng) {
    Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(lat.p1, lat.p2);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> filled(lat.p1, lat.p2);
    filled.setConstant(false);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < lat.p1; ++i)
        for (int j = 0; j < lat.p2; ++j) {
            if (filled(i, j)) continue;
            int ii = lat.wrap_row(-i), jj = lat.wrap_col(-j);
            if (ii == i && jj == j) {
                z(i, j) = rng.normal();
                filled(i, j) = true;
            } else {
                double a = rng.normal(), b = rng.normal();
                z(i, j) = std::complex<double>(a * inv_sqrt2, b * inv_sqrt2);
                z(ii, jj) = std::conj(z(i, j));
                filled(i, j) = filled(ii, jj) = true;
            }
        }
    return z;
}

Eigen::MatrixXd synthesize(const LatticeSpec& lat, const Eigen::MatrixXd& sd, Rng& rng) {
    Eigen::MatrixXcd z = hermitian_noise(lat, rng);
    z.array() *= sd.cast<std::complex<double>>().array();
    Eigen::MatrixXcd x = fft::dft2(z);
    // The unnormalized DFT of Hermitian input is real; 1/sqrt(p1 p2) restores
    // unit-variance scaling.
    return x.real() / std::sqrt(static_cast<double>(lat.size()));
}

} // namespace

Eigen::MatrixXd TorusSampler::draw(Rng& rng) const { return synthesize(lattice_, sd_, rng); }

FieldObservations sample_torus_gmrf(const ThetaField& theta, int n, uint64_t seed,
                                    uint64_t first_stream) {
    if (n < 1) throw ConfigError("sample_torus_gmrf: n must be >= 1");
    TorusSampler sampler(theta);
    FieldObservations obs{theta.lattice, {}};
    obs.data.reserve(n);
    for (int k = 0; k < n; ++k) {
        Rng rng(seed, first_stream + static_cast<uint64_t>(k));
        obs.data.push_back(sampler.draw(rng));
    }
    return obs;
}

double bessel_k(double nu, double x) {
    if (x <= 0) throw ConfigError("bessel_k: x must be positive");
    if (nu == 0) throw ConfigError("bessel_k: nu must be nonzero");
    gsl_sf_result res;
    gsl_error_handler_t* old = gsl_set_error_handler_off();
    int status = gsl_sf_bessel_Knu_e(std::abs(nu), x, &res); // K is even in nu
    gsl_set_error_handler(old);
    if (status != 0)
        throw NumericError("bessel_k: gsl failure (nu=" + std::to_string(nu) +
                           ", x=" + std::to_string(x) + "): " + gsl_strerror(status));
    return res.val;
}

double correlation_value(const CorrelationModel& model, double di, double dj,
                         const std::optional<AnisotropySpec>& aniso) {
    model.validate();
    if (aniso) {
        aniso->validate();
        const double c = std::cos(aniso->rotation), s = std::sin(aniso->rotation);
        double u = c * di + s * dj;
        double v = -s * di + c * dj;
        di = u;
        dj = aniso->ratio * v;
    }
    const double d = std::hypot(di, dj);
    const double g = d / model.range;
    double rho = 0.0;
    switch (model.family) {
        case CorrelationFamily::exponential:
            rho = std::exp(-g);
            break;
        case CorrelationFamily::circular:
            rho = g <= 1.0 ? 1.0 - 2.0 / M_PI * (g * std::sqrt(1.0 - g * g) +
                                                 std::asin(std::sqrt(g)))
                           : 0.0;
            break;
        case CorrelationFamily::spherical:
            rho = g <= 1.0 ? 1.0 - 1.5 * g + 0.5 * g * g * g : 0.0;
            break;
        case CorrelationFamily::matern:
            if (d == 0.0) {
                rho = 1.0;
            } else {
                // 1/(2^(k-1) Gamma(k)) * g^k * K_k(g)
                double log_pref = -(model.kappa - 1.0) * std::log(2.0) -
                                  gsl_sf_lngamma(model.kappa) + model.kappa * std::log(g);
                rho = std::exp(log_pref) * bessel_k(model.kappa, g);
            }
            break;
    }
    return model.variance * rho;
}

namespace {

Eigen::MatrixXd window_covariance(const CorrelationModel& model, const LatticeSpec& window,
                                  const std::optional<AnisotropySpec>& aniso) {
    const int n = window.size();
    Eigen::MatrixXd C(n, n);
    // By stationarity only p1 x p2 distinct entries exist; tabulate them once.
    Eigen::MatrixXd table(2 * window.p1 - 1, 2 * window.p2 - 1);
    for (int di = -(window.p1 - 1); di <= window.p1 - 1; ++di)
        for (int dj = -(window.p2 - 1); dj <= window.p2 - 1; ++dj)
            table(di + window.p1 - 1, dj + window.p2 - 1) =
                correlation_value(model, di, dj, aniso);
    for (int i1 = 0; i1 < window.p1; ++i1)
        for (int j1 = 0; j1 < window.p2; ++j1)
            for (int i2 = 0; i2 < window.p1; ++i2)
                for (int j2 = 0; j2 < window.p2; ++j2)
                    C(i1 * window.p2 + j1, i2 * window.p2 + j2) =
                        table(i2 - i1 + window.p1 - 1, j2 - j1 + window.p2 - 1);
    return C;
}

} // namespace

PlaneSampler::PlaneSampler(const CorrelationModel& model, const LatticeSpec& window,
                           std::optional<AnisotropySpec> aniso)
    : window_(window) {
    if (window.toroidal) throw ConfigError("PlaneSampler: non-toroidal window required");
    model.validate();
    if (window.size() <= 2500) {
        Eigen::MatrixXd C = window_covariance(model, window, aniso);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        const double wmax = es.eigenvalues().maxCoeff();
        if (es.eigenvalues().minCoeff() < -1e-8 * wmax)
            throw NumericError("PlaneSampler: window covariance is not PSD (min eig " +
                               std::to_string(es.eigenvalues().minCoeff()) + ")");
        factor_ = es.eigenvectors() *
                  es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        return;
    }
    // Circulant embedding on a padded torus; retry once at factor 4.
    for (int pad : {2, 4}) {
        LatticeSpec torus(pad * window.p1, pad * window.p2, true);
        Eigen::MatrixXd base(torus.p1, torus.p2);
        for (int i = 0; i < torus.p1; ++i)
            for (int j = 0; j < torus.p2; ++j)
                base(i, j) = correlation_value(model, torus.rep_row(i), torus.rep_col(j), aniso);
        Eigen::MatrixXcd spec = fft::dft2(base);
        Eigen::MatrixXd re = spec.real();
        const double smax = re.maxCoeff();
        if (re.minCoeff() < -1e-8 * smax) continue;
        embedding_ = std::make_unique<Embedding>();
        embedding_->torus = torus;
        embedding_->sd = re.cwiseMax(0.0).cwiseSqrt();
        return;
    }
    throw NumericError("PlaneSampler: circulant embedding failed (negative spectrum at "
                       "padding factors 2 and 4)");
}

Eigen::MatrixXd PlaneSampler::draw(Rng& rng) const {
    if (embedding_) {
        Eigen::MatrixXd big = synthesize(embedding_->torus, embedding_->sd, rng);
        return big.topLeftCorner(window_.p1, window_.p2);
    }
    Eigen::VectorXd z(window_.size());
    for (int k = 0; k < z.size(); ++k) z(k) = rng.normal();
    Eigen::VectorXd x = factor_ * z;
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
               x.data(), window_.p1, window_.p2);
}

FieldObservations sample_plane_window(const CorrelationModel& model, const LatticeSpec& window,
                                      int n, std::optional<AnisotropySpec> aniso, uint64_t seed,
                                      uint64_t first_stream) {
    if (n < 1) throw ConfigError("sample_plane_window: n must be >= 1");
    PlaneSampler sampler(model, window, aniso);
    FieldObservations obs{window, {}};
    obs.data.reserve(n);
    for (int k = 0; k < n; ++k) {
        Rng rng(seed, first_stream + static_cast<uint64_t>(k));
        obs.data.push_back(sampler.draw(rng));
    }
    return obs;
}

} // namespace gmrf
