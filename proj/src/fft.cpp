#include "gmrf/fft.hpp"

#include <map>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace gmrf::fft {

namespace {

// FFTW planning is not thread-safe; executing a cached plan on fresh arrays
// is (FFTW_UNALIGNED removes the alignment requirement of the new-array API).
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    fftw_plan get(int rows, int cols, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::tuple{rows, cols, sign};
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> a(static_cast<size_t>(rows) * cols);
        std::vector<std::complex<double>> b(a.size());
        fftw_plan p = fftw_plan_dft_2d(rows, cols, reinterpret_cast<fftw_complex*>(a.data()),
                                       reinterpret_cast<fftw_complex*>(b.data()), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_[key] = p;
        return p;
    }

private:
    PlanCache() = default;
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

Eigen::MatrixXcd run(const Eigen::MatrixXcd& in, int sign) {
    const int rows = static_cast<int>(in.rows()), cols = static_cast<int>(in.cols());
    std::vector<std::complex<double>> a(static_cast<size_t>(rows) * cols);
    std::vector<std::complex<double>> b(a.size());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) a[static_cast<size_t>(i) * cols + j] = in(i, j);
    fftw_plan p = PlanCache::instance().get(rows, cols, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(a.data()),
                     reinterpret_cast<fftw_complex*>(b.data()));
    Eigen::MatrixXcd out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) out(i, j) = b[static_cast<size_t>(i) * cols + j];
    return out;
}

} // namespace

Eigen::MatrixXcd dft2(const Eigen::MatrixXcd& in) { return run(in, FFTW_BACKWARD); }

Eigen::MatrixXcd dft2_conj(const Eigen::MatrixXcd& in) { return run(in, FFTW_FORWARD); }

Eigen::MatrixXcd dft2(const Eigen::MatrixXd& in) {
    return dft2(Eigen::MatrixXcd(in.cast<std::complex<double>>()));
}

} // namespace gmrf::fft
