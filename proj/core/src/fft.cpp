#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "lfboot/error.hpp"

namespace lfboot::detail {
namespace {

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t size, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_pair(size, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(size);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(size), buf, buf, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw NumericalError("FFTW could not create a plan");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

void execute(std::span<std::complex<double>> data, int sign) {
    if (data.empty()) return;
    fftw_plan plan = cache().get(data.size(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

std::size_t next_fast_size(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

}  // namespace

void fft_forward(std::span<std::complex<double>> data) { execute(data, FFTW_FORWARD); }

void fft_backward(std::span<std::complex<double>> data) { execute(data, FFTW_BACKWARD); }

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> h) {
    if (a.empty() || h.empty()) return {};
    const std::size_t out_len = a.size() + h.size() - 1;
    const std::size_t m = next_fast_size(out_len);

    // Pack a into the real part and h into the imaginary part; one forward
    // transform gives both spectra.
    std::vector<std::complex<double>> z(m);
    for (std::size_t i = 0; i < a.size(); ++i) z[i].real(a[i]);
    for (std::size_t i = 0; i < h.size(); ++i) z[i].imag(h[i]);
    fft_forward(z);

    std::vector<std::complex<double>> prod(m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto zk = z[k];
        const auto zc = std::conj(z[(m - k) % m]);
        const auto fa = 0.5 * (zk + zc);
        const auto fh = std::complex<double>(0.0, -0.5) * (zk - zc);
        prod[k] = fa * fh;
    }
    fft_backward(prod);

    std::vector<double> out(out_len);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = prod[i].real() * scale;
    return out;
}

}  // namespace lfboot::detail
