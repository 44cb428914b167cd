#include "tefs/frontend/hilbert.hpp"

#include <algorithm>
#include <cmath>

#include "fftw_util.hpp"
#include "tefs/error.hpp"

namespace tefs::frontend {

std::vector<std::complex<double>> analytic_signal(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw InvalidArgument("analytic signal needs at least two samples");
    const int ni = static_cast<int>(n);

    detail::FftwRealBuffer in(n);
    detail::FftwBuffer spec(n);
    detail::Plan forward([&] { return fftw_plan_dft_r2c_1d(ni, in.data, spec.data, FFTW_ESTIMATE); });
    detail::Plan inverse([&] { return fftw_plan_dft_1d(ni, spec.data, spec.data, FFTW_BACKWARD, FFTW_ESTIMATE); });

    for (std::size_t i = 0; i < n; ++i) in.data[i] = x[i];
    forward.execute();

    // r2c fills bins 0..n/2. Double the strictly positive bins, keep DC and
    // (for even n) Nyquist, zero the negative half.
    const std::size_t half = n / 2;
    const std::size_t last_positive = n % 2 == 0 ? half - 1 : half;
    for (std::size_t k = 1; k <= last_positive; ++k) {
        spec.data[k][0] *= 2.0;
        spec.data[k][1] *= 2.0;
    }
    for (std::size_t k = last_positive + 1 + (n % 2 == 0 ? 1 : 0); k < n; ++k) {
        spec.data[k][0] = 0.0;
        spec.data[k][1] = 0.0;
    }
    inverse.execute();

    std::vector<std::complex<double>> out(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {x[i], spec.data[i][1] * scale};
    return out;
}

EnvelopeFineStructure envelope_fine_structure(std::span<const double> subband) {
    const auto analytic = analytic_signal(subband);
    EnvelopeFineStructure out;
    out.envelope.resize(analytic.size());
    out.fine_structure.resize(analytic.size());
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double re = analytic[i].real();
        const double im = analytic[i].imag();
        const double mag = std::hypot(re, im);
        out.envelope[i] = mag;
        // cos(atan2(im, re)) == re / |z|; clamp guards the last ulp.
        out.fine_structure[i] = mag > 0.0 ? std::clamp(re / mag, -1.0, 1.0) : 0.0;
    }
    return out;
}

}  // namespace tefs::frontend
