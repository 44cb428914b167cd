#include "tefs/frontend/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "tefs/error.hpp"
#include "tefs/frontend/greenwood.hpp"

namespace tefs::frontend {

namespace {

using cd = std::complex<double>;

cd section_response(const Biquad& s, double omega) {
    const cd z1 = std::polar(1.0, -omega);
    const cd z2 = z1 * z1;
    return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

BandFilter design_band(double f1, double f2, int fs, int order) {
    const double two_fs = 2.0 * fs;
    const double w1 = two_fs * std::tan(std::numbers::pi * f1 / fs);
    const double w2 = two_fs * std::tan(std::numbers::pi * f2 / fs);
    const double w0 = std::sqrt(w1 * w2);
    // Widen the prototype so the forward-backward response, |H|^2, is at half
    // power on the cutoffs: one pass gives |H|^2 = 1/sqrt(2) there.
    const double edge = std::pow(std::sqrt(2.0) - 1.0, 1.0 / (2.0 * order));
    const double bw = (w2 - w1) / edge;

    std::vector<cd> upper;
    for (int m = 0; m < order; ++m) {
        const cd p = std::polar(1.0, std::numbers::pi * (2.0 * m + order + 1) / (2.0 * order));
        const cd pb = p * bw;
        const cd root = std::sqrt(pb * pb - 4.0 * w0 * w0);
        for (const cd s : {(pb + root) / 2.0, (pb - root) / 2.0}) {
            const cd z = (two_fs + s) / (two_fs - s);
            if (z.imag() > 0.0) upper.push_back(z);
        }
    }
    if (static_cast<int>(upper.size()) != order)
        throw NumericError("band-pass design produced an unexpected pole layout for [" + std::to_string(f1) +
                           ", " + std::to_string(f2) + "] Hz");
    std::sort(upper.begin(), upper.end(), [](cd a, cd b) { return std::arg(a) < std::arg(b); });

    const double center = 2.0 * std::atan(w0 / two_fs);
    BandFilter band{f1, f2, {}};
    for (const cd q : upper) {
        Biquad s{1.0, 0.0, -1.0, -2.0 * q.real(), std::norm(q)};
        const double g = std::abs(section_response(s, center));
        s.b0 /= g;
        s.b2 /= g;
        band.sections.push_back(s);
    }
    return band;
}

void run_cascade(const std::vector<Biquad>& sections, std::vector<double>& y) {
    for (const Biquad& s : sections) {
        double z1 = 0.0, z2 = 0.0;
        for (double& v : y) {
            const double x = v;
            const double out = s.b0 * x + z1;
            z1 = s.b1 * x - s.a1 * out + z2;
            z2 = s.b2 * x - s.a2 * out;
            v = out;
        }
    }
}

}  // namespace

double Filterbank::response_db(int k, double freq_hz) const {
    const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate;
    double mag = 1.0;
    for (const Biquad& s : bands.at(static_cast<std::size_t>(k)).sections) mag *= std::abs(section_response(s, omega));
    return 20.0 * std::log10(std::max(mag, 1e-300));
}

double Filterbank::zero_phase_response_db(int k, double freq_hz) const { return 2.0 * response_db(k, freq_hz); }

Filterbank design_filterbank(int K, double f_lo, double f_hi, int fs, int order) {
    if (K < 1) throw InvalidArgument("filterbank needs at least one band");
    if (order < 1) throw InvalidArgument("filter order must be positive");
    if (fs <= 0) throw InvalidArgument("sample rate must be positive");
    if (!(f_lo > 0.0 && f_lo < f_hi))
        throw InvalidArgument("filterbank needs 0 < f_lo < f_hi");
    if (!(f_hi < 0.5 * fs))
        throw InvalidArgument("f_hi must be below the Nyquist frequency (" + std::to_string(0.5 * fs) + " Hz)");

    Filterbank fb;
    fb.sample_rate = fs;
    fb.order = order;
    const double x_lo = greenwood_pos(f_lo);
    const double x_hi = greenwood_pos(f_hi);
    const double step = (x_hi - x_lo) / K;
    fb.cutoffs.resize(static_cast<std::size_t>(K) + 1);
    fb.cutoffs.front() = f_lo;
    fb.cutoffs.back() = f_hi;
    const GreenwoodMap map;
    for (int i = 1; i < K; ++i) {
        const double x = x_lo + i * step;
        fb.cutoffs[static_cast<std::size_t>(i)] = map.A * (std::pow(10.0, map.a * x) - map.k);
    }
    for (int i = 0; i < K; ++i)
        fb.bands.push_back(design_band(fb.cutoffs[static_cast<std::size_t>(i)],
                                       fb.cutoffs[static_cast<std::size_t>(i) + 1], fs, order));
    return fb;
}

std::vector<double> filtfilt(const BandFilter& band, std::span<const double> x) {
    std::vector<double> y(x.begin(), x.end());
    run_cascade(band.sections, y);
    std::reverse(y.begin(), y.end());
    run_cascade(band.sections, y);
    std::reverse(y.begin(), y.end());
    return y;
}

std::vector<SubbandSignal> filter_subbands(const Waveform& w, const Filterbank& fb) {
    if (w.sample_rate != fb.sample_rate)
        throw InvalidArgument("waveform rate " + std::to_string(w.sample_rate) + " Hz does not match filterbank rate " +
                              std::to_string(fb.sample_rate) + " Hz");
    std::vector<SubbandSignal> out;
    out.reserve(fb.bands.size());
    for (int k = 0; k < fb.size(); ++k) out.push_back({k, filtfilt(fb.bands[static_cast<std::size_t>(k)], w.samples)});
    return out;
}

}  // namespace tefs::frontend
