#pragma once

#include <complex>
#include <span>
#include <utility>
#include <vector>

namespace tefs::frontend {

// Discrete analytic signal via the one-sided spectrum: FFT, zero negative
// bins, double positive bins (DC and Nyquist kept), inverse FFT. The real
// part is replaced by the input so it matches exactly. Throws
// InvalidArgument for fewer than two samples.
std::vector<std::complex<double>> analytic_signal(std::span<const double> x);

struct EnvelopeFineStructure {
    std::vector<double> envelope;        // |analytic|, >= 0
    std::vector<double> fine_structure;  // cos of the four-quadrant phase, in [-1, 1]
};

// envelope * fine_structure reproduces the input. Where the analytic
// magnitude is exactly zero the fine structure is 0.
EnvelopeFineStructure envelope_fine_structure(std::span<const double> subband);

}  // namespace tefs::frontend
