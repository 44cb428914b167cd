#pragma once

namespace tefs::frontend {

// Human cochlear frequency-position map f(x) = A (10^(a x) - k), with x the
// relative distance from the apex in [0, 1].
struct GreenwoodMap {
    double A = 165.4;
    double a = 2.1;
    double k = 0.88;
};

// Frequency in Hz at cochlear position x in [0, 1]; throws InvalidArgument
// outside that range.
double greenwood_freq(double x, const GreenwoodMap& map = {});

// Inverse map. Accepts any frequency above the map's asymptote -A k (so
// positions outside [0, 1] can be represented during design arithmetic).
double greenwood_pos(double freq_hz, const GreenwoodMap& map = {});

}  // namespace tefs::frontend
