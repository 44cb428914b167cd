#include "tefs/frontend/greenwood.hpp"

#include <cmath>
#include <string>

#include "tefs/error.hpp"

namespace tefs::frontend {

double greenwood_freq(double x, const GreenwoodMap& map) {
    if (!(x >= 0.0 && x <= 1.0))
        throw InvalidArgument("cochlear position must be in [0, 1], got " + std::to_string(x));
    return map.A * (std::pow(10.0, map.a * x) - map.k);
}

double greenwood_pos(double freq_hz, const GreenwoodMap& map) {
    const double arg = freq_hz / map.A + map.k;
    if (!(arg > 0.0)) throw InvalidArgument("frequency below the Greenwood map's range");
    return std::log10(arg) / map.a;
}

}  // namespace tefs::frontend
