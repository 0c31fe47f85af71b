#include "ditchkit/nn/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ditchkit::nn {

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::size_t Rng::index(std::size_t n) {
    if (n <= 1) return 0;
    // rejection keeps the draw unbiased
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do x = eng_();
    while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

}  // namespace ditchkit::nn
