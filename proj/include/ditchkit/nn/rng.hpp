#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace ditchkit::nn {

/// Deterministic generator: std::mt19937_64 with explicit transforms.
///
/// uniform() takes the top 53 bits of one 64-bit draw; normal() is Box-Muller
/// on two uniforms and caches the second variate. Standard library
/// distributions are avoided because their algorithms differ between vendors.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }
    double uniform();                       ///< [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();
    std::size_t index(std::size_t n);       ///< [0, n)

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ditchkit::nn
