#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bnpiv {

/// Seeded random stream used by every sampler in the library.
///
/// Wraps a 64-bit Mersenne twister with the standard distributions. All
/// randomness in a run flows from one user seed; independent streams for
/// replications or estimators are obtained with derive().
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Independent stream keyed by (seed, stream ids...). Deterministic.
    [[nodiscard]] static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

    double uniform();                          // [0, 1)
    double normal();                           // N(0, 1)
    double normal(double mean, double sd);
    double gamma(double shape, double rate);   // mean shape / rate
    double beta(double a, double b);
    double chi_square(double dof);
    double inverse_gamma(double shape, double scale);  // mean scale / (shape - 1)

    [[nodiscard]] std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> standard_normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace bnpiv
