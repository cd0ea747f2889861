#include "bnpiv/random.hpp"

#include <stdexcept>
#include <vector>

namespace bnpiv {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * stream.size());
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto s : stream) push(s);
    std::seed_seq seq(words.begin(), words.end());
    std::uint64_t derived = 0;
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    derived = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    return Rng(derived);
}

double Rng::uniform() { return unit_(engine_); }

double Rng::normal() { return standard_normal_(engine_); }

double Rng::normal(double mean, double sd) { return mean + sd * standard_normal_(engine_); }

double Rng::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: shape and rate must be positive");
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
}

double Rng::beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta: parameters must be positive");
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    if (x + y == 0.0) return a >= b ? 1.0 : 0.0;
    return x / (x + y);
}

double Rng::chi_square(double dof) { return gamma(0.5 * dof, 0.5); }

double Rng::inverse_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }

}  // namespace bnpiv
