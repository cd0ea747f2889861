#include <benchmark/benchmark.h>

#include "bnpiv/mixture.hpp"
#include "bnpiv/npiv.hpp"
#include "bnpiv/random.hpp"
#include "bnpiv/simulation.hpp"
#include "bnpiv/splines.hpp"

using namespace bnpiv;

namespace {

std::vector<double> uniform_points(std::size_t n, double hi, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = hi * rng.uniform();
    return x;
}

void BM_BandedDesign(benchmark::State& state) {
    const auto x = uniform_points(static_cast<std::size_t>(state.range(0)), 60.0, 1);
    const auto kv = splines::make_knots(x, 20, 3);
    for (auto _ : state) benchmark::DoNotOptimize(splines::banded_design(kv, x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BandedDesign)->Arg(2000)->Arg(20000);

void BM_DenseDesign(benchmark::State& state) {
    const auto x = uniform_points(static_cast<std::size_t>(state.range(0)), 60.0, 1);
    const auto kv = splines::make_knots(x, 20, 3);
    for (auto _ : state) benchmark::DoNotOptimize(splines::design_matrix(kv, x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenseDesign)->Arg(2000)->Arg(20000);

void BM_AssignmentUpdate(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    Rng rng(2);
    Eigen::MatrixXd resid(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) resid.row(i) << rng.normal(), rng.normal();
    auto st = mixture::initial_state(static_cast<std::size_t>(n), Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 25, 1.0);
    const auto prior = mixture::MixturePrior::data_scaled(std::vector<double>{1.0, 1.0});
    mixture::update_components(resid, st, prior, rng);
    for (auto _ : state) mixture::update_assignments(resid, st, rng);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AssignmentUpdate)->Arg(2000)->Arg(10000);

// Wall time per Gibbs sweep of fit_npiv on the Monte Carlo design.
void BM_NpivSweeps(benchmark::State& state) {
    simulation::SimConfig cfg;
    cfg.observations = static_cast<std::size_t>(state.range(0));
    const auto data = simulation::generate_mc_data(cfg);
    const auto& s = data.sample;
    const auto second = npiv::default_basis(s.occupancy);
    const auto first = npiv::default_basis(s.instrument);
    npiv::McmcConfig mcmc;
    mcmc.total = 200;
    mcmc.burnin = 100;
    mcmc.thin = 1;
    mcmc.seed = 3;
    for (auto _ : state) benchmark::DoNotOptimize(npiv::fit_npiv(s, second, first, npiv::SplinePriors{}, mcmc));
    state.SetItemsProcessed(state.iterations() * mcmc.total);
}
BENCHMARK(BM_NpivSweeps)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
