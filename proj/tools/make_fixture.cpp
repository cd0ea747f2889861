// Writes the synthetic detector CSV used by the CLI smoke tests and examples.
#include <cstdlib>
#include <iostream>

#include "bnpiv/ingest.hpp"
#include "bnpiv/simulation.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: bnpiv_make_fixture OUT.csv [days] [seed]\n";
        return 2;
    }
    bnpiv::simulation::FixtureConfig cfg;
    if (argc > 2) cfg.days = std::atoi(argv[2]);
    if (argc > 3) cfg.seed = std::strtoull(argv[3], nullptr, 10);
    bnpiv::ingest::write_detector_csv(argv[1], bnpiv::simulation::synthetic_detector_data(cfg));
    return 0;
}
