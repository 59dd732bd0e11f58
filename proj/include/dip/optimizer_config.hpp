#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "dip/composition.hpp"
#include "dip/losses.hpp"

namespace dip {

struct OptimConfig {
    int iterations = 4000;
    real learning_rate = 0.001;
    std::pair<real, real> adam_betas{0.9, 0.999};
    bool augment = true;
    std::uint64_t seed = 0;
    int log_every = 0;      // console rows; 0 disables
    int snapshot_every = 50;
    bool parallel = true;   // evaluate independent generators on worker threads

    void validate() const {
        if (iterations < 0)
            throw ConfigError("iterations must be >= 0");
        if (learning_rate < 0.0)
            throw ConfigError("learning rate must be >= 0");
    }
};

struct LossRow {
    int iteration;
    real total, reconst, excl, reg;
};

struct RunState {
    std::vector<LossRow> history;
    real best_total = std::numeric_limits<real>::infinity();
    int best_iteration = -1;
    std::vector<LayerSet> best_layers;
    LossReport best_report;
    std::uint64_t seed = 0;
    int iterations_completed = 0;
};

} // namespace dip
