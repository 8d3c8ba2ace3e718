#pragma once

#include <cstdint>
#include <vector>

namespace gvqa {

// Exponential moving average of a flat parameter vector:
//   avg_t = beta * avg_{t-1} + (1 - beta) * theta_t
// applied once after every optimizer step.
struct EMAState {
    std::vector<double> average;
    double beta{0.999};
    std::uint64_t step_count{0};
};

// Starts the average at the initial parameters. beta must lie in [0, 1].
EMAState ema_init(const std::vector<double>& initial_params, double beta = 0.999);

// One decay update with the post-optimizer parameters. Rejects shape
// mismatches and non-finite inputs.
void ema_update(EMAState& state, const std::vector<double>& current_params);

// Independent copy of the averaged vector, safe to hand to inference.
std::vector<double> ema_extract(const EMAState& state);

} // namespace gvqa
