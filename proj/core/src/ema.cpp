#include "gvqa/ema.hpp"

#include <cmath>

#include "gvqa/error.hpp"

namespace gvqa {

EMAState ema_init(const std::vector<double>& initial_params, double beta) {
    require(beta >= 0.0 && beta <= 1.0, "ema_init: beta must lie in [0, 1], got ", beta);
    for (double x : initial_params) {
        require(std::isfinite(x), "ema_init: non-finite parameter");
    }
    EMAState state;
    state.average = initial_params;
    state.beta = beta;
    state.step_count = 0;
    return state;
}

void ema_update(EMAState& state, const std::vector<double>& current_params) {
    require(current_params.size() == state.average.size(),
            "ema_update: parameter shape mismatch (", current_params.size(), " vs ",
            state.average.size(), ")");
    for (double x : current_params) {
        require(std::isfinite(x), "ema_update: non-finite parameter");
    }
    const double beta = state.beta;
    for (std::size_t i = 0; i < state.average.size(); ++i) {
        state.average[i] = beta * state.average[i] + (1.0 - beta) * current_params[i];
    }
    ++state.step_count;
}

std::vector<double> ema_extract(const EMAState& state) {
    return state.average;
}

} // namespace gvqa
