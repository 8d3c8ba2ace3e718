#pragma once

#include <vector>

#include "gvqa/tubelet.hpp"

namespace gvqa::testsupport {

struct OracleScores {
    std::vector<double> per_alpha;
    double final_hota{0.0};
};

// Brute-force HOTA for one video: for every IoU threshold, enumerates every
// combination of per-frame count-maximal assignments (one-to-one, IoU >=
// alpha) across frames and takes the combination maximizing the score
// sqrt(DetA * AssA). Written straight from the metric definition,
// independently of the production matcher.
OracleScores brute_force_hota(const std::vector<Tubelet>& gt, const std::vector<Tubelet>& pred,
                              const std::vector<double>& alphas);

} // namespace gvqa::testsupport
