#pragma once

#include "coordmotion/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace coordmotion {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    int64_t worst_index = -1;
    double analytic = 0.0; // at the worst index
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> params;
    double max_rel_err = 0.0;
    bool pass(double tol) const { return max_rel_err <= tol; }
};

// Central-difference check of reverse-mode gradients. `f` evaluates the
// scalar objective from the current values of `params`; it must be
// deterministic (verified by evaluating twice) and must work both with and
// without an active tape. Step size per entry is h * max(1, |theta|); the
// relative error is |ad - fd| / max(1, |ad|, |fd|).
GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params, double h);

} // namespace coordmotion
