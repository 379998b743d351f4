#pragma once

#include "coordmotion/config.hpp"
#include "coordmotion/grad_check.hpp"

#include <string>
#include <vector>

namespace coordmotion {

// Toy dimensions used by the gradient-check command and the acceptance suite:
// N=5, D=4, T=6, T_p=4, 2 blocks.
ModelConfig toy_model_config();

const std::vector<std::string>& gradcheck_module_names(); // mtde gce lie affm net

// Finite-difference check of one module's parameters at toy shapes with a
// fixed seed; h = 1e-5 scaled per entry.
GradCheckReport run_module_gradcheck(const std::string& module);

} // namespace coordmotion
