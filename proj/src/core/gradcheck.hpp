#pragma once

#include <string>
#include <vector>

#include "params.hpp"
#include "trainer.hpp"

namespace nsplat {

struct GradcheckSetup {
    int gaussians = 10;
    int image = 32;
    uint64_t seed = 11;
    int samples_per_group = 24;  // finite-difference probes per parameter group
    // Step small enough that the probes stay clear of the L1 kinks of the
    // normal losses; double precision keeps the quotient exact at this scale.
    double step = 2e-5;
    bool sh_specular = false;
};

struct GradcheckRow {
    ParamGroup group = ParamGroup::mu;
    std::string name;
    double max_rel_err = 0;
    size_t checked = 0;
};

const char* param_group_name(ParamGroup g);

// Deterministic scene + target used by the check; exposed for tests.
struct GradcheckProblem {
    SceneGraph scene;
    TrainFrame frame;
    PipelineConfig cfg;
};

GradcheckProblem gradcheck_problem(const GradcheckSetup& setup);

// Central finite differences against the analytic backward pass, loss masks
// frozen at the expansion point.
std::vector<GradcheckRow> run_gradcheck(const GradcheckSetup& setup = {});

}  // namespace nsplat
