#pragma once

#include <functional>
#include <span>
#include <string>

#include "mtlre/tensor.hpp"

namespace mtlre {

// Builds a scalar loss on a fresh tape.  The builder is invoked many times
// with perturbed parameter values, so it must be deterministic: fixed rng
// seeds, dropout off (or re-seeded identically inside the builder).
using LossBuilder = std::function<Tensor(Tape&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_parameter;
    Index worst_element = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Central finite differences against the tape's analytic gradient for one
// parameter.  Returns the max over elements of
//   |analytic - numeric| / (|analytic| + |numeric| + 1e-10).
// Rejects epsilon = 0 and non-deterministic builders (two unperturbed
// forward passes must agree bit-for-bit).
double finite_difference_check(const LossBuilder& f, Parameter& param, double epsilon);

// Same check across a set of parameters, reporting the worst element found.
GradCheckReport finite_difference_check_all(const LossBuilder& f,
                                            std::span<Parameter* const> params,
                                            double epsilon);

}  // namespace mtlre
