#include "mtlre/gradcheck.hpp"

#include <cmath>

namespace mtlre {

namespace {

double eval(const LossBuilder& f) {
    Tape tape;
    return f(tape).scalar();
}

void check_preconditions(const LossBuilder& f, double epsilon) {
    if (epsilon == 0.0) {
        throw ValidationError("finite_difference_check: epsilon must be nonzero");
    }
    double a = eval(f);
    double b = eval(f);
    if (a != b) {
        throw ValidationError(
            "finite_difference_check: builder is non-deterministic (two passes gave " +
            std::to_string(a) + " and " + std::to_string(b) + ")");
    }
}

// Core loop shared by the single- and multi-parameter entry points.
void check_one(const LossBuilder& f, Parameter& param, const Vec& analytic,
               double epsilon, GradCheckReport& report) {
    for (Index i = 0; i < param.value.size(); ++i) {
        double saved = param.value[i];
        param.value[i] = saved + epsilon;
        double plus = eval(f);
        param.value[i] = saved - epsilon;
        double minus = eval(f);
        param.value[i] = saved;
        double numeric = (plus - minus) / (2.0 * epsilon);
        double rel = std::abs(analytic[i] - numeric) /
                     (std::abs(analytic[i]) + std::abs(numeric) + 1e-10);
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_parameter = param.name;
            report.worst_element = i;
            report.worst_analytic = analytic[i];
            report.worst_numeric = numeric;
        }
    }
}

}  // namespace

double finite_difference_check(const LossBuilder& f, Parameter& param, double epsilon) {
    Parameter* p = &param;
    return finite_difference_check_all(f, std::span<Parameter* const>(&p, 1), epsilon)
        .max_rel_error;
}

GradCheckReport finite_difference_check_all(const LossBuilder& f,
                                            std::span<Parameter* const> params,
                                            double epsilon) {
    check_preconditions(f, epsilon);
    // One analytic pass up front; parameters are then perturbed and restored
    // exactly (same bits), so the analytic gradients stay valid throughout.
    std::vector<Vec> analytic;
    {
        Tape tape;
        Tensor loss = f(tape);
        tape.backward(loss);
        for (Parameter* p : params) analytic.push_back(tape.gradient(*p));
    }
    GradCheckReport report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        check_one(f, *params[i], analytic[i], epsilon, report);
    }
    return report;
}

}  // namespace mtlre
