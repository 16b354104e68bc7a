#include "byzsim/schedules.hpp"

#include <cmath>
#include <string>

#include "byzsim/errors.hpp"

namespace byzsim {

namespace {

void check_length(std::size_t T, const char* op) {
    require(T >= 2, std::string(op) + ": T must be >= 2");
    require(T <= kMaxScheduleLength, std::string(op) + ": T exceeds the schedule length cap");
}

void check_positive(double v, const char* name) {
    require(std::isfinite(v) && v > 0.0, std::string(name) + " must be positive and finite");
}

std::size_t half_up(std::size_t T) { return (T + 1) / 2; }

/// 1 / (base + max(0, slope (t - t0 + 1)))
double two_phase_step(double base, double slope, std::size_t t, std::size_t t0) {
    const double offset = static_cast<double>(t + 1) - static_cast<double>(t0);
    const double ramp = offset > 0.0 ? slope * offset : 0.0;
    return 1.0 / (base + ramp);
}

}  // namespace

Schedule option1_schedule(std::size_t T, double L) {
    check_length(T, "option1_schedule");
    check_positive(L, "L");
    Schedule s;
    s.gammas.assign(T, 1.0 / (18.0 * L));
    s.betas.assign(T, 0.0);
    s.t0 = 0;
    s.provenance = Schedule::Provenance::option1;
    return s;
}

Schedule option2_schedule(std::size_t T, double L, double mu) {
    check_length(T, "option2_schedule");
    check_positive(L, "L");
    check_positive(mu, "mu");
    require(mu <= L, "option2_schedule: requires mu <= L");
    Schedule s;
    s.t0 = half_up(T);
    s.gammas.resize(T);
    s.betas.resize(T);
    const double base = 18.0 * L;
    for (std::size_t t = 0; t < T; ++t) s.gammas[t] = two_phase_step(base, mu / 6.0, t, s.t0);
    s.betas[0] = 1.0;
    for (std::size_t t = 1; t < T; ++t) s.betas[t] = 1.0 - base * s.gammas[t - 1];
    s.provenance = Schedule::Provenance::option2;
    return s;
}

ScheduleOption select_option(std::size_t T, double L, double mu) {
    return static_cast<double>(T) <= 54.0 * L / mu ? ScheduleOption::option1
                                                   : ScheduleOption::option2;
}

Schedule auto_schedule(std::size_t T, double L, double mu) {
    check_positive(L, "L");
    check_positive(mu, "mu");
    return select_option(T, L, mu) == ScheduleOption::option1 ? option1_schedule(T, L)
                                                              : option2_schedule(T, L, mu);
}

Schedule constant_schedule(std::size_t T, double gamma) {
    check_length(T, "constant_schedule");
    check_positive(gamma, "gamma");
    Schedule s;
    s.gammas.assign(T, gamma);
    s.betas.assign(T, 0.0);
    s.provenance = Schedule::Provenance::constant;
    return s;
}

std::vector<double> two_phase_steps(double a, double b, std::size_t T) {
    check_length(T, "two_phase_steps");
    check_positive(a, "a");
    check_positive(b, "b");
    require(a < b, "two_phase_steps: requires a < b");
    std::vector<double> gammas(T);
    if (static_cast<double>(T) <= b / a) {
        gammas.assign(T, 1.0 / b);
        return gammas;
    }
    const std::size_t t0 = half_up(T);
    for (std::size_t t = 0; t < T; ++t) gammas[t] = two_phase_step(b, a / 2.0, t, t0);
    return gammas;
}

TwoPhaseCheck two_phase_recursion_check(double a, double b, double c, double d, double r0, std::size_t T) {
    require(c >= 0.0 && d >= 0.0 && r0 >= 0.0, "two_phase_recursion_check: c, d, r0 must be >= 0");
    const std::vector<double> gammas = two_phase_steps(a, b, T);
    double r = r0;
    for (double g : gammas) r = (1.0 - a * g) * r + c * g * g + d * g;
    const double Td = static_cast<double>(T);
    const double bound = r0 * std::exp(-a * Td / (2.0 * b)) + 18.0 * c / (a * a * Td) + 3.0 * d / a;
    return {r, bound, r <= bound};
}

}  // namespace byzsim
