#pragma once

#include <cstddef>
#include <vector>

namespace byzsim {

/// Upper bound on materialized schedule length.
inline constexpr std::size_t kMaxScheduleLength = 10'000'000;

/// Step sizes gamma_t and momentum coefficients beta_t for t = 0..T-1.
struct Schedule {
    enum class Provenance { option1, option2, two_phase, constant };

    std::vector<double> gammas;
    std::vector<double> betas;
    std::size_t t0 = 0;
    Provenance provenance = Provenance::constant;
    // Recursion constants (a, b) for two_phase provenance; zero otherwise.
    double a = 0.0;
    double b = 0.0;

    std::size_t length() const noexcept { return gammas.size(); }
};

enum class ScheduleOption { option1, option2 };

/// gamma_t = 1/(18L), beta_t = 0.
Schedule option1_schedule(std::size_t T, double L);

/// t0 = ceil(T/2), gamma_t = 1/(18L + max(0, (mu/6)(t - t0 + 1))),
/// beta_t = 1 - 18 L gamma_{t-1} with gamma_{-1} = 0 (so beta_0 = 1).
Schedule option2_schedule(std::size_t T, double L, double mu);

/// option1 iff T <= 54 L / mu.
ScheduleOption select_option(std::size_t T, double L, double mu);

/// The option chosen by select_option.
Schedule auto_schedule(std::size_t T, double L, double mu);

/// Constant step size, zero momentum.
Schedule constant_schedule(std::size_t T, double gamma);

/// Step sizes for r_{t+1} <= (1 - a g_t) r_t + c g_t^2 + d g_t.
/// T <= b/a: constant 1/b. Otherwise 1/(b + max(0, (a/2)(t - t0 + 1))), t0 = ceil(T/2).
std::vector<double> two_phase_steps(double a, double b, std::size_t T);

struct TwoPhaseCheck {
    double r_T_simulated;
    double bound;  // r0 exp(-aT/(2b)) + 18c/(a^2 T) + 3d/a
    bool holds;
};

/// Runs the recursion at equality with two_phase_steps step sizes and compares r_T with the
/// closed-form bound.
TwoPhaseCheck two_phase_recursion_check(double a, double b, double c, double d, double r0, std::size_t T);

}  // namespace byzsim
