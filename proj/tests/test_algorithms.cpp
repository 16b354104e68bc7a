#include <doctest.h>

#include <cmath>
#include <cstring>

#include "byzsim/algorithms.hpp"
#include "byzsim/errors.hpp"

using namespace byzsim;

namespace {

ProblemInstance diracs(const std::vector<double>& points, std::vector<std::size_t> honest,
                       double mu = 1.0) {
    std::vector<DataSource> s;
    for (double p : points) s.push_back(DataSource::dirac({p}));
    return ProblemInstance(LossModel::quadratic(mu), std::move(s), std::move(honest));
}

RunConfig make_config(const ProblemInstance& inst, AggregatorSpec agg, Schedule schedule,
                      ParamVector theta0, std::uint64_t seed = 0) {
    return RunConfig{inst, workers_from_instance(inst), agg, std::move(schedule),
                     std::move(theta0), seed, true, 0, kDivergenceThreshold};
}

bool same_traces(const std::vector<IterationRecord>& a, const std::vector<IterationRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const auto& x = a[t];
        const auto& y = b[t];
        const double xs[] = {x.gamma, x.beta, x.loss_gap, x.grad_norm_sq, x.deviation_sq, x.mean_drift_sq, x.lyapunov};
        const double ys[] = {y.gamma, y.beta, y.loss_gap, y.grad_norm_sq, y.deviation_sq, y.mean_drift_sq, y.lyapunov};
        if (x.t != y.t || std::memcmp(xs, ys, sizeof(xs)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("exact gradient descent with step 2/mu lands on the minimizer in one step") {
    // Curvature of (mu/4)||theta - x||^2 is mu/2, so Newton's step is 2/mu.
    const double mu = 1.0;
    const auto inst = diracs({1.0, 2.0, 6.0}, {0, 1, 2}, mu);
    auto cfg = make_config(inst, AggregatorSpec::trimmed_mean(0), constant_schedule(3, 2.0 / mu), {-17.0});
    const RunResult r = run_dsgd_robust(cfg);
    CHECK(r.theta_final[0] == 3.0);
    CHECK(r.final_gap == 0.0);
    CHECK(r.trace[1].loss_gap == 0.0);
}

TEST_CASE("identical honest workers follow single-worker gradient descent exactly") {
    const auto inst = diracs({0.3, 0.3, 0.3, 0.3, 0.3}, {0, 1, 2, 3, 4});
    const std::size_t T = 200;
    auto cfg = make_config(inst, AggregatorSpec::trimmed_mean(2), option2_schedule(T, 1.0, 1.0), {5.0});
    const RunResult r = run_dsgd_robust(cfg);

    const auto solo = diracs({0.3}, {0});
    auto solo_cfg = make_config(solo, AggregatorSpec::average(), option2_schedule(T, 1.0, 1.0), {5.0});
    const RunResult s = run_dsgd_robust(solo_cfg);
    CHECK(r.theta_final == s.theta_final);
    for (std::size_t t = 0; t < T; ++t) CHECK(r.trace[t].loss_gap == s.trace[t].loss_gap);
}

TEST_CASE("runs are deterministic for a fixed seed") {
    std::vector<DataSource> src;
    for (int i = 0; i < 6; ++i) src.push_back(DataSource::gaussian({0.1 * i, -0.2 * i}, 1.0));
    ProblemInstance inst(LossModel::quadratic(1.0), src, {0, 1, 2, 3, 4});
    auto cfg = make_config(inst, AggregatorSpec::trimmed_mean(1), option2_schedule(300, 1.0, 1.0), {1.0, 1.0}, 99);
    cfg.workers[5] = WorkerSpec::byzantine({AttackSpec::InnerProductMax{3.0}});
    const RunResult a = run_dsgd_robust(cfg);
    const RunResult b = run_dsgd_robust(cfg);
    CHECK(same_traces(a.trace, b.trace));
    CHECK(a.theta_final == b.theta_final);

    cfg.seed = 100;
    CHECK_FALSE(same_traces(run_dsgd_robust(cfg).trace, a.trace));
}

TEST_CASE("trace matches the schedule") {
    const auto inst = diracs({0.0, 1.0, 2.0}, {0, 1, 2});
    const Schedule s = option2_schedule(120, 1.0, 1.0);
    const RunResult r = run_dsgd_robust(make_config(inst, AggregatorSpec::trimmed_mean(1), s, {}));
    REQUIRE(r.trace.size() == 120);
    for (std::size_t t = 0; t < 120; ++t) {
        CHECK(r.trace[t].t == t);
        CHECK(r.trace[t].gamma == s.gammas[t]);
        CHECK(r.trace[t].beta == s.betas[t]);
        CHECK(r.trace[t].loss_gap >= 0.0);
    }
}

TEST_CASE("fully poisoned workers behave like honest workers with the swapped source") {
    std::vector<DataSource> src{DataSource::gaussian({0.0}, 1.0), DataSource::gaussian({1.0}, 2.0),
                                DataSource::empirical({{3.0}, {-1.0}})};
    ProblemInstance inst(LossModel::quadratic(1.0), src, {0, 1});
    const Schedule s = option2_schedule(200, 1.0, 1.0);

    RunConfig poisoned = make_config(inst, AggregatorSpec::trimmed_mean(1), s, {}, 5);
    REQUIRE(std::holds_alternative<WorkerSpec::FullyPoisoned>(poisoned.workers[2].kind));
    RunConfig honest = poisoned;
    honest.workers[2] = WorkerSpec::honest(src[2]);
    CHECK(same_traces(run_dsgd_robust(poisoned).trace, run_dsgd_robust(honest).trace));
}

TEST_CASE("server output does not depend on worker order") {
    std::vector<DataSource> src;
    for (int i = 0; i < 5; ++i) src.push_back(DataSource::dirac({static_cast<double>(i * i)}));
    ProblemInstance inst(LossModel::quadratic(1.0), src, {0, 1, 2, 3, 4});
    auto cfg = make_config(inst, AggregatorSpec::trimmed_mean(2), option1_schedule(50, 1.0), {});

    std::vector<DataSource> reversed(src.rbegin(), src.rend());
    ProblemInstance inst_rev(LossModel::quadratic(1.0), reversed, {0, 1, 2, 3, 4});
    auto cfg_rev = make_config(inst_rev, AggregatorSpec::trimmed_mean(2), option1_schedule(50, 1.0), {});
    CHECK(run_dsgd_robust(cfg).theta_final == run_dsgd_robust(cfg_rev).theta_final);
}

TEST_CASE("full-batch loop") {
    const std::vector<ParamVector> data{{0.0}, {0.0}, {0.0}, {0.0}, {1e6}};
    ProblemInstance inst(LossModel::quadratic(1.0), {DataSource::dirac({0.0})}, {0});

    SUBCASE("corrupted point is always trimmed") {
        RunConfig cfg{inst, {WorkerSpec::partially_poisoned(data, {4})}, AggregatorSpec::trimmed_mean(0),
                      constant_schedule(30, 1.0), {8.0}, 0, true, 1, kDivergenceThreshold};
        const RunResult r = run_dgd_robust(cfg);
        // TM of {t-0 x4, t-1e6} with one trimmed each side is theta itself; step 1 halves the gap
        // in theta each iteration on this curvature.
        double theta = 8.0;
        for (std::size_t t = 0; t < 30; ++t) {
            CHECK(r.trace[t].loss_gap == doctest::Approx(0.25 * theta * theta).epsilon(1e-15));
            theta -= 0.5 * theta;
        }
    }

    SUBCASE("clean full-batch gd with step 1/L contracts geometrically") {
        std::vector<ParamVector> clean{{1.0}, {2.0}, {4.0}};
        ProblemInstance ci(LossModel::quadratic(1.0), {DataSource::empirical(clean), DataSource::empirical(clean)}, {0, 1});
        RunConfig cfg{ci,
                      {WorkerSpec::partially_poisoned(clean, {}), WorkerSpec::partially_poisoned(clean, {})},
                      AggregatorSpec::trimmed_mean(0), constant_schedule(40, 1.0), {50.0}, 0, true, 0,
                      kDivergenceThreshold};
        const RunResult r = run_dgd_robust(cfg);
        // theta - theta* shrinks by 1 - gamma * mu / 2 = 1/2 per step, so the gap by 1/4,
        // which is within the exp(-mu/L) per-step rate of the full-batch bound.
        for (std::size_t t = 0; t + 1 < r.trace.size(); ++t) {
            if (r.trace[t].loss_gap < 1e-20) break;
            CHECK(r.trace[t + 1].loss_gap == doctest::Approx(0.25 * r.trace[t].loss_gap).epsilon(1e-9));
            CHECK(r.trace[t + 1].loss_gap <= std::exp(-1.0) * r.trace[t].loss_gap);
        }
    }

    SUBCASE("identical datasets across workers") {
        std::vector<WorkerSpec> ws(5, WorkerSpec::partially_poisoned({{1.0}, {3.0}}, {}));
        ProblemInstance ii(LossModel::quadratic(1.0), std::vector<DataSource>(5, DataSource::empirical({{1.0}, {3.0}})),
                           {0, 1, 2, 3, 4});
        RunConfig cfg{ii, ws, AggregatorSpec::trimmed_mean(2), constant_schedule(5, 0.5), {0.0}, 0, true, 0,
                      kDivergenceThreshold};
        RunConfig one{ProblemInstance(LossModel::quadratic(1.0), {DataSource::empirical({{1.0}, {3.0}})}, {0}),
                      {ws[0]}, AggregatorSpec::average(), constant_schedule(5, 0.5), {0.0}, 0, true, 0,
                      kDivergenceThreshold};
        CHECK(run_dgd_robust(cfg).theta_final == run_dgd_robust(one).theta_final);
    }

    SUBCASE("momentum is rejected") {
        RunConfig cfg{inst, {WorkerSpec::partially_poisoned(data, {4})}, AggregatorSpec::trimmed_mean(0),
                      option2_schedule(30, 1.0, 1.0), {}, 0, true, 1, kDivergenceThreshold};
        CHECK_THROWS_AS(run_dgd_robust(cfg), InputError);
    }
}

TEST_CASE("baseline") {
    std::vector<DataSource> src;
    for (int i = 0; i < 4; ++i) src.push_back(DataSource::gaussian({static_cast<double>(i)}, 0.5));
    ProblemInstance inst(LossModel::quadratic(1.0), src, {0, 1, 2, 3});
    const Schedule s = option2_schedule(100, 1.0, 1.0);
    const RunResult base = run_baseline_dsgd(make_config(inst, AggregatorSpec::average(), s, {2.0}, 4));
    const RunResult robust = run_dsgd_robust(make_config(inst, AggregatorSpec::trimmed_mean(0), s, {2.0}, 4));
    CHECK(same_traces(base.trace, robust.trace));
    CHECK_THROWS_AS(run_baseline_dsgd(make_config(inst, AggregatorSpec::trimmed_mean(1), s, {}, 4)), InputError);

    // Attacker sending n*c shifts each averaged step by c.
    ProblemInstance pinned(LossModel::quadratic(1.0),
                           {DataSource::dirac({0.0}), DataSource::dirac({0.0}), DataSource::dirac({0.0}),
                            DataSource::dirac({0.0})},
                           {0, 1, 2});
    auto cfg = make_config(pinned, AggregatorSpec::average(), constant_schedule(2, 0.5), {0.0});
    cfg.workers[3] = WorkerSpec::byzantine({AttackSpec::FixedVector{{4.0 * 1.5}}});
    // theta_1 = -0.5 * 1.5; theta_2 = theta_1 - 0.5 * ((3/4) * honest_grad(theta_1) + 1.5)
    CHECK(run_baseline_dsgd(cfg).theta_final[0] == -0.75 - 0.5 * (0.75 * -0.375 + 1.5));
}

TEST_CASE("sign flip scaled by the honest count stalls a symmetric instance") {
    ProblemInstance inst(LossModel::quadratic(1.0),
                         {DataSource::dirac({0.0}), DataSource::dirac({0.0}), DataSource::dirac({0.0}),
                          DataSource::dirac({0.0})},
                         {0, 1, 2});
    auto cfg = make_config(inst, AggregatorSpec::average(), option1_schedule(50, 1.0), {3.0});
    cfg.workers[3] = WorkerSpec::byzantine({AttackSpec::SignFlip{3.0}});
    const RunResult r = run_baseline_dsgd(cfg);
    CHECK(r.theta_final[0] == 3.0);
}

TEST_CASE("divergence is reported with its iteration") {
    ProblemInstance inst(LossModel::quadratic(1.0),
                         {DataSource::dirac({0.0}), DataSource::dirac({0.0}), DataSource::dirac({0.0})},
                         {0, 1});
    auto cfg = make_config(inst, AggregatorSpec::average(), option1_schedule(100, 1.0), {});
    cfg.workers[2] = WorkerSpec::byzantine({AttackSpec::FixedVector{{-3e14}}});
    const RunResult r = run_baseline_dsgd(cfg);
    REQUIRE(r.diverged());
    CHECK(*r.diverged_at == 0);
    CHECK(r.trace.size() == 1);
}

TEST_CASE("config validation") {
    const auto inst = diracs({0.0, 1.0, 2.0}, {0, 1});
    auto cfg = make_config(inst, AggregatorSpec::trimmed_mean(1), option1_schedule(10, 1.0), {});
    cfg.workers.pop_back();
    CHECK_THROWS_AS(run_dsgd_robust(cfg), InputError);

    cfg = make_config(inst, AggregatorSpec::trimmed_mean(2), option1_schedule(10, 1.0), {});
    CHECK_THROWS_AS(run_dsgd_robust(cfg), InputError);

    cfg = make_config(inst, AggregatorSpec::trimmed_mean(1), option1_schedule(10, 1.0), {1.0, 2.0});
    CHECK_THROWS_AS(run_dsgd_robust(cfg), InputError);

    cfg = make_config(inst, AggregatorSpec::trimmed_mean(1), option1_schedule(10, 1.0), {});
    cfg.workers[0] = WorkerSpec::byzantine({AttackSpec::SignFlip{1.0}});
    CHECK_THROWS_AS(run_dsgd_robust(cfg), InputError);
}
