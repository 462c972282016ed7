#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "hvacmpc/dataio.hpp"
#include "hvacmpc/mpc.hpp"

using namespace hvacmpc;

namespace {

Normalizer identity_norm(int n_x, int n_u, int n_d) {
    Normalizer n;
    n.x_mean.assign(n_x, 0.0);
    n.x_std.assign(n_x, 1.0);
    n.u_mean.assign(n_u, 0.0);
    n.u_std.assign(n_u, 1.0);
    n.d_mean.assign(n_d, 0.0);
    n.d_std.assign(n_d, 1.0);
    return n;
}

// Scalar surrogate x' = a x + b u with one state channel that doubles as both
// the "zone temperature" and the "power" channel of the cost.
SurrogateModel scalar_model(double a, double b) {
    SurrogateModel m = make_linear({0, 0, 0}, identity_norm(1, 1, 1), 1, 1, 1, 0);
    m.param("A_0")(0, 0) = a;
    m.param("B_0")(0, 0) = b;
    m.param("C_0")(0, 0) = 0.0;
    return m;
}

MpcProblem scalar_problem(const SurrogateModel& model, int horizon, double x0) {
    MpcProblem pb;
    pb.model = &model;
    pb.horizon = horizon;
    pb.u_lower = {0.0};
    pb.u_upper = {1.0};
    pb.gamma = 0.0;
    pb.r_diag = {0.0};
    pb.power_channels = {0};
    pb.zone_count = 1;
    pb.history.x = {{x0}};
    for (int j = 0; j < horizon; ++j) {
        pb.x_lower.push_back({-1e9});
        pb.x_upper.push_back({1e9});
        pb.forecast.push_back({0.0});
    }
    return pb;
}

ControlPlan constant_plan(int horizon, std::vector<double> u) {
    ControlPlan p(horizon, static_cast<int>(u.size()));
    for (int t = 0; t < horizon; ++t)
        for (size_t c = 0; c < u.size(); ++c) p(t, static_cast<int>(c)) = u[c];
    return p;
}

// Small single-zone surrogate trained on a short excitation run; enough
// structure to exercise the solvers on a plant-like landscape.
SurrogateModel quick_single_zone_mlp() {
    auto cfg = PlantConfig::single_zone();
    auto weather = make_weather(cfg, 0, 2);
    std::vector<Trajectory> trajs = {excite(cfg, 1, 120, weather), excite(cfg, 2, 120, weather)};
    Normalizer norm = fit_normalizer(trajs);
    LagSpec lags{1, 1, 1};
    Dataset ds = window_all(trajs, lags, cfg.n_x(), cfg.n_u(), cfg.n_d());
    SurrogateModel m = make_mlp(lags, norm, cfg.n_x(), cfg.n_u(), cfg.n_d(), 16, 2, 0);
    TrainConfig tc;
    tc.epochs = 40;
    train(m, ds, ds, tc);
    return m;
}

MpcProblem single_zone_problem(const SurrogateModel& model, int horizon) {
    auto cfg = PlantConfig::single_zone();
    MpcProblem pb;
    pb.model = &model;
    pb.horizon = horizon;
    pb.u_lower = cfg.control_lower();
    pb.u_upper = cfg.control_upper();
    pb.gamma = 50.0;
    pb.r_diag = {0.1, 0.1};
    pb.power_channels = {1, 2, 3};
    pb.zone_count = 1;
    pb.history.x = {{19.0, 0.0, 0.0, 0.0}, {18.5, 0.0, 0.0, 0.0}};
    pb.history.u = {{0.3, 22.0}};
    pb.history.d = {{2.0, 100.0, 2.0}};
    for (int j = 0; j < horizon; ++j) {
        pb.x_lower.push_back({21.0});
        pb.x_upper.push_back({24.0});
        pb.forecast.push_back({2.0, 120.0, 2.0});
    }
    return pb;
}

}  // namespace

TEST_CASE("cost matches a hand-computed rollout with penalty and smoothness") {
    SurrogateModel m = scalar_model(0.5, 1.0);
    MpcProblem pb = scalar_problem(m, 2, 2.0);
    pb.gamma = 10.0;
    pb.r_diag = {0.5};
    pb.u_upper = {5.0};
    pb.x_lower = {{3.0}, {3.0}};
    pb.x_upper = {{10.0}, {10.0}};

    // plan (1, 3): x1 = 0.5*2+1 = 2, x2 = 0.5*2+3 = 4.
    // power = 2 + 4 = 6; penalty = relu(3-2) + 0 = 1 -> 10; smooth = 0.5*(3-1)^2 = 2.
    ControlPlan plan(2, 1);
    plan(0, 0) = 1.0;
    plan(1, 0) = 3.0;
    CHECK(mpc_cost(plan, pb) == doctest::Approx(18.0).epsilon(1e-12));

    // constant plan (1,1): x1 = x2 = 2; power 4, penalty 2 -> 20, smooth 0.
    CHECK(mpc_cost(constant_plan(2, {1.0}), pb) == doctest::Approx(24.0).epsilon(1e-12));
}

TEST_CASE("cost gradient matches central finite differences through an MLP rollout") {
    SurrogateModel m = quick_single_zone_mlp();
    MpcProblem pb = single_zone_problem(m, 3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> fan(0.05, 0.95), sp(13.0, 39.0);
    for (int rep = 0; rep < 5; ++rep) {
        ControlPlan plan(3, 2);
        for (int t = 0; t < 3; ++t) {
            plan(t, 0) = fan(rng);
            plan(t, 1) = sp(rng);
        }
        Tensor g;
        mpc_cost_grad(plan, pb, &g);
        for (int i = 0; i < 6; ++i) {
            ControlPlan pp = plan, pm = plan;
            double h = 1e-5 * std::max(1.0, std::abs(plan[i]));
            pp[i] += h;
            pm[i] -= h;
            double fd = (mpc_cost(pp, pb) - mpc_cost(pm, pb)) / (2.0 * h);
            CHECK(std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])) < 1e-4);
        }
    }
}

TEST_CASE("both solvers drive a linear-cost problem onto the correct bound") {
    // cost = x1 + x2 with x linear and increasing in u: optimum at u = 0.
    SurrogateModel m = scalar_model(0.0, 1.0);
    MpcProblem pb = scalar_problem(m, 2, 0.0);

    auto sqp = solve_sqp(pb, constant_plan(2, {0.7}));
    CHECK(sqp.cost == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(sqp.plan(0, 0) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(sqp.converged);

    auto gdm = solve_gdm(pb, constant_plan(2, {0.7}));
    CHECK(gdm.cost < 0.05);  // fixed-budget first-order method

    // Flip the sign: optimum at the upper bound.
    SurrogateModel m2 = scalar_model(0.0, -1.0);
    MpcProblem pb2 = scalar_problem(m2, 2, 0.0);
    auto sqp2 = solve_sqp(pb2, constant_plan(2, {0.3}));
    CHECK(sqp2.plan(1, 0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("sqp reaches an interior quadratic minimum to high precision") {
    // With b = 0 the rollout ignores u; cost = r*(u1-u0)^2, minimized on the
    // diagonal u0 = u1.
    SurrogateModel m = scalar_model(0.0, 0.0);
    MpcProblem pb = scalar_problem(m, 2, 0.0);
    pb.r_diag = {1.0};
    ControlPlan init(2, 1);
    init(0, 0) = 0.1;
    init(1, 0) = 0.9;
    auto r = solve_sqp(pb, init);
    CHECK(r.cost < 1e-8);
    CHECK(r.iterations <= 20);
    CHECK(r.converged);
}

TEST_CASE("gdm converges to an analytic quadratic minimizer within its budget") {
    // cost = (u1 - u0)^2 from (0, 1): both coordinates meet near 0.5.
    SurrogateModel m = scalar_model(0.0, 0.0);
    MpcProblem pb = scalar_problem(m, 2, 0.0);
    pb.r_diag = {1.0};
    ControlPlan init(2, 1);
    init(0, 0) = 0.0;
    init(1, 0) = 1.0;
    auto r = solve_gdm(pb, init);
    CHECK(r.cost < 1e-3);
    CHECK(std::abs(r.plan(0, 0) - r.plan(1, 0)) < 0.05);
    CHECK(r.iterations == 100);
}

TEST_CASE("solver plans stay inside the box and cost traces never increase") {
    SurrogateModel m = quick_single_zone_mlp();
    MpcProblem pb = single_zone_problem(m, 4);
    for (bool use_sqp : {false, true}) {
        auto r = use_sqp ? solve_sqp(pb, constant_plan(4, {0.9, 38.0}))
                         : solve_gdm(pb, constant_plan(4, {0.9, 38.0}));
        for (int t = 0; t < 4; ++t) {
            CHECK(r.plan(t, 0) >= 0.0);
            CHECK(r.plan(t, 0) <= 1.0);
            CHECK(r.plan(t, 1) >= 12.0);
            CHECK(r.plan(t, 1) <= 40.0);
        }
        REQUIRE(!r.cost_trace.empty());
        for (size_t i = 1; i < r.cost_trace.size(); ++i) CHECK(r.cost_trace[i] <= r.cost_trace[i - 1]);
        CHECK(r.cost <= mpc_cost(clamp_plan(constant_plan(4, {0.9, 38.0}), pb), pb) + 1e-12);
        CHECK(r.wall_time_s >= 0.0);
    }
}

TEST_CASE("solvers beat a coarse control grid on a plant-like problem") {
    SurrogateModel m = quick_single_zone_mlp();
    MpcProblem pb = single_zone_problem(m, 2);

    // Exhaustive 5-level grid over the horizon-2 plan (625 evaluations).
    double grid_min = 1e300;
    for (int a0 = 0; a0 < 5; ++a0)
        for (int a1 = 0; a1 < 5; ++a1)
            for (int b0 = 0; b0 < 5; ++b0)
                for (int b1 = 0; b1 < 5; ++b1) {
                    ControlPlan p(2, 2);
                    p(0, 0) = a0 / 4.0;
                    p(0, 1) = 12.0 + 28.0 * a1 / 4.0;
                    p(1, 0) = b0 / 4.0;
                    p(1, 1) = 12.0 + 28.0 * b1 / 4.0;
                    grid_min = std::min(grid_min, mpc_cost(p, pb));
                }

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double best_sqp = 1e300, best_gdm = 1e300;
    for (int start = 0; start < 5; ++start) {
        ControlPlan p(2, 2);
        for (int t = 0; t < 2; ++t) {
            p(t, 0) = unit(rng);
            p(t, 1) = 12.0 + 28.0 * unit(rng);
        }
        best_sqp = std::min(best_sqp, solve_sqp(pb, p).cost);
        best_gdm = std::min(best_gdm, solve_gdm(pb, p).cost);
    }
    CHECK(best_sqp <= 1.05 * grid_min);
    CHECK(best_gdm <= 1.05 * grid_min);
}

TEST_CASE("warm start shifts the previous plan and duplicates the last row") {
    SurrogateModel m = scalar_model(0.5, 1.0);
    MpcProblem pb = scalar_problem(m, 3, 0.0);
    SolveResult prev;
    prev.plan = Tensor(3, 1, {0.1, 0.2, 0.3});
    ControlPlan w = warm_start(&prev, pb);
    CHECK(w(0, 0) == 0.2);
    CHECK(w(1, 0) == 0.3);
    CHECK(w(2, 0) == 0.3);

    ControlPlan mid = warm_start(nullptr, pb);
    for (int t = 0; t < 3; ++t) CHECK(mid(t, 0) == 0.5);

    // A shape-mismatched previous plan falls back to the midpoint.
    prev.plan = Tensor(2, 1, {0.1, 0.2});
    ControlPlan fb = warm_start(&prev, pb);
    CHECK(fb(0, 0) == 0.5);
}

TEST_CASE("solvers are deterministic for a fixed problem and start") {
    SurrogateModel m = quick_single_zone_mlp();
    MpcProblem pb = single_zone_problem(m, 3);
    ControlPlan init = constant_plan(3, {0.4, 30.0});
    auto a = solve_sqp(pb, init);
    auto b = solve_sqp(pb, init);
    CHECK(a.cost == b.cost);
    for (int i = 0; i < 6; ++i) CHECK(a.plan[i] == b.plan[i]);
    auto c = solve_gdm(pb, init);
    auto d = solve_gdm(pb, init);
    CHECK(c.cost == d.cost);
    for (int i = 0; i < 6; ++i) CHECK(c.plan[i] == d.plan[i]);
}

TEST_CASE("problem validation rejects inconsistent setups") {
    SurrogateModel m = scalar_model(0.5, 1.0);
    MpcProblem pb = scalar_problem(m, 2, 0.0);
    CHECK_NOTHROW(pb.validate());

    auto bad = pb;
    bad.horizon = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = pb;
    bad.u_lower = {2.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = pb;
    bad.forecast.pop_back();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = pb;
    bad.gamma = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = pb;
    bad.r_diag = {-0.1};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = pb;
    bad.model = nullptr;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("receding horizon applies feasible controls and records every solve") {
    SurrogateModel m = quick_single_zone_mlp();
    auto cfg = PlantConfig::single_zone();
    MpcConfig mc;
    mc.horizon = 3;
    mc.solver = "sqp";
    auto weather = make_weather(cfg, 5, 1);
    auto ep = receding_horizon(cfg, m, mc, 6, weather);
    CHECK(ep.traj.length() == 6);
    CHECK(ep.solves.size() == 6);
    CHECK(ep.warm_starts.size() == 6);
    CHECK(ep.failed_steps == 0);
    auto lo = cfg.control_lower();
    auto hi = cfg.control_upper();
    for (size_t t = 0; t < ep.traj.length(); ++t)
        for (size_t c = 0; c < lo.size(); ++c) {
            CHECK(ep.traj.u[t][c] >= lo[c]);
            CHECK(ep.traj.u[t][c] <= hi[c]);
        }
    CHECK(ep.kpi.mean_solve_s > 0.0);
    // The second step's warm start is the first solution shifted by one.
    CHECK(ep.warm_starts[1](0, 0) == ep.solves[0].plan(1, 0));
    CHECK(ep.warm_starts[1](2, 1) == ep.solves[0].plan(2, 1));

    CHECK(receding_horizon(cfg, m, mc, 0, weather).traj.length() == 0);
    CHECK_THROWS_AS(receding_horizon(cfg, m, mc, 100000, weather), std::invalid_argument);
}

TEST_CASE("episode CSV layout") {
    SurrogateModel m = quick_single_zone_mlp();
    auto cfg = PlantConfig::single_zone();
    MpcConfig mc;
    mc.horizon = 2;
    auto weather = make_weather(cfg, 5, 1);
    auto ep = receding_horizon(cfg, m, mc, 3, weather);
    std::string path = "test_episode.csv";
    save_episode_csv(path, ep, cfg);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t_sec,x_0,x_1,x_2,x_3,u_0,u_1,d_0,d_1,d_2,cost,iters,solve_ms");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
    std::remove(path.c_str());
}

TEST_CASE("mpc config file parsing") {
    std::string path = "test_mpc_config.json";
    {
        std::ofstream out(path);
        out << "{\"horizon\": 6, \"gamma\": 25.0, \"solver\": \"gdm\", \"gdm_iterations\": 50}";
    }
    MpcConfig c = MpcConfig::from_json_file(path);
    CHECK(c.horizon == 6);
    CHECK(c.gamma == 25.0);
    CHECK(c.solver == "gdm");
    CHECK(c.gdm.iterations == 50);
    CHECK(c.r_weight == 0.1);  // default preserved
    {
        std::ofstream out(path);
        out << "{\"solver\": \"newton\"}";
    }
    CHECK_THROWS_AS(MpcConfig::from_json_file(path), std::invalid_argument);
    std::remove(path.c_str());
    CHECK_THROWS_AS(MpcConfig::from_json_file("no_such.json"), std::invalid_argument);
}
