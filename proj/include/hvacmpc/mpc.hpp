#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hvacmpc/kpi.hpp"
#include "hvacmpc/plant.hpp"
#include "hvacmpc/surrogate.hpp"
#include "hvacmpc/tensor.hpp"

namespace hvacmpc {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One receding-horizon planning instance: surrogate, lag history, bounds,
/// comfort schedule, and disturbance forecast for the horizon.
struct MpcProblem {
    const SurrogateModel* model = nullptr;
    History history;
    int horizon = 10;
    std::vector<double> u_lower, u_upper;                 // per control channel
    std::vector<std::vector<double>> x_lower, x_upper;    // per step, per zone (deg C)
    std::vector<std::vector<double>> forecast;            // horizon disturbance vectors
    double gamma = 50.0;
    std::vector<double> r_diag;                           // smoothness weights on normalized controls
    std::vector<int> power_channels;                      // state indices summed as power cost
    int zone_count = 1;                                   // leading state channels are zone temps

    void validate() const;
};

/// Planned controls: horizon x n_u matrix in raw units.
using ControlPlan = Tensor;

struct SolveResult {
    ControlPlan plan;
    double cost = 0.0;
    int iterations = 0;
    double wall_time_s = 0.0;
    bool converged = false;
    std::vector<double> cost_trace;
};

struct GdmOptions {
    double learning_rate = 0.01;  // on normalized controls
    int iterations = 100;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct SqpOptions {
    int max_iterations = 100;
    double gtol = 1e-6;        // projected gradient infinity norm
    double ftol = 1e-9;        // relative cost decrease
    double armijo_c = 1e-4;
    double min_step = 1e-12;
};

/// Single-shooting cost: predicted power + smoothness in normalized controls
/// + gamma-weighted relu comfort penalty over the rollout.
double mpc_cost(const ControlPlan& plan, const MpcProblem& problem);
double mpc_cost_grad(const ControlPlan& plan, const MpcProblem& problem, Tensor* grad_out);

ControlPlan clamp_plan(const ControlPlan& plan, const MpcProblem& problem);

/// Projected Adam with clamp after every update; returns the best-cost
/// feasible iterate seen.
SolveResult solve_gdm(const MpcProblem& problem, const ControlPlan& init, const GdmOptions& options = {});

/// Bound-constrained quasi-Newton: damped BFGS on the free set with gradient
/// projection and backtracking Armijo line search.
SolveResult solve_sqp(const MpcProblem& problem, const ControlPlan& init, const SqpOptions& options = {});

/// Previous solution shifted by one with the last row duplicated; midpoint of
/// the box when no previous solution exists.
ControlPlan warm_start(const SolveResult* previous, const MpcProblem& problem);

struct MpcConfig {
    int horizon = 10;
    double gamma = 50.0;
    double r_weight = 0.1;
    std::string solver = "sqp";  // "gdm" | "sqp"
    GdmOptions gdm;
    SqpOptions sqp;
    double forecast_noise_std = 0.0;  // deg C on ambient, off by default
    unsigned forecast_noise_seed = 0;

    static MpcConfig from_json_file(const std::string& path);
};

struct EpisodeResult {
    Trajectory traj;
    KpiReport kpi;
    std::vector<SolveResult> solves;
    std::vector<ControlPlan> warm_starts;  // initial plan per step, for audit
    int failed_steps = 0;
};

/// Closed loop: run-in under midpoint control to seed the lag history, then
/// per step build a problem from current history + comfort schedule + weather
/// forecast, warm start, solve, and apply only the first planned control.
EpisodeResult receding_horizon(const PlantConfig& plant_config, const SurrogateModel& model,
                               const MpcConfig& mpc_config, int steps,
                               const std::vector<DisturbanceVector>& weather);

/// Episode CSV: t_sec,x_*,u_*,d_*,cost,iters,solve_ms
void save_episode_csv(const std::string& path, const EpisodeResult& episode, const PlantConfig& config);

}  // namespace hvacmpc
