#include "hvacmpc/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "hvacmpc/adam.hpp"

namespace hvacmpc {

void MpcProblem::validate() const {
    if (!model) throw std::invalid_argument("MpcProblem: no model");
    if (horizon < 1) throw std::invalid_argument("MpcProblem: horizon must be >= 1");
    size_t n_u = u_lower.size();
    if (u_upper.size() != n_u || static_cast<int>(n_u) != model->n_u)
        throw std::invalid_argument("MpcProblem: control bounds size mismatch");
    for (size_t i = 0; i < n_u; ++i)
        if (u_lower[i] > u_upper[i]) throw std::invalid_argument("MpcProblem: lower bound above upper");
    if (static_cast<int>(forecast.size()) != horizon)
        throw std::invalid_argument("MpcProblem: forecast length != horizon");
    if (static_cast<int>(x_lower.size()) != horizon || static_cast<int>(x_upper.size()) != horizon)
        throw std::invalid_argument("MpcProblem: comfort schedule length != horizon");
    if (gamma < 0.0) throw std::invalid_argument("MpcProblem: gamma must be >= 0");
    if (r_diag.size() != n_u) throw std::invalid_argument("MpcProblem: r_diag size mismatch");
    for (double r : r_diag)
        if (r < 0.0) throw std::invalid_argument("MpcProblem: r_diag must be >= 0");
}

namespace {

struct CostBuild {
    Tape tape;
    std::vector<VarId> plan_rows;  // raw control leaves
    VarId total = -1;
};

CostBuild build_cost(const ControlPlan& plan, const MpcProblem& pb) {
    pb.validate();
    const SurrogateModel& model = *pb.model;
    const int H = pb.horizon;
    if (plan.rows() != H || plan.cols() != model.n_u)
        throw std::invalid_argument("cost: plan shape " + plan.shape_str() + " != horizon x n_u");

    CostBuild cb;
    Tape& tape = cb.tape;
    StagedParams sp = stage_params(tape, model);

    VarId u_mean = tape.leaf(Tensor::row(model.norm.u_mean));
    std::vector<double> u_inv_std(model.norm.u_std.size());
    for (size_t i = 0; i < u_inv_std.size(); ++i) u_inv_std[i] = 1.0 / model.norm.u_std[i];
    VarId u_istd = tape.leaf(Tensor::row(u_inv_std));
    VarId x_mean = tape.leaf(Tensor::row(model.norm.x_mean));
    VarId x_std = tape.leaf(Tensor::row(model.norm.x_std));

    std::vector<VarId> u_norm;
    for (int t = 0; t < H; ++t) {
        std::vector<double> row(plan.cols());
        for (int c = 0; c < plan.cols(); ++c) row[c] = plan(t, c);
        VarId u_raw = tape.leaf(Tensor::row(row));
        cb.plan_rows.push_back(u_raw);
        u_norm.push_back(tape.hadamard(tape.sub(u_raw, u_mean), u_istd));
    }

    std::vector<VarId> x_norm = rollout_norm(tape, model, sp, pb.history, u_norm, pb.forecast);

    std::vector<double> mask(model.n_x, 0.0);
    for (int c : pb.power_channels) mask[c] = 1.0;
    VarId power_mask = tape.leaf(Tensor::row(mask));
    VarId r_row = tape.leaf(Tensor::row(pb.r_diag));

    VarId power = -1, penalty = -1, smooth = -1;
    for (int t = 0; t < H; ++t) {
        VarId x_raw = tape.add(tape.hadamard(x_norm[t], x_std), x_mean);
        VarId p = tape.sum(tape.hadamard(x_raw, power_mask));
        power = power < 0 ? p : tape.add(power, p);

        VarId temps = tape.slice_cols(x_raw, 0, pb.zone_count);
        VarId lo = tape.leaf(Tensor::row(pb.x_lower[t]));
        VarId hi = tape.leaf(Tensor::row(pb.x_upper[t]));
        VarId pen = tape.add(tape.sum(tape.relu(tape.sub(lo, temps))), tape.sum(tape.relu(tape.sub(temps, hi))));
        penalty = penalty < 0 ? pen : tape.add(penalty, pen);
    }
    for (int t = 0; t + 1 < H; ++t) {
        VarId d = tape.sub(u_norm[t + 1], u_norm[t]);
        VarId s = tape.sum(tape.hadamard(tape.square(d), r_row));
        smooth = smooth < 0 ? s : tape.add(smooth, s);
    }

    VarId total = tape.add(power, tape.scalar_mul(penalty, pb.gamma));
    if (smooth >= 0) total = tape.add(total, smooth);
    cb.total = total;
    return cb;
}

}  // namespace

double mpc_cost(const ControlPlan& plan, const MpcProblem& problem) {
    CostBuild cb = build_cost(plan, problem);
    return cb.tape.value(cb.total).item();
}

double mpc_cost_grad(const ControlPlan& plan, const MpcProblem& problem, Tensor* grad_out) {
    CostBuild cb = build_cost(plan, problem);
    double c = cb.tape.value(cb.total).item();
    if (grad_out) {
        cb.tape.backward(cb.total);
        Tensor g(plan.rows(), plan.cols());
        for (int t = 0; t < plan.rows(); ++t) {
            const Tensor& gr = cb.tape.grad(cb.plan_rows[t]);
            for (int c2 = 0; c2 < plan.cols(); ++c2) g(t, c2) = gr.size() ? gr[c2] : 0.0;
        }
        *grad_out = std::move(g);
    }
    return c;
}

ControlPlan clamp_plan(const ControlPlan& plan, const MpcProblem& problem) {
    ControlPlan out = plan;
    for (int t = 0; t < out.rows(); ++t)
        for (int c = 0; c < out.cols(); ++c) out(t, c) = std::clamp(out(t, c), problem.u_lower[c], problem.u_upper[c]);
    return out;
}

SolveResult solve_gdm(const MpcProblem& problem, const ControlPlan& init, const GdmOptions& options) {
    auto start = std::chrono::steady_clock::now();
    const SurrogateModel& model = *problem.model;
    const int H = problem.horizon, n_u = model.n_u;

    // Optimize in normalized control space; the learning rate is calibrated
    // for z-scored channels.
    Tensor z(H, n_u), zlo(1, n_u), zhi(1, n_u);
    for (int c = 0; c < n_u; ++c) {
        zlo(0, c) = (problem.u_lower[c] - model.norm.u_mean[c]) / model.norm.u_std[c];
        zhi(0, c) = (problem.u_upper[c] - model.norm.u_mean[c]) / model.norm.u_std[c];
    }
    ControlPlan feasible = clamp_plan(init, problem);
    for (int t = 0; t < H; ++t)
        for (int c = 0; c < n_u; ++c) z(t, c) = (feasible(t, c) - model.norm.u_mean[c]) / model.norm.u_std[c];

    auto denorm = [&](const Tensor& zz) {
        ControlPlan u(H, n_u);
        for (int t = 0; t < H; ++t)
            for (int c = 0; c < n_u; ++c) u(t, c) = zz(t, c) * model.norm.u_std[c] + model.norm.u_mean[c];
        return clamp_plan(u, problem);
    };

    Adam adam(options.learning_rate, options.beta1, options.beta2, options.eps);
    SolveResult result;
    result.cost = std::numeric_limits<double>::infinity();

    for (int it = 0; it < options.iterations; ++it) {
        ControlPlan u = denorm(z);
        Tensor g_raw;
        double c = mpc_cost_grad(u, problem, &g_raw);
        if (!std::isfinite(c)) throw SolverError("gdm: cost not finite at iteration " + std::to_string(it));
        if (c < result.cost) {
            result.cost = c;
            result.plan = u;
        }
        result.cost_trace.push_back(result.cost);

        Tensor gz(H, n_u);
        for (int t = 0; t < H; ++t)
            for (int cc = 0; cc < n_u; ++cc) gz(t, cc) = g_raw(t, cc) * model.norm.u_std[cc];
        adam.step({&z}, {&gz});
        for (int t = 0; t < H; ++t)
            for (int cc = 0; cc < n_u; ++cc) z(t, cc) = std::clamp(z(t, cc), zlo(0, cc), zhi(0, cc));
    }
    // Final candidate after the last update.
    ControlPlan u = denorm(z);
    double c = mpc_cost(u, problem);
    if (c < result.cost) {
        result.cost = c;
        result.plan = u;
    }

    result.iterations = options.iterations;
    result.converged = true;
    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

namespace {

// Solves A x = b for symmetric positive definite A in place; returns false if
// the factorization breaks down.
bool cholesky_solve(std::vector<double> a, std::vector<double>& b, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (s <= 1e-14) return false;
                a[i * n + i] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
        b[i] = s / a[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
        b[i] = s / a[i * n + i];
    }
    return true;
}

}  // namespace

SolveResult solve_sqp(const MpcProblem& problem, const ControlPlan& init, const SqpOptions& options) {
    auto start = std::chrono::steady_clock::now();
    const int H = problem.horizon, n_u = static_cast<int>(problem.u_lower.size());
    const int n = H * n_u;

    std::vector<double> lo(n), hi(n);
    for (int t = 0; t < H; ++t)
        for (int c = 0; c < n_u; ++c) {
            lo[t * n_u + c] = problem.u_lower[c];
            hi[t * n_u + c] = problem.u_upper[c];
        }

    auto to_plan = [&](const std::vector<double>& v) {
        ControlPlan p(H, n_u);
        for (int i = 0; i < n; ++i) p[i] = v[i];
        return p;
    };
    auto clamp_vec = [&](std::vector<double> v) {
        for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
        return v;
    };
    auto eval = [&](const std::vector<double>& v, std::vector<double>* grad) {
        Tensor g;
        double c = mpc_cost_grad(to_plan(v), problem, grad ? &g : nullptr);
        if (grad) grad->assign(g.data().begin(), g.data().end());
        return c;
    };

    std::vector<double> x(n);
    {
        ControlPlan p0 = clamp_plan(init, problem);
        for (int i = 0; i < n; ++i) x[i] = p0[i];
    }
    std::vector<double> g;
    double f = eval(x, &g);
    if (!std::isfinite(f)) throw SolverError("sqp: cost not finite at initial point");

    std::vector<double> B(static_cast<size_t>(n) * n, 0.0);
    auto reset_b = [&] {
        std::fill(B.begin(), B.end(), 0.0);
        for (int i = 0; i < n; ++i) B[i * n + i] = 1.0;
    };
    reset_b();

    SolveResult result;
    result.plan = to_plan(x);
    result.cost = f;
    result.cost_trace.push_back(f);
    result.converged = false;
    const double bound_eps = 1e-10;

    for (int it = 0; it < options.max_iterations; ++it) {
        result.iterations = it + 1;

        // Projected gradient stopping test.
        double pg_inf = 0.0;
        for (int i = 0; i < n; ++i) {
            double step_pt = std::clamp(x[i] - g[i], lo[i], hi[i]);
            pg_inf = std::max(pg_inf, std::abs(x[i] - step_pt));
        }
        if (pg_inf < options.gtol) {
            result.converged = true;
            break;
        }

        // Active bounds at this iterate.
        std::vector<int> free_idx;
        for (int i = 0; i < n; ++i) {
            bool at_lo = x[i] <= lo[i] + bound_eps && g[i] > 0.0;
            bool at_hi = x[i] >= hi[i] - bound_eps && g[i] < 0.0;
            if (!at_lo && !at_hi) free_idx.push_back(i);
        }

        std::vector<double> d(n, 0.0);
        bool have_dir = false;
        if (!free_idx.empty()) {
            int m = static_cast<int>(free_idx.size());
            std::vector<double> sub(static_cast<size_t>(m) * m), rhs(m);
            for (int a = 0; a < m; ++a) {
                rhs[a] = -g[free_idx[a]];
                for (int b = 0; b < m; ++b) sub[a * m + b] = B[free_idx[a] * n + free_idx[b]];
            }
            if (cholesky_solve(std::move(sub), rhs, m)) {
                for (int a = 0; a < m; ++a) d[free_idx[a]] = rhs[a];
                double descent = 0.0;
                for (int i = 0; i < n; ++i) descent += d[i] * g[i];
                have_dir = descent < 0.0;
            }
        }
        if (!have_dir) {
            reset_b();
            for (int i : free_idx) d[i] = -g[i];
        }

        // Backtracking Armijo with projection of trial points onto the box.
        double alpha = 1.0;
        std::vector<double> x_new;
        double f_new = f;
        bool accepted = false;
        double d_inf = 0.0;
        for (int i = 0; i < n; ++i) d_inf = std::max(d_inf, std::abs(d[i]));
        while (alpha * d_inf >= options.min_step) {
            std::vector<double> trial(n);
            for (int i = 0; i < n; ++i) trial[i] = x[i] + alpha * d[i];
            trial = clamp_vec(std::move(trial));
            double slope = 0.0;
            for (int i = 0; i < n; ++i) slope += g[i] * (trial[i] - x[i]);
            double ft = eval(trial, nullptr);
            if (std::isfinite(ft) && ft <= f + options.armijo_c * slope && slope < 0.0) {
                x_new = std::move(trial);
                f_new = ft;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // Line search failed; keep the best iterate found so far.
            result.converged = false;
            break;
        }

        std::vector<double> g_new;
        double f_check = eval(x_new, &g_new);
        (void)f_check;

        // Damped BFGS update (Powell damping keeps B positive definite).
        std::vector<double> s(n), y(n), bs(n, 0.0);
        for (int i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) bs[i] += B[i * n + j] * s[j];
        double sbs = 0.0, sy = 0.0;
        for (int i = 0; i < n; ++i) {
            sbs += s[i] * bs[i];
            sy += s[i] * y[i];
        }
        if (sbs > 1e-16) {
            std::vector<double> r(n);
            double sr;
            if (sy < 0.2 * sbs) {
                double theta = 0.8 * sbs / (sbs - sy);
                for (int i = 0; i < n; ++i) r[i] = theta * y[i] + (1.0 - theta) * bs[i];
                sr = theta * sy + (1.0 - theta) * sbs;
            } else {
                r = y;
                sr = sy;
            }
            if (sr > 1e-14) {
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        B[i * n + j] += r[i] * r[j] / sr - bs[i] * bs[j] / sbs;
            }
        }

        double f_prev = f;
        x = std::move(x_new);
        g = std::move(g_new);
        f = f_new;
        if (f < result.cost) {
            result.cost = f;
            result.plan = to_plan(x);
        }
        result.cost_trace.push_back(result.cost);

        if (std::abs(f_prev - f) < options.ftol * std::max(1.0, std::abs(f))) {
            result.converged = true;
            break;
        }
    }

    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

ControlPlan warm_start(const SolveResult* previous, const MpcProblem& problem) {
    const int H = problem.horizon;
    const int n_u = static_cast<int>(problem.u_lower.size());
    ControlPlan plan(H, n_u);
    if (previous && previous->plan.rows() == H && previous->plan.cols() == n_u) {
        for (int t = 0; t < H; ++t) {
            int src = std::min(t + 1, H - 1);
            for (int c = 0; c < n_u; ++c) plan(t, c) = previous->plan(src, c);
        }
    } else {
        for (int t = 0; t < H; ++t)
            for (int c = 0; c < n_u; ++c) plan(t, c) = 0.5 * (problem.u_lower[c] + problem.u_upper[c]);
    }
    return plan;
}

MpcConfig MpcConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open mpc config: " + path);
    nlohmann::json j;
    in >> j;
    MpcConfig c;
    c.horizon = j.value("horizon", c.horizon);
    c.gamma = j.value("gamma", c.gamma);
    c.r_weight = j.value("r_weight", c.r_weight);
    c.solver = j.value("solver", c.solver);
    c.gdm.learning_rate = j.value("gdm_learning_rate", c.gdm.learning_rate);
    c.gdm.iterations = j.value("gdm_iterations", c.gdm.iterations);
    c.sqp.max_iterations = j.value("sqp_max_iterations", c.sqp.max_iterations);
    c.sqp.gtol = j.value("sqp_gtol", c.sqp.gtol);
    c.sqp.ftol = j.value("sqp_ftol", c.sqp.ftol);
    c.forecast_noise_std = j.value("forecast_noise_std", c.forecast_noise_std);
    c.forecast_noise_seed = j.value("forecast_noise_seed", c.forecast_noise_seed);
    if (c.solver != "gdm" && c.solver != "sqp") throw std::invalid_argument("mpc config: unknown solver " + c.solver);
    return c;
}

EpisodeResult receding_horizon(const PlantConfig& plant_config, const SurrogateModel& model,
                               const MpcConfig& mpc_config, int steps,
                               const std::vector<DisturbanceVector>& weather) {
    const int H = mpc_config.horizon;
    const int lag = model.lags.max_lag();
    if (steps < 0) throw std::invalid_argument("receding_horizon: negative episode length");
    if (static_cast<int>(weather.size()) < lag + steps + H)
        throw std::invalid_argument("receding_horizon: weather must cover run-in + episode + horizon");

    EpisodeResult ep;
    if (steps == 0) return ep;

    const double dt = plant_config.sample_period_s;
    auto u_lo = plant_config.control_lower();
    auto u_hi = plant_config.control_upper();
    std::vector<double> u_mid(u_lo.size());
    for (size_t i = 0; i < u_lo.size(); ++i) u_mid[i] = 0.5 * (u_lo[i] + u_hi[i]);

    std::mt19937_64 noise_rng(mpc_config.forecast_noise_seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    // Rolling raw history buffers for the lag windows.
    std::vector<std::vector<double>> x_hist, u_hist, d_hist;

    PlantState state = initial_state(plant_config);
    Measurement meas = measure(state, plant_config);
    x_hist.push_back(meas.state_vector(plant_config));

    // Run-in under midpoint control so the lag windows are populated.
    for (int k = 0; k < lag; ++k) {
        u_hist.push_back(u_mid);
        d_hist.push_back(weather[k].as_vector());
        auto [ns, nm] = step(state, u_mid, weather[k], plant_config);
        state = ns;
        meas = nm;
        x_hist.push_back(meas.state_vector(plant_config));
    }

    std::vector<int> power_channels;
    power_channels.push_back(plant_config.zone_count);      // heating
    power_channels.push_back(plant_config.zone_count + 1);  // cooling
    if (plant_config.zone_count == 1) power_channels.push_back(plant_config.zone_count + 2);  // fan

    const SolveResult* previous = nullptr;
    SolveResult last;
    std::vector<double> last_applied = u_mid;

    for (int t = 0; t < steps; ++t) {
        int widx = lag + t;

        MpcProblem pb;
        pb.model = &model;
        pb.horizon = H;
        pb.u_lower = u_lo;
        pb.u_upper = u_hi;
        pb.gamma = mpc_config.gamma;
        pb.r_diag.assign(u_lo.size(), mpc_config.r_weight);
        pb.power_channels = power_channels;
        pb.zone_count = plant_config.zone_count;
        for (int j = 0; j < H; ++j) {
            auto [clo, chi] = comfort_bounds(state.clock_s + (j + 1) * dt, plant_config);
            pb.x_lower.push_back(clo);
            pb.x_upper.push_back(chi);
            auto d = weather[widx + j].as_vector();
            if (mpc_config.forecast_noise_std > 0.0) d[0] += mpc_config.forecast_noise_std * noise(noise_rng);
            pb.forecast.push_back(std::move(d));
        }
        pb.history.x.assign(x_hist.end() - (model.lags.m_x + 1), x_hist.end());
        if (model.lags.m_u > 0) pb.history.u.assign(u_hist.end() - model.lags.m_u, u_hist.end());
        if (model.lags.m_d > 0) pb.history.d.assign(d_hist.end() - model.lags.m_d, d_hist.end());

        ControlPlan init = warm_start(previous, pb);
        ep.warm_starts.push_back(init);

        std::vector<double> u_applied;
        try {
            auto solve_from = [&](const ControlPlan& p0) {
                return mpc_config.solver == "gdm" ? solve_gdm(pb, p0, mpc_config.gdm)
                                                  : solve_sqp(pb, p0, mpc_config.sqp);
            };
            last = solve_from(init);
            if (previous) {
                // The rollout cost is multimodal; a midpoint restart guards
                // against a warm start trapped in a poor basin.
                SolveResult alt = solve_from(warm_start(nullptr, pb));
                alt.wall_time_s += last.wall_time_s;
                if (alt.cost < last.cost) last = std::move(alt);
                else last.wall_time_s = alt.wall_time_s;
            }
            previous = &last;
            ep.solves.push_back(last);
            u_applied.resize(u_lo.size());
            for (size_t c = 0; c < u_applied.size(); ++c) u_applied[c] = last.plan(0, static_cast<int>(c));
        } catch (const SolverError&) {
            ++ep.failed_steps;
            u_applied = last_applied;
            for (size_t c = 0; c < u_applied.size(); ++c) u_applied[c] = std::clamp(u_applied[c], u_lo[c], u_hi[c]);
        }

        ep.traj.x.push_back(meas.state_vector(plant_config));
        ep.traj.u.push_back(u_applied);
        ep.traj.d.push_back(weather[widx].as_vector());
        ep.traj.t.push_back(state.clock_s);

        auto [ns, nm] = step(state, u_applied, weather[widx], plant_config);
        state = ns;
        meas = nm;
        x_hist.push_back(meas.state_vector(plant_config));
        u_hist.push_back(u_applied);
        d_hist.push_back(weather[widx].as_vector());
        last_applied = u_applied;
    }

    ep.kpi.total_power_kwh_m2 = energy_kwh_m2(ep.traj, plant_config);
    ep.kpi.discomfort_kh_per_zone = discomfort_kh(ep.traj, plant_config);
    if (!ep.solves.empty()) {
        std::vector<double> times;
        for (auto& s : ep.solves) times.push_back(s.wall_time_s);
        auto [mean, mx] = timing(times);
        ep.kpi.mean_solve_s = mean;
        ep.kpi.max_solve_s = mx;
    }
    ep.kpi.violation_steps = ep.failed_steps;
    return ep;
}

void save_episode_csv(const std::string& path, const EpisodeResult& episode, const PlantConfig& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write episode csv: " + path);
    out << "t_sec";
    for (int i = 0; i < config.n_x(); ++i) out << ",x_" << i;
    for (int i = 0; i < config.n_u(); ++i) out << ",u_" << i;
    for (int i = 0; i < config.n_d(); ++i) out << ",d_" << i;
    out << ",cost,iters,solve_ms\n";
    char buf[64];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        out << buf;
    };
    for (size_t t = 0; t < episode.traj.length(); ++t) {
        std::snprintf(buf, sizeof(buf), "%.17g", episode.traj.t[t]);
        out << buf;
        for (double v : episode.traj.x[t]) emit(v);
        for (double v : episode.traj.u[t]) emit(v);
        for (double v : episode.traj.d[t]) emit(v);
        if (t < episode.solves.size()) {
            emit(episode.solves[t].cost);
            out << "," << episode.solves[t].iterations;
            std::snprintf(buf, sizeof(buf), ",%.3f", episode.solves[t].wall_time_s * 1000.0);
            out << buf;
        } else {
            out << ",,,";
        }
        out << "\n";
    }
}

}  // namespace hvacmpc
