// hvacmpc command line: data generation, surrogate training, open-loop
// evaluation, closed-loop control, and KPI reporting.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hvacmpc/dataio.hpp"
#include "hvacmpc/kpi.hpp"
#include "hvacmpc/mpc.hpp"
#include "hvacmpc/plant.hpp"
#include "hvacmpc/surrogate.hpp"

namespace fs = std::filesystem;
using namespace hvacmpc;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Scale {
    int trajectories;
    int steps;           // per trajectory
    int width;
    int epochs;
};

Scale scale_preset(const std::string& name) {
    if (name == "desk") return {20, 200, 64, 200};
    if (name == "paper") return {120, 600, 256, 1000};
    throw CLI::ValidationError("--scale", "expected desk or paper, got " + name);
}

PlantConfig plant_from_flags(const std::string& plant, const std::string& plant_json) {
    if (!plant_json.empty()) return PlantConfig::from_json_file(plant_json);
    if (plant == "single") return PlantConfig::single_zone();
    if (plant == "five") return PlantConfig::five_zone();
    throw CLI::ValidationError("--plant", "expected single or five, got " + plant);
}

LagSpec parse_lags(const std::string& s) {
    LagSpec lags;
    if (std::sscanf(s.c_str(), "%d,%d,%d", &lags.m_x, &lags.m_u, &lags.m_d) != 3 || lags.m_x < 0 ||
        lags.m_u < 0 || lags.m_d < 0)
        throw CLI::ValidationError("--lags", "expected mx,mu,md with nonnegative integers, got " + s);
    return lags;
}

std::vector<Trajectory> pick(const std::vector<Trajectory>& all, const std::vector<int>& ids) {
    std::vector<Trajectory> out;
    for (int id : ids) {
        if (id < 0 || id >= static_cast<int>(all.size()))
            throw std::runtime_error("split manifest references trajectory " + std::to_string(id) +
                                     " but only " + std::to_string(all.size()) + " exist");
        out.push_back(all[id]);
    }
    return out;
}

int cmd_generate(const PlantConfig& config, const Scale& scale, unsigned seed, const std::string& out_dir) {
    fs::create_directories(out_dir);
    int days = (scale.steps * static_cast<int>(config.sample_period_s)) / 86400 + 2;
    std::vector<Trajectory> trajs;
    for (int k = 0; k < scale.trajectories; ++k) {
        auto weather = make_weather(config, seed + 1000 * k, days);
        trajs.push_back(excite(config, seed + 1000 * k + 1, scale.steps, weather));
    }
    save_trajectories(out_dir + "/trajectories.csv", trajs);

    int n_train = (scale.trajectories * 7) / 10;
    int n_val = (scale.trajectories - n_train) / 2;
    int n_test = scale.trajectories - n_train - n_val;
    save_split_manifest(out_dir + "/split.json", split_by_trajectory(scale.trajectories, n_train, n_val, n_test));

    auto episode_weather = make_weather(config, seed + 99, 4);
    save_weather_csv(out_dir + "/weather.csv", episode_weather, config.sample_period_s);
    std::cout << "wrote " << trajs.size() << " trajectories (" << scale.steps << " steps each) to " << out_dir
              << "\n";
    return 0;
}

int cmd_train(const PlantConfig& config, const Scale& scale, const std::string& data_dir,
              const std::string& model_name, const LagSpec& lags, int epochs, unsigned seed,
              const std::string& out_path, const std::string& loss_path) {
    auto all = load_trajectories(data_dir + "/trajectories.csv");
    auto manifest = load_split_manifest(data_dir + "/split.json");
    auto train_trajs = pick(all, manifest.train);
    auto val_trajs = pick(all, manifest.val);

    Normalizer norm = fit_normalizer(train_trajs);
    int n_x = config.n_x(), n_u = config.n_u(), n_d = config.n_d();

    ModelKind kind = model_kind_from_string(model_name);
    SurrogateModel model;
    switch (kind) {
        case ModelKind::Linear: model = make_linear(lags, norm, n_x, n_u, n_d, seed); break;
        case ModelKind::Mlp: model = make_mlp(lags, norm, n_x, n_u, n_d, scale.width, 4, seed); break;
        case ModelKind::Lstm: model = make_lstm(lags, norm, n_x, n_u, n_d, scale.width, scale.width, seed); break;
    }

    Dataset train_set = window_all(train_trajs, lags, n_x, n_u, n_d);
    Dataset val_set = window_all(val_trajs, lags, n_x, n_u, n_d);
    if (train_set.samples.empty()) throw std::runtime_error("no training samples; trajectories too short for lags");

    TrainConfig tc;
    tc.epochs = epochs > 0 ? epochs : scale.epochs;
    tc.seed = seed;
    TrainResult result = train(model, train_set, val_set, tc);

    save_checkpoint(out_path, model);
    if (!loss_path.empty()) save_loss_curve(loss_path, result);
    std::printf("trained %s: best epoch %d, train mse %.6g, val mse %.6g\n", model_name.c_str(),
                result.best_epoch, result.train_mse.back(), result.val_mse[result.best_epoch]);
    return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& checkpoint, int horizon,
             const std::string& out_csv) {
    auto all = load_trajectories(data_dir + "/trajectories.csv");
    auto manifest = load_split_manifest(data_dir + "/split.json");
    auto test_trajs = pick(all, manifest.test);

    SurrogateModel model = load_checkpoint(checkpoint);
    int skipped = 0;
    double mse = evaluate(model, test_trajs, horizon, &skipped);
    std::printf("rollout mse (normalized, horizon %d): %.6g over %zu test trajectories (%d starts skipped)\n",
                horizon, mse, test_trajs.size(), skipped);

    if (!out_csv.empty() && !test_trajs.empty()) {
        // Detailed predicted-vs-true dump for the first test trajectory.
        const Trajectory& traj = test_trajs.front();
        std::ofstream out(out_csv);
        if (!out) throw std::runtime_error("cannot write eval csv: " + out_csv);
        out << "start_t,step,channel,predicted,true\n";
        int lag = model.lags.max_lag();
        char buf[128];
        for (int t0 = lag; t0 + horizon < static_cast<int>(traj.length()); ++t0) {
            History h;
            for (int k = t0 - model.lags.m_x; k <= t0; ++k) h.x.push_back(traj.x[k]);
            for (int k = t0 - model.lags.m_u; k < t0; ++k) h.u.push_back(traj.u[k]);
            for (int k = t0 - model.lags.m_d; k < t0; ++k) h.d.push_back(traj.d[k]);
            std::vector<std::vector<double>> controls, dists;
            for (int j = 0; j < horizon; ++j) {
                controls.push_back(traj.u[t0 + j]);
                dists.push_back(traj.d[t0 + j]);
            }
            auto pred = rollout(model, h, controls, dists);
            for (int j = 0; j < horizon; ++j)
                for (int c = 0; c < model.n_x; ++c) {
                    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%.17g\n", t0, j, c, pred[j][c],
                                  traj.x[t0 + 1 + j][c]);
                    out << buf;
                }
        }
    }
    return 0;
}

void write_plot_csv(const std::string& path, const EpisodeResult& ep, const PlantConfig& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write plot csv: " + path);
    out << "t_sec,zone_temp,lower,upper";
    for (int i = 0; i < config.n_u(); ++i) out << ",u_" << i;
    out << ",ambient\n";
    char buf[64];
    for (size_t t = 0; t < ep.traj.length(); ++t) {
        auto [lo, hi] = comfort_bounds(ep.traj.t[t], config);
        double temp = 0.0;
        for (int z = 0; z < config.zone_count; ++z) temp += ep.traj.x[t][z];
        temp /= config.zone_count;
        std::snprintf(buf, sizeof(buf), "%.17g,%.6f,%.2f,%.2f", ep.traj.t[t], temp, lo[0], hi[0]);
        out << buf;
        for (double v : ep.traj.u[t]) {
            std::snprintf(buf, sizeof(buf), ",%.6f", v);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.4f\n", ep.traj.d[t][0]);
        out << buf;
    }
}

int run_one_mpc(const PlantConfig& config, const std::string& checkpoint, MpcConfig mc, int days,
                const std::string& out_dir, const std::string& tag) {
    SurrogateModel model = load_checkpoint(checkpoint);
    int steps = days * 86400 / static_cast<int>(config.sample_period_s);
    auto weather = make_weather(config, config.seed + 7, days + 2);

    EpisodeResult ep = receding_horizon(config, model, mc, steps, weather);

    fs::create_directories(out_dir);
    std::string base = out_dir + "/" + tag;
    save_episode_csv(base + "_episode.csv", ep, config);
    save_kpi_json(base + "_kpi.json", ep.kpi);
    write_plot_csv(base + "_plot.csv", ep, config);
    append_results_row(out_dir + "/results.csv", to_string(model.kind), mc.solver, ep.kpi);

    std::printf("%s/%s: %.4f kWh/m2, %.4f Kh discomfort, solve %.3fs mean / %.3fs max, %d failed steps\n",
                to_string(model.kind).c_str(), mc.solver.c_str(), ep.kpi.total_power_kwh_m2,
                ep.kpi.discomfort_kh_per_zone, ep.kpi.mean_solve_s, ep.kpi.max_solve_s, ep.failed_steps);
    return 0;
}

int cmd_report(const std::string& results_csv) {
    std::ifstream in(results_csv);
    if (!in) throw std::runtime_error("cannot open results csv: " + results_csv);
    std::string line;
    std::getline(in, line);  // header
    std::printf("%-8s %-6s %14s %14s %10s %10s\n", "model", "solver", "power kWh/m2", "discomfort Kh",
                "mean s", "max s");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        size_t pos = 0;
        while (true) {
            size_t c = line.find(',', pos);
            f.push_back(line.substr(pos, c - pos));
            if (c == std::string::npos) break;
            pos = c + 1;
        }
        if (f.size() != 6) throw std::runtime_error("malformed results row: " + line);
        std::printf("%-8s %-6s %14.4f %14.4f %10.3f %10.3f\n", f[0].c_str(), f[1].c_str(), std::stod(f[2]),
                    std::stod(f[3]), std::stod(f[4]), std::stod(f[5]));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven model predictive control for synthetic building plants"};
    app.require_subcommand(1);

    std::string plant = "single", plant_json, scale_name = "desk";
    unsigned seed = 0;
    app.add_option("--plant", plant, "plant preset: single | five");
    app.add_option("--plant-config", plant_json, "plant config JSON (overrides --plant)");
    app.add_option("--scale", scale_name, "workload preset: desk | paper");
    app.add_option("--seed", seed, "base RNG seed");

    auto* gen = app.add_subcommand("generate", "simulate excitation trajectories and weather");
    std::string gen_out = "data";
    gen->add_option("--out", gen_out, "output directory");

    auto* tr = app.add_subcommand("train", "fit a surrogate on generated data");
    std::string tr_data = "data", tr_model = "mlp", tr_lags = "1,1,1", tr_out = "model.json", tr_loss;
    int tr_epochs = 0;
    tr->add_option("--data", tr_data, "data directory from generate");
    tr->add_option("--model", tr_model, "linear | mlp | lstm");
    tr->add_option("--lags", tr_lags, "mx,mu,md lag orders");
    tr->add_option("--epochs", tr_epochs, "override epoch count");
    tr->add_option("--out", tr_out, "checkpoint path");
    tr->add_option("--loss-csv", tr_loss, "per-epoch loss curve path");

    auto* ev = app.add_subcommand("eval", "multi-step rollout error on the test split");
    std::string ev_data = "data", ev_ckpt = "model.json", ev_csv;
    int ev_horizon = 40;
    ev->add_option("--data", ev_data, "data directory from generate");
    ev->add_option("--checkpoint", ev_ckpt, "trained model checkpoint");
    ev->add_option("--horizon", ev_horizon, "rollout length in steps");
    ev->add_option("--out", ev_csv, "predicted-vs-true CSV path");

    auto* mp = app.add_subcommand("mpc", "closed-loop receding-horizon episode");
    std::vector<std::string> mp_ckpts;
    std::string mp_out = "results", mp_solver = "sqp", mp_config;
    int mp_days = 2, mp_horizon = 10;
    bool mp_sweep = false;
    mp->add_option("--checkpoint", mp_ckpts, "model checkpoint(s); repeat for a sweep")->required();
    mp->add_option("--out", mp_out, "output directory");
    mp->add_option("--solver", mp_solver, "gdm | sqp");
    mp->add_option("--mpc-config", mp_config, "solver config JSON (overrides --solver/--horizon)");
    mp->add_option("--days", mp_days, "episode length in days");
    mp->add_option("--horizon", mp_horizon, "planning horizon in steps");
    mp->add_flag("--sweep", mp_sweep, "run every checkpoint with both solvers");

    auto* rep = app.add_subcommand("report", "print the aggregated results table");
    std::string rep_csv = "results/results.csv";
    rep->add_option("--results", rep_csv, "results CSV from mpc runs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        Scale scale = scale_preset(scale_name);
        if (gen->parsed()) {
            return cmd_generate(plant_from_flags(plant, plant_json), scale, seed, gen_out);
        }
        if (tr->parsed()) {
            return cmd_train(plant_from_flags(plant, plant_json), scale, tr_data, tr_model,
                             parse_lags(tr_lags), tr_epochs, seed, tr_out, tr_loss);
        }
        if (ev->parsed()) {
            return cmd_eval(ev_data, ev_ckpt, ev_horizon, ev_csv);
        }
        if (mp->parsed()) {
            PlantConfig config = plant_from_flags(plant, plant_json);
            MpcConfig mc;
            if (!mp_config.empty()) {
                mc = MpcConfig::from_json_file(mp_config);
            } else {
                mc.horizon = mp_horizon;
                mc.solver = mp_solver;
                if (mc.solver != "gdm" && mc.solver != "sqp")
                    throw CLI::ValidationError("--solver", "expected gdm or sqp, got " + mc.solver);
            }
            for (const auto& ckpt : mp_ckpts) {
                std::string stem = fs::path(ckpt).stem().string();
                if (mp_sweep) {
                    for (const char* solver : {"gdm", "sqp"}) {
                        MpcConfig each = mc;
                        each.solver = solver;
                        run_one_mpc(config, ckpt, each, mp_days, mp_out, stem + "_" + solver);
                    }
                } else {
                    run_one_mpc(config, ckpt, mc, mp_days, mp_out, stem + "_" + mc.solver);
                }
            }
            return 0;
        }
        if (rep->parsed()) {
            return cmd_report(rep_csv);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
