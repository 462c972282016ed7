#pragma once

#include <string>
#include <vector>

#include "hvacmpc/plant.hpp"
#include "hvacmpc/trajectory.hpp"

namespace hvacmpc {

struct LagSpec {
    int m_x = 1;
    int m_u = 1;
    int m_d = 1;

    int max_lag() const { return std::max(m_x, std::max(m_u, m_d)); }
    /// Width of one concatenated input window (blocks ordered x, u, d,
    /// oldest-first within each block; a lag of M means M+1 entries).
    int window_width(int n_x, int n_u, int n_d) const {
        return (m_x + 1) * n_x + (m_u + 1) * n_u + (m_d + 1) * n_d;
    }
};

/// Per-channel z-score statistics fitted on training data. Channels with zero
/// variance get std forced to 1 and are flagged.
struct Normalizer {
    std::vector<double> x_mean, x_std;
    std::vector<double> u_mean, u_std;
    std::vector<double> d_mean, d_std;
    std::vector<int> constant_x, constant_u, constant_d;  // flagged channel indices

    static std::vector<double> apply(const std::vector<double>& v, const std::vector<double>& mean,
                                     const std::vector<double>& std);
    static std::vector<double> invert(const std::vector<double>& v, const std::vector<double>& mean,
                                      const std::vector<double>& std);
    std::vector<double> apply_x(const std::vector<double>& v) const { return apply(v, x_mean, x_std); }
    std::vector<double> apply_u(const std::vector<double>& v) const { return apply(v, u_mean, u_std); }
    std::vector<double> apply_d(const std::vector<double>& v) const { return apply(v, d_mean, d_std); }
    std::vector<double> invert_x(const std::vector<double>& v) const { return invert(v, x_mean, x_std); }
};

struct Sample {
    std::vector<double> input;   // concatenated lag window
    std::vector<double> target;  // x_{t+1}
    int traj_id = 0;
    int t = 0;  // index of the current step within the trajectory
};

struct Dataset {
    std::vector<Sample> samples;
    LagSpec lags;
    int n_x = 0, n_u = 0, n_d = 0;
    int skipped_short = 0;  // trajectories too short to window
};

struct SplitManifest {
    std::vector<int> train, val, test;
};

/// Uniform random excitation of the plant control box. Deterministic per seed.
Trajectory excite(const PlantConfig& config, unsigned seed, int steps,
                  const std::vector<DisturbanceVector>& weather);

/// One-step samples from a trajectory per the lag spec. A too-short trajectory
/// yields no samples and bumps skipped_short.
Dataset window(const Trajectory& traj, const LagSpec& lags, int n_x, int n_u, int n_d, int traj_id = 0);
Dataset window_all(const std::vector<Trajectory>& trajectories, const LagSpec& lags, int n_x, int n_u, int n_d);

Normalizer fit_normalizer(const std::vector<Trajectory>& trajectories);

/// Whole-trajectory split by id: first n_train, then n_val, then n_test.
SplitManifest split_by_trajectory(int k, int n_train, int n_val, int n_test);
void save_split_manifest(const std::string& path, const SplitManifest& manifest);
SplitManifest load_split_manifest(const std::string& path);

/// CSV with header traj_id,t_sec,x_0..,u_0..,d_0..; values at 17 significant
/// digits so round-trips are exact.
void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> load_trajectories(const std::string& path);

}  // namespace hvacmpc
