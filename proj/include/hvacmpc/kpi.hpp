#pragma once

#include <string>
#include <vector>

#include "hvacmpc/plant.hpp"
#include "hvacmpc/trajectory.hpp"

namespace hvacmpc {

struct KpiReport {
    double total_power_kwh_m2 = 0.0;
    double discomfort_kh_per_zone = 0.0;
    double mean_solve_s = 0.0;
    double max_solve_s = 0.0;
    int violation_steps = 0;
};

/// Kelvin-hours outside the occupancy-dependent comfort band, averaged over
/// zones. Delta-t comes from the trajectory timestamps.
double discomfort_kh(const Trajectory& traj, const PlantConfig& config);

/// Same integral restricted to occupied hours.
double occupied_discomfort_kh(const Trajectory& traj, const PlantConfig& config);

/// Sum of heating, cooling, and fan energy over the trajectory per floor area.
double energy_kwh_m2(const Trajectory& traj, const PlantConfig& config);

/// (mean, max) of solver wall times; throws std::invalid_argument when empty.
std::pair<double, double> timing(const std::vector<double>& solve_times_s);

void save_kpi_json(const std::string& path, const KpiReport& report);
void append_results_row(const std::string& path, const std::string& model, const std::string& solver,
                        const KpiReport& report);

}  // namespace hvacmpc
