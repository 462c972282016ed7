#include "hvacmpc/kpi.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <sys/stat.h>

#include <json.hpp>

namespace hvacmpc {

namespace {

double step_hours(const Trajectory& traj, size_t t) {
    if (traj.t.size() >= 2) {
        size_t i = std::min(t + 1, traj.t.size() - 1);
        return (traj.t[i] - traj.t[i - 1]) / 3600.0;
    }
    return 0.25;
}

double discomfort_impl(const Trajectory& traj, const PlantConfig& config, bool occupied_only) {
    double total = 0.0;
    for (size_t t = 0; t < traj.length(); ++t) {
        if (occupied_only && !is_occupied(traj.t[t], config)) continue;
        auto [lo, hi] = comfort_bounds(traj.t[t], config);
        double dt_h = step_hours(traj, t);
        for (int z = 0; z < config.zone_count; ++z) {
            double temp = traj.x[t][z];
            double excess = std::max({0.0, lo[z] - temp, temp - hi[z]});
            total += excess * dt_h;
        }
    }
    return total / config.zone_count;
}

}  // namespace

double discomfort_kh(const Trajectory& traj, const PlantConfig& config) {
    return discomfort_impl(traj, config, false);
}

double occupied_discomfort_kh(const Trajectory& traj, const PlantConfig& config) {
    return discomfort_impl(traj, config, true);
}

double energy_kwh_m2(const Trajectory& traj, const PlantConfig& config) {
    if (config.floor_area_m2 <= 0.0) throw std::invalid_argument("energy: floor area must be > 0");
    double kwh = 0.0;
    int p0 = config.zone_count;  // heat, cool, fan follow the zone temps
    for (size_t t = 0; t < traj.length(); ++t) {
        double kw = traj.x[t][p0] + traj.x[t][p0 + 1] + traj.x[t][p0 + 2];
        kwh += kw * step_hours(traj, t);
    }
    return kwh / config.floor_area_m2;
}

std::pair<double, double> timing(const std::vector<double>& solve_times_s) {
    if (solve_times_s.empty()) throw std::invalid_argument("timing: no solve results");
    double sum = 0.0, mx = 0.0;
    for (double v : solve_times_s) {
        sum += v;
        mx = std::max(mx, v);
    }
    return {sum / solve_times_s.size(), mx};
}

void save_kpi_json(const std::string& path, const KpiReport& report) {
    nlohmann::json j;
    j["total_power_kwh_m2"] = report.total_power_kwh_m2;
    j["discomfort_kh_per_zone"] = report.discomfort_kh_per_zone;
    j["mean_solve_s"] = report.mean_solve_s;
    j["max_solve_s"] = report.max_solve_s;
    j["violation_steps"] = report.violation_steps;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write kpi json: " + path);
    out << j.dump(2) << "\n";
}

void append_results_row(const std::string& path, const std::string& model, const std::string& solver,
                        const KpiReport& report) {
    struct stat st {};
    bool fresh = stat(path.c_str(), &st) != 0 || st.st_size == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write results csv: " + path);
    if (fresh) out << "model,solver,power_kwh_m2,discomfort_kh,mean_s,max_s\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%.17g,%.6f,%.6f\n", model.c_str(), solver.c_str(),
                  report.total_power_kwh_m2, report.discomfort_kh_per_zone, report.mean_solve_s,
                  report.max_solve_s);
    out << buf;
}

}  // namespace hvacmpc
