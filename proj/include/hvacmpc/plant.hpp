#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hvacmpc/trajectory.hpp"

namespace hvacmpc {

struct PiGains {
    double kp = 0.3;
    double ki = 2e-3;  // 1/s
};

/// Parameters of the synthetic RC building. Two presets exist: a single-zone
/// fan-coil case and a five-zone VAV case (core zone coupled to four
/// perimeter zones).
struct PlantConfig {
    int zone_count = 1;
    std::vector<double> capacitance_j_per_k;          // per zone
    std::vector<double> ua_w_per_k;                   // zone to ambient
    std::vector<std::vector<double>> interzone_w_per_k;  // symmetric, zero diagonal
    std::vector<double> heat_capacity_w;              // per-zone heating (coil or reheat)
    std::vector<double> cool_capacity_w;              // per-zone cooling (single-zone only)
    double central_heat_capacity_w = 0.0;             // five-zone
    double central_cool_capacity_w = 0.0;             // five-zone
    double fan_coeff_w = 500.0;
    double floor_area_m2 = 48.0;
    std::vector<double> solar_aperture_m2;            // per zone
    std::vector<double> max_airflow_kg_s;             // per zone
    double reheat_max_rise_k = 15.0;                  // five-zone discharge temp rise at full reheat
    PiGains pi_heat;
    PiGains pi_cool;
    double sample_period_s = 900.0;
    int occupied_start_hour = 8;
    int occupied_end_hour = 18;
    int occupant_count = 2;
    unsigned seed = 0;

    /// Throws std::invalid_argument on violated invariants, including the
    /// forward-Euler stability guard dt*(UA+sum G)/C < 1.
    void validate() const;

    int n_zones() const { return zone_count; }
    int n_x() const;  // zone temps + heat/cool/fan power [+ supply temp]
    int n_u() const { return zone_count == 1 ? 2 : 12; }
    int n_d() const { return 3; }

    std::vector<double> control_lower() const;
    std::vector<double> control_upper() const;

    static PlantConfig single_zone();
    static PlantConfig five_zone();
    static PlantConfig from_json_file(const std::string& path);
};

struct PlantState {
    std::vector<double> zone_temp_c;
    std::vector<double> pi_integral;   // heat loop(s) then cool loop(s)
    double supply_temp_c = 20.0;
    double clock_s = 0.0;
};

struct DisturbanceVector {
    double ambient_c = 0.0;
    double solar_wm2 = 0.0;
    double occupancy = 0.0;

    std::vector<double> as_vector() const { return {ambient_c, solar_wm2, occupancy}; }
};

struct Measurement {
    std::vector<double> zone_temp_c;
    double heating_kw = 0.0;
    double cooling_kw = 0.0;
    double fan_kw = 0.0;
    double supply_temp_c = 20.0;  // reported for the five-zone case
    double timestamp_s = 0.0;

    /// Channels in the fixed state order used by the surrogates.
    std::vector<double> state_vector(const PlantConfig& config) const;
};

using Policy = std::function<std::vector<double>(const Measurement&, double /*clock_s*/)>;

PlantState initial_state(const PlantConfig& config);

/// Synthetic weather: seasonal + diurnal ambient sinusoids with seeded
/// Gaussian noise, half-sine solar, scheduled occupancy. Deterministic per seed.
std::vector<DisturbanceVector> make_weather(const PlantConfig& config, unsigned seed, int days);

/// Comfort band at a clock time: (21, 24) C per zone when occupied,
/// (15, 30) C otherwise. The occupied window is half-open [start, end).
std::pair<std::vector<double>, std::vector<double>> comfort_bounds(double clock_s, const PlantConfig& config);

bool is_occupied(double clock_s, const PlantConfig& config);

/// Advances the plant one sample period. The caller clamps controls first.
std::pair<PlantState, Measurement> step(const PlantState& state, const std::vector<double>& control,
                                        const DisturbanceVector& disturbance, const PlantConfig& config);

Measurement measure(const PlantState& state, const PlantConfig& config);

Trajectory simulate_episode(const PlantConfig& config, const Policy& policy, int steps,
                            const std::vector<DisturbanceVector>& weather, int* clamp_warnings = nullptr);

std::vector<DisturbanceVector> load_weather_csv(const std::string& path);
void save_weather_csv(const std::string& path, const std::vector<DisturbanceVector>& weather,
                      double sample_period_s);

}  // namespace hvacmpc
