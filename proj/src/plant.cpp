#include "hvacmpc/plant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hvacmpc {

namespace {

constexpr double kCpAir = 1006.0;       // J/(kg K)
constexpr double kGainPerPerson = 120.0;  // W

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double hour_of_day(double clock_s) { return std::fmod(clock_s, 86400.0) / 3600.0; }

void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite value");
}

}  // namespace

int PlantConfig::n_x() const { return zone_count == 1 ? 4 : zone_count + 4; }

std::vector<double> PlantConfig::control_lower() const {
    if (zone_count == 1) return {0.0, 12.0};
    return std::vector<double>(12, 0.0);
}

std::vector<double> PlantConfig::control_upper() const {
    if (zone_count == 1) return {1.0, 40.0};
    return std::vector<double>(12, 1.0);
}

void PlantConfig::validate() const {
    if (zone_count != 1 && zone_count != 5) throw std::invalid_argument("zone_count must be 1 or 5");
    auto need = [&](const std::vector<double>& v, const char* name) {
        if (static_cast<int>(v.size()) != zone_count)
            throw std::invalid_argument(std::string(name) + " must have one entry per zone");
    };
    need(capacitance_j_per_k, "capacitance_j_per_k");
    need(ua_w_per_k, "ua_w_per_k");
    need(heat_capacity_w, "heat_capacity_w");
    need(solar_aperture_m2, "solar_aperture_m2");
    need(max_airflow_kg_s, "max_airflow_kg_s");
    if (zone_count == 1 && cool_capacity_w.size() != 1)
        throw std::invalid_argument("cool_capacity_w must have one entry per zone");
    for (double c : capacitance_j_per_k)
        if (c <= 0.0) throw std::invalid_argument("capacitances must be > 0");
    for (double u : ua_w_per_k)
        if (u < 0.0) throw std::invalid_argument("conductances must be >= 0");
    if (sample_period_s <= 0.0) throw std::invalid_argument("sample_period_s must be > 0");
    if (floor_area_m2 <= 0.0) throw std::invalid_argument("floor_area_m2 must be > 0");
    if (zone_count > 1) {
        if (static_cast<int>(interzone_w_per_k.size()) != zone_count)
            throw std::invalid_argument("interzone matrix must be zone_count x zone_count");
        for (int i = 0; i < zone_count; ++i) {
            if (static_cast<int>(interzone_w_per_k[i].size()) != zone_count)
                throw std::invalid_argument("interzone matrix must be zone_count x zone_count");
            if (interzone_w_per_k[i][i] != 0.0) throw std::invalid_argument("interzone diagonal must be zero");
            for (int j = 0; j < zone_count; ++j) {
                if (interzone_w_per_k[i][j] < 0.0) throw std::invalid_argument("conductances must be >= 0");
                if (interzone_w_per_k[i][j] != interzone_w_per_k[j][i])
                    throw std::invalid_argument("interzone matrix must be symmetric");
            }
        }
    }
    // Euler stability guard for the RC map.
    for (int i = 0; i < zone_count; ++i) {
        double g = ua_w_per_k[i];
        if (zone_count > 1)
            for (int j = 0; j < zone_count; ++j) g += interzone_w_per_k[i][j];
        if (sample_period_s * g / capacitance_j_per_k[i] >= 1.0)
            throw std::invalid_argument("unstable configuration: dt*(UA+sum G)/C >= 1 for zone " + std::to_string(i));
    }
}

PlantConfig PlantConfig::single_zone() {
    PlantConfig c;
    c.zone_count = 1;
    c.capacitance_j_per_k = {4.0e6};
    c.ua_w_per_k = {120.0};
    c.heat_capacity_w = {5000.0};
    c.cool_capacity_w = {4000.0};
    c.fan_coeff_w = 500.0;
    c.floor_area_m2 = 48.0;
    c.solar_aperture_m2 = {6.0};
    c.max_airflow_kg_s = {0.5};
    c.pi_heat = {0.15, 2.0e-4};
    c.pi_cool = {0.15, 2.0e-4};
    c.occupied_start_hour = 8;
    c.occupied_end_hour = 18;
    c.occupant_count = 2;
    return c;
}

PlantConfig PlantConfig::five_zone() {
    PlantConfig c;
    c.zone_count = 5;
    // Zones 0..3 are perimeter, zone 4 is the core.
    c.capacitance_j_per_k = {8.0e6, 8.0e6, 8.0e6, 8.0e6, 2.0e7};
    c.ua_w_per_k = {250.0, 250.0, 250.0, 250.0, 20.0};
    c.interzone_w_per_k.assign(5, std::vector<double>(5, 0.0));
    for (int i = 0; i < 4; ++i) {
        c.interzone_w_per_k[i][4] = 400.0;
        c.interzone_w_per_k[4][i] = 400.0;
    }
    c.max_airflow_kg_s = {0.6, 0.6, 0.6, 0.6, 1.2};
    c.reheat_max_rise_k = 15.0;
    c.heat_capacity_w.resize(5);
    for (int i = 0; i < 5; ++i) c.heat_capacity_w[i] = c.max_airflow_kg_s[i] * kCpAir * c.reheat_max_rise_k;
    c.cool_capacity_w = {};
    c.central_heat_capacity_w = 60000.0;
    c.central_cool_capacity_w = 80000.0;
    c.fan_coeff_w = 2000.0;
    c.floor_area_m2 = 880.0;
    c.solar_aperture_m2 = {12.0, 12.0, 12.0, 12.0, 0.0};
    c.pi_heat = {0.15, 2.0e-4};
    c.pi_cool = {0.15, 2.0e-4};
    c.occupied_start_hour = 6;
    c.occupied_end_hour = 19;
    c.occupant_count = 25;
    return c;
}

PlantConfig PlantConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open plant config: " + path);
    nlohmann::json j;
    in >> j;

    PlantConfig c;
    std::string preset = j.value("preset", "single_zone");
    if (preset == "single_zone")
        c = single_zone();
    else if (preset == "five_zone")
        c = five_zone();
    else
        throw std::invalid_argument("unknown preset: " + preset);

    if (j.contains("capacitance_j_per_k")) c.capacitance_j_per_k = j["capacitance_j_per_k"].get<std::vector<double>>();
    if (j.contains("ua_w_per_k")) c.ua_w_per_k = j["ua_w_per_k"].get<std::vector<double>>();
    if (j.contains("interzone_w_per_k"))
        c.interzone_w_per_k = j["interzone_w_per_k"].get<std::vector<std::vector<double>>>();
    if (j.contains("heat_capacity_w")) c.heat_capacity_w = j["heat_capacity_w"].get<std::vector<double>>();
    if (j.contains("cool_capacity_w")) c.cool_capacity_w = j["cool_capacity_w"].get<std::vector<double>>();
    if (j.contains("central_heat_capacity_w")) c.central_heat_capacity_w = j["central_heat_capacity_w"].get<double>();
    if (j.contains("central_cool_capacity_w")) c.central_cool_capacity_w = j["central_cool_capacity_w"].get<double>();
    if (j.contains("fan_coeff_w")) c.fan_coeff_w = j["fan_coeff_w"].get<double>();
    if (j.contains("floor_area_m2")) c.floor_area_m2 = j["floor_area_m2"].get<double>();
    if (j.contains("solar_aperture_m2")) c.solar_aperture_m2 = j["solar_aperture_m2"].get<std::vector<double>>();
    if (j.contains("max_airflow_kg_s")) c.max_airflow_kg_s = j["max_airflow_kg_s"].get<std::vector<double>>();
    if (j.contains("reheat_max_rise_k")) c.reheat_max_rise_k = j["reheat_max_rise_k"].get<double>();
    if (j.contains("pi_heat")) c.pi_heat = {j["pi_heat"]["kp"].get<double>(), j["pi_heat"]["ki"].get<double>()};
    if (j.contains("pi_cool")) c.pi_cool = {j["pi_cool"]["kp"].get<double>(), j["pi_cool"]["ki"].get<double>()};
    if (j.contains("sample_period_s")) c.sample_period_s = j["sample_period_s"].get<double>();
    if (j.contains("occupied_start_hour")) c.occupied_start_hour = j["occupied_start_hour"].get<int>();
    if (j.contains("occupied_end_hour")) c.occupied_end_hour = j["occupied_end_hour"].get<int>();
    if (j.contains("occupant_count")) c.occupant_count = j["occupant_count"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<unsigned>();
    c.validate();
    return c;
}

PlantState initial_state(const PlantConfig& config) {
    PlantState s;
    s.zone_temp_c.assign(config.zone_count, 20.0);
    s.pi_integral.assign(2, 0.0);
    // VAV dampers and reheat valves act through two-stage servo lags whose
    // states live alongside the loop integrators, parked mid-box.
    if (config.zone_count > 1) s.pi_integral.resize(2 + 4 * config.zone_count, 0.5);
    s.supply_temp_c = 20.0;
    s.clock_s = 0.0;
    return s;
}

std::vector<double> Measurement::state_vector(const PlantConfig& config) const {
    std::vector<double> x = zone_temp_c;
    x.push_back(heating_kw);
    x.push_back(cooling_kw);
    x.push_back(fan_kw);
    if (config.zone_count > 1) x.push_back(supply_temp_c);
    return x;
}

Measurement measure(const PlantState& state, const PlantConfig& config) {
    Measurement m;
    m.zone_temp_c = state.zone_temp_c;
    m.supply_temp_c = state.supply_temp_c;
    m.timestamp_s = state.clock_s;
    (void)config;
    return m;
}

bool is_occupied(double clock_s, const PlantConfig& config) {
    double h = hour_of_day(clock_s);
    return h >= config.occupied_start_hour && h < config.occupied_end_hour;
}

std::pair<std::vector<double>, std::vector<double>> comfort_bounds(double clock_s, const PlantConfig& config) {
    bool occ = is_occupied(clock_s, config);
    std::vector<double> lo(config.zone_count, occ ? 21.0 : 15.0);
    std::vector<double> hi(config.zone_count, occ ? 24.0 : 30.0);
    return {lo, hi};
}

std::vector<DisturbanceVector> make_weather(const PlantConfig& config, unsigned seed, int days) {
    if (days < 1) throw std::invalid_argument("make_weather: days must be >= 1");
    if (config.sample_period_s <= 0.0) throw std::invalid_argument("make_weather: sample_period must be > 0");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    int steps = static_cast<int>(days * 86400.0 / config.sample_period_s);
    std::vector<DisturbanceVector> out;
    out.reserve(steps);
    for (int k = 0; k < steps; ++k) {
        double t = k * config.sample_period_s;
        double day = t / 86400.0;
        double hour = hour_of_day(t);
        DisturbanceVector d;
        d.ambient_c = 10.0 + 12.0 * std::sin(2.0 * M_PI * (day - 80.0) / 365.0) +
                      6.0 * std::sin(2.0 * M_PI * (hour - 9.0) / 24.0) + noise(rng);
        d.solar_wm2 = (hour >= 6.0 && hour < 18.0) ? 600.0 * std::sin(M_PI * (hour - 6.0) / 12.0) : 0.0;
        d.solar_wm2 = std::max(0.0, d.solar_wm2);
        d.occupancy = is_occupied(t, config) ? static_cast<double>(config.occupant_count) : 0.0;
        out.push_back(d);
    }
    return out;
}

std::pair<PlantState, Measurement> step(const PlantState& state, const std::vector<double>& control,
                                        const DisturbanceVector& disturbance, const PlantConfig& config) {
    require_finite(state.zone_temp_c, "step state");
    require_finite(control, "step control");
    if (!std::isfinite(disturbance.ambient_c) || !std::isfinite(disturbance.solar_wm2) ||
        !std::isfinite(disturbance.occupancy))
        throw std::domain_error("step disturbance: non-finite value");
    if (static_cast<int>(control.size()) != config.n_u())
        throw std::invalid_argument("step: control size " + std::to_string(control.size()) + " != " +
                                    std::to_string(config.n_u()));

    const double dt = config.sample_period_s;
    PlantState next = state;
    Measurement m;
    m.timestamp_s = state.clock_s + dt;

    std::vector<double> q_hvac(config.zone_count, 0.0);

    if (config.zone_count == 1) {
        const double u_fan = control[0];
        const double u_tsup = control[1];
        const double m_max = config.max_airflow_kg_s[0];
        const double m_dot = m_max * u_fan;
        const double cap_h = config.heat_capacity_w[0];
        const double cap_c = config.cool_capacity_w[0];

        double duty_h = 0.0, duty_c = 0.0;
        if (m_dot > 0.01 * m_max) {
            // Heating and cooling PI loops track the supply temperature command
            // against the previously delivered supply temperature.
            double e = u_tsup - state.supply_temp_c;
            duty_h = clamp01(config.pi_heat.kp * e + state.pi_integral[0]);
            duty_c = clamp01(config.pi_cool.kp * (-e) + state.pi_integral[1]);
            next.pi_integral[0] = clamp01(state.pi_integral[0] + config.pi_heat.ki * e * dt);
            next.pi_integral[1] = clamp01(state.pi_integral[1] + config.pi_cool.ki * (-e) * dt);
            double m_eff = std::max(m_dot, 0.1 * m_max);
            double q_coil = duty_h * cap_h - duty_c * cap_c;
            next.supply_temp_c = state.zone_temp_c[0] + q_coil / (m_eff * kCpAir);
            q_hvac[0] = m_dot * kCpAir * (next.supply_temp_c - state.zone_temp_c[0]);
        } else {
            // Fan off: no air to condition, integrators bleed off.
            next.pi_integral[0] = 0.9 * state.pi_integral[0];
            next.pi_integral[1] = 0.9 * state.pi_integral[1];
            next.supply_temp_c = state.zone_temp_c[0];
        }
        m.heating_kw = duty_h * cap_h / 1000.0;
        m.cooling_kw = duty_c * cap_c / 1000.0;
        m.fan_kw = config.fan_coeff_w * u_fan * u_fan * u_fan / 1000.0;
    } else {
        const double u_yhea = control[10];
        const double u_ycoo = control[11];
        if (state.pi_integral.size() != static_cast<size_t>(2 + 4 * config.zone_count))
            throw std::invalid_argument("step: five-zone state is missing actuator servo entries");

        // Dampers and reheat valves respond through a two-stage servo lag; the
        // delivered position trails the command by several samples.
        const double kServo = 0.35;
        auto servo = [&](int base, double cmd) {
            double s1 = state.pi_integral[base], s2 = state.pi_integral[base + 1];
            next.pi_integral[base] = s1 + kServo * (cmd - s1);
            next.pi_integral[base + 1] = s2 + kServo * (s1 - s2);
            return s2;
        };

        double m_max_tot = 0.0, m_tot = 0.0, mix_num = 0.0;
        std::vector<double> m_dot(config.zone_count), reheat_pos(config.zone_count);
        for (int i = 0; i < config.zone_count; ++i) {
            m_dot[i] = config.max_airflow_kg_s[i] * servo(2 + 4 * i, control[i]);
            reheat_pos[i] = servo(4 + 4 * i, control[5 + i]);
            m_max_tot += config.max_airflow_kg_s[i];
            m_tot += m_dot[i];
            mix_num += m_dot[i] * state.zone_temp_c[i];
        }
        double t_mix = m_tot > 1e-9 ? mix_num / m_tot
                                    : std::accumulate(state.zone_temp_c.begin(), state.zone_temp_c.end(), 0.0) /
                                          config.zone_count;

        // Central coil PI tracks the supply temperature setpoint commanded by
        // yHea/yCoo; anti-windup via clamped integrators.
        double t_set = 12.5 + 7.5 * (u_yhea - u_ycoo);
        double e = t_set - state.supply_temp_c;
        double duty_h = clamp01(config.pi_heat.kp * e + state.pi_integral[0]);
        double duty_c = clamp01(config.pi_cool.kp * (-e) + state.pi_integral[1]);
        next.pi_integral[0] = clamp01(state.pi_integral[0] + config.pi_heat.ki * e * dt);
        next.pi_integral[1] = clamp01(state.pi_integral[1] + config.pi_cool.ki * (-e) * dt);

        double m_eff = std::max(m_tot, 0.1 * m_max_tot);
        double t_sup_target =
            t_mix + (duty_h * config.central_heat_capacity_w - duty_c * config.central_cool_capacity_w) /
                        (m_eff * kCpAir);
        next.supply_temp_c = std::clamp(state.supply_temp_c + 0.6 * (t_sup_target - state.supply_temp_c), 0.0, 50.0);

        double reheat_w = 0.0;
        for (int i = 0; i < config.zone_count; ++i) {
            double t_dis = next.supply_temp_c + reheat_pos[i] * config.reheat_max_rise_k;
            q_hvac[i] = m_dot[i] * kCpAir * (t_dis - state.zone_temp_c[i]);
            reheat_w += m_dot[i] * kCpAir * config.reheat_max_rise_k * reheat_pos[i];
        }
        m.heating_kw = (duty_h * config.central_heat_capacity_w + reheat_w) / 1000.0;
        m.cooling_kw = duty_c * config.central_cool_capacity_w / 1000.0;
        double flow_frac = m_tot / m_max_tot;
        m.fan_kw = config.fan_coeff_w * flow_frac * flow_frac * flow_frac / 1000.0;
    }

    for (int i = 0; i < config.zone_count; ++i) {
        double q = config.ua_w_per_k[i] * (disturbance.ambient_c - state.zone_temp_c[i]);
        if (config.zone_count > 1)
            for (int j = 0; j < config.zone_count; ++j)
                q += config.interzone_w_per_k[i][j] * (state.zone_temp_c[j] - state.zone_temp_c[i]);
        q += q_hvac[i];
        q += config.solar_aperture_m2[i] * disturbance.solar_wm2;
        q += kGainPerPerson * disturbance.occupancy / config.zone_count;
        next.zone_temp_c[i] = state.zone_temp_c[i] + dt * q / config.capacitance_j_per_k[i];
        if (!std::isfinite(next.zone_temp_c[i])) throw std::domain_error("step: non-finite zone temperature");
    }
    next.clock_s = state.clock_s + dt;

    m.zone_temp_c = next.zone_temp_c;
    m.supply_temp_c = next.supply_temp_c;
    return {next, m};
}

Trajectory simulate_episode(const PlantConfig& config, const Policy& policy, int steps,
                            const std::vector<DisturbanceVector>& weather, int* clamp_warnings) {
    if (static_cast<int>(weather.size()) < steps)
        throw std::invalid_argument("simulate_episode: weather shorter than episode");

    Trajectory traj;
    if (clamp_warnings) *clamp_warnings = 0;
    PlantState state = initial_state(config);
    Measurement meas = measure(state, config);
    auto lo = config.control_lower();
    auto hi = config.control_upper();

    for (int t = 0; t < steps; ++t) {
        std::vector<double> u = policy(meas, state.clock_s);
        bool clamped = false;
        for (size_t i = 0; i < u.size(); ++i) {
            double c = std::clamp(u[i], lo[i], hi[i]);
            if (c != u[i]) clamped = true;
            u[i] = c;
        }
        if (clamped && clamp_warnings) ++(*clamp_warnings);

        traj.x.push_back(meas.state_vector(config));
        traj.u.push_back(u);
        traj.d.push_back(weather[t].as_vector());
        traj.t.push_back(state.clock_s);

        auto [ns, nm] = step(state, u, weather[t], config);
        state = ns;
        meas = nm;
    }
    return traj;
}

std::vector<DisturbanceVector> load_weather_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open weather csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ":1: empty weather file");
    if (line != "t_sec,ambient_c,solar_wm2,occupancy")
        throw std::runtime_error(path + ":1: bad weather header '" + line + "'");
    std::vector<DisturbanceVector> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != 4)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 4 columns");
        out.push_back({vals[1], vals[2], vals[3]});
    }
    return out;
}

void save_weather_csv(const std::string& path, const std::vector<DisturbanceVector>& weather,
                      double sample_period_s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write weather csv: " + path);
    out << "t_sec,ambient_c,solar_wm2,occupancy\n";
    char buf[128];
    for (size_t k = 0; k < weather.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", k * sample_period_s, weather[k].ambient_c,
                      weather[k].solar_wm2, weather[k].occupancy);
        out << buf;
    }
}

}  // namespace hvacmpc
