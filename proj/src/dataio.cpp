#include "hvacmpc/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hvacmpc {

std::vector<double> Normalizer::apply(const std::vector<double>& v, const std::vector<double>& mean,
                                      const std::vector<double>& std) {
    if (v.size() != mean.size()) throw std::invalid_argument("normalizer: channel count mismatch");
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean[i]) / std[i];
    return out;
}

std::vector<double> Normalizer::invert(const std::vector<double>& v, const std::vector<double>& mean,
                                       const std::vector<double>& std) {
    if (v.size() != mean.size()) throw std::invalid_argument("normalizer: channel count mismatch");
    std::vector<double> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] * std[i] + mean[i];
    return out;
}

Trajectory excite(const PlantConfig& config, unsigned seed, int steps,
                  const std::vector<DisturbanceVector>& weather) {
    if (steps < 1) throw std::invalid_argument("excite: steps must be >= 1");
    std::mt19937_64 rng(seed);
    auto lo = config.control_lower();
    auto hi = config.control_upper();
    Policy policy = [&](const Measurement&, double) {
        std::vector<double> u(lo.size());
        for (size_t i = 0; i < u.size(); ++i) {
            std::uniform_real_distribution<double> dist(lo[i], hi[i]);
            u[i] = dist(rng);
        }
        return u;
    };
    return simulate_episode(config, policy, steps, weather);
}

Dataset window(const Trajectory& traj, const LagSpec& lags, int n_x, int n_u, int n_d, int traj_id) {
    if (lags.m_x < 0 || lags.m_u < 0 || lags.m_d < 0) throw std::invalid_argument("window: lags must be >= 0");
    Dataset ds;
    ds.lags = lags;
    ds.n_x = n_x;
    ds.n_u = n_u;
    ds.n_d = n_d;
    int len = static_cast<int>(traj.length());
    int first = lags.max_lag();
    if (len < first + 2) {
        ds.skipped_short = 1;
        return ds;
    }
    for (int t = first; t <= len - 2; ++t) {
        Sample s;
        s.traj_id = traj_id;
        s.t = t;
        s.input.reserve(lags.window_width(n_x, n_u, n_d));
        for (int k = t - lags.m_x; k <= t; ++k)
            s.input.insert(s.input.end(), traj.x[k].begin(), traj.x[k].end());
        for (int k = t - lags.m_u; k <= t; ++k)
            s.input.insert(s.input.end(), traj.u[k].begin(), traj.u[k].end());
        for (int k = t - lags.m_d; k <= t; ++k)
            s.input.insert(s.input.end(), traj.d[k].begin(), traj.d[k].end());
        s.target = traj.x[t + 1];
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset window_all(const std::vector<Trajectory>& trajectories, const LagSpec& lags, int n_x, int n_u, int n_d) {
    Dataset all;
    all.lags = lags;
    all.n_x = n_x;
    all.n_u = n_u;
    all.n_d = n_d;
    for (size_t i = 0; i < trajectories.size(); ++i) {
        Dataset d = window(trajectories[i], lags, n_x, n_u, n_d, static_cast<int>(i));
        all.skipped_short += d.skipped_short;
        for (auto& s : d.samples) all.samples.push_back(std::move(s));
    }
    return all;
}

namespace {

void fit_channels(const std::vector<const std::vector<std::vector<double>>*>& blocks, std::vector<double>& mean,
                  std::vector<double>& std, std::vector<int>& constant) {
    size_t n = 0, channels = 0;
    for (auto* b : blocks)
        for (auto& row : *b) {
            channels = row.size();
            ++n;
        }
    if (n < 2) throw std::invalid_argument("fit_normalizer: need at least 2 samples per channel");
    mean.assign(channels, 0.0);
    std.assign(channels, 0.0);
    for (auto* b : blocks)
        for (auto& row : *b)
            for (size_t c = 0; c < channels; ++c) mean[c] += row[c];
    for (auto& m : mean) m /= n;
    for (auto* b : blocks)
        for (auto& row : *b)
            for (size_t c = 0; c < channels; ++c) {
                double d = row[c] - mean[c];
                std[c] += d * d;
            }
    for (size_t c = 0; c < channels; ++c) {
        std[c] = std::sqrt(std[c] / n);
        if (std[c] <= 1e-12) {
            std[c] = 1.0;
            constant.push_back(static_cast<int>(c));
        }
    }
}

}  // namespace

Normalizer fit_normalizer(const std::vector<Trajectory>& trajectories) {
    Normalizer norm;
    std::vector<const std::vector<std::vector<double>>*> xs, us, ds;
    for (auto& t : trajectories) {
        xs.push_back(&t.x);
        us.push_back(&t.u);
        ds.push_back(&t.d);
    }
    fit_channels(xs, norm.x_mean, norm.x_std, norm.constant_x);
    fit_channels(us, norm.u_mean, norm.u_std, norm.constant_u);
    fit_channels(ds, norm.d_mean, norm.d_std, norm.constant_d);
    return norm;
}

SplitManifest split_by_trajectory(int k, int n_train, int n_val, int n_test) {
    if (n_train + n_val + n_test != k)
        throw std::invalid_argument("split: train+val+test must exhaust K trajectories");
    SplitManifest m;
    int id = 0;
    for (int i = 0; i < n_train; ++i) m.train.push_back(id++);
    for (int i = 0; i < n_val; ++i) m.val.push_back(id++);
    for (int i = 0; i < n_test; ++i) m.test.push_back(id++);
    return m;
}

void save_split_manifest(const std::string& path, const SplitManifest& manifest) {
    nlohmann::json j;
    j["train"] = manifest.train;
    j["val"] = manifest.val;
    j["test"] = manifest.test;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write split manifest: " + path);
    out << j.dump(2) << "\n";
}

SplitManifest load_split_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open split manifest: " + path);
    nlohmann::json j;
    in >> j;
    SplitManifest m;
    m.train = j.at("train").get<std::vector<int>>();
    m.val = j.at("val").get<std::vector<int>>();
    m.test = j.at("test").get<std::vector<int>>();
    return m;
}

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajectories) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trajectory csv: " + path);

    size_t n_x = 0, n_u = 0, n_d = 0;
    for (auto& t : trajectories)
        if (!t.empty()) {
            n_x = t.x[0].size();
            n_u = t.u[0].size();
            n_d = t.d[0].size();
            break;
        }

    out << "traj_id,t_sec";
    for (size_t i = 0; i < n_x; ++i) out << ",x_" << i;
    for (size_t i = 0; i < n_u; ++i) out << ",u_" << i;
    for (size_t i = 0; i < n_d; ++i) out << ",d_" << i;
    out << "\n";

    char buf[64];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        out << buf;
    };
    for (size_t id = 0; id < trajectories.size(); ++id) {
        const Trajectory& tr = trajectories[id];
        for (size_t t = 0; t < tr.length(); ++t) {
            out << id;
            std::snprintf(buf, sizeof(buf), ",%.17g", tr.t[t]);
            out << buf;
            for (double v : tr.x[t]) emit(v);
            for (double v : tr.u[t]) emit(v);
            for (double v : tr.d[t]) emit(v);
            out << "\n";
        }
    }
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ":1: empty trajectory file");

    std::vector<std::string> header;
    {
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 2 || header[0] != "traj_id" || header[1] != "t_sec")
        throw std::runtime_error(path + ":1: bad trajectory header");
    size_t n_x = 0, n_u = 0, n_d = 0;
    for (size_t i = 2; i < header.size(); ++i) {
        const std::string& h = header[i];
        if (h.rfind("x_", 0) == 0)
            ++n_x;
        else if (h.rfind("u_", 0) == 0)
            ++n_u;
        else if (h.rfind("d_", 0) == 0)
            ++n_d;
        else
            throw std::runtime_error(path + ":1: unexpected column '" + h + "'");
    }
    if (header.size() != 2 + n_x + n_u + n_d || (n_x == 0 && header.size() > 2))
        throw std::runtime_error(path + ":1: malformed column set");

    std::vector<Trajectory> out;
    int lineno = 1;
    long current_id = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> vals;
        try {
            while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unparsable value");
        }
        if (vals.size() != header.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(header.size()) + " columns, got " + std::to_string(vals.size()));
        long id = static_cast<long>(vals[0]);
        if (id != current_id) {
            out.emplace_back();
            current_id = id;
        }
        Trajectory& tr = out.back();
        tr.t.push_back(vals[1]);
        tr.x.emplace_back(vals.begin() + 2, vals.begin() + 2 + n_x);
        tr.u.emplace_back(vals.begin() + 2 + n_x, vals.begin() + 2 + n_x + n_u);
        tr.d.emplace_back(vals.begin() + 2 + n_x + n_u, vals.end());
    }
    return out;
}

}  // namespace hvacmpc
