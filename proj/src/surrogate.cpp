#include "hvacmpc/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "hvacmpc/adam.hpp"

namespace hvacmpc {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Linear: return "linear";
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Lstm: return "lstm";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "linear") return ModelKind::Linear;
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "lstm") return ModelKind::Lstm;
    throw std::invalid_argument("unknown model kind: " + s);
}

Tensor& SurrogateModel::param(const std::string& name) {
    for (auto& p : params)
        if (p.name == name) return p.value;
    throw std::invalid_argument("no parameter named " + name);
}

const Tensor& SurrogateModel::param(const std::string& name) const {
    return const_cast<SurrogateModel*>(this)->param(name);
}

namespace {

// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] init.
Tensor init_matrix(int rows, int cols, int fan_in, std::mt19937_64& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(rows, cols);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    return t;
}

int lstm_encoder_width(const SurrogateModel& m) {
    return (m.lags.m_x + 1) * m.n_x + m.lags.m_u * m.n_u + (m.lags.m_d + 1) * m.n_d;
}

}  // namespace

SurrogateModel make_linear(const LagSpec& lags, const Normalizer& norm, int n_x, int n_u, int n_d, unsigned seed) {
    SurrogateModel m;
    m.kind = ModelKind::Linear;
    m.lags = lags;
    m.norm = norm;
    m.n_x = n_x;
    m.n_u = n_u;
    m.n_d = n_d;
    std::mt19937_64 rng(seed);
    int fan_in = m.window_width();
    for (int k = 0; k <= lags.m_x; ++k)
        m.params.push_back({"A_" + std::to_string(k), init_matrix(n_x, n_x, fan_in, rng)});
    for (int k = 0; k <= lags.m_u; ++k)
        m.params.push_back({"B_" + std::to_string(k), init_matrix(n_u, n_x, fan_in, rng)});
    for (int k = 0; k <= lags.m_d; ++k)
        m.params.push_back({"C_" + std::to_string(k), init_matrix(n_d, n_x, fan_in, rng)});
    return m;
}

SurrogateModel make_mlp(const LagSpec& lags, const Normalizer& norm, int n_x, int n_u, int n_d, int width,
                        int depth, unsigned seed) {
    if (width < 1 || depth < 1) throw std::invalid_argument("make_mlp: width and depth must be >= 1");
    SurrogateModel m;
    m.kind = ModelKind::Mlp;
    m.lags = lags;
    m.norm = norm;
    m.n_x = n_x;
    m.n_u = n_u;
    m.n_d = n_d;
    m.width = width;
    m.depth = depth;
    std::mt19937_64 rng(seed);
    int in = m.window_width();
    for (int k = 0; k < depth; ++k) {
        m.params.push_back({"W_" + std::to_string(k), init_matrix(in, width, in, rng)});
        m.params.push_back({"b_" + std::to_string(k), init_matrix(1, width, in, rng)});
        in = width;
    }
    m.params.push_back({"W_" + std::to_string(depth), init_matrix(in, n_x, in, rng)});
    m.params.push_back({"b_" + std::to_string(depth), init_matrix(1, n_x, in, rng)});
    return m;
}

SurrogateModel make_lstm(const LagSpec& lags, const Normalizer& norm, int n_x, int n_u, int n_d, int width,
                         int hidden, unsigned seed) {
    if (width < 1 || hidden < 1) throw std::invalid_argument("make_lstm: width and hidden must be >= 1");
    SurrogateModel m;
    m.kind = ModelKind::Lstm;
    m.lags = lags;
    m.norm = norm;
    m.n_x = n_x;
    m.n_u = n_u;
    m.n_d = n_d;
    m.width = width;
    m.hidden = hidden;
    std::mt19937_64 rng(seed);
    int enc_in = lstm_encoder_width(m);
    m.params.push_back({"enc_W0", init_matrix(enc_in, width, enc_in, rng)});
    m.params.push_back({"enc_b0", init_matrix(1, width, enc_in, rng)});
    m.params.push_back({"enc_W1", init_matrix(width, 2 * hidden, width, rng)});
    m.params.push_back({"enc_b1", init_matrix(1, 2 * hidden, width, rng)});
    for (const char* g : {"i", "f", "g", "o"}) {
        m.params.push_back({std::string("W_i") + g, init_matrix(n_u, hidden, n_u, rng)});
        m.params.push_back({std::string("b_i") + g, init_matrix(1, hidden, n_u, rng)});
        m.params.push_back({std::string("W_h") + g, init_matrix(hidden, hidden, hidden, rng)});
        m.params.push_back({std::string("b_h") + g, init_matrix(1, hidden, hidden, rng)});
    }
    m.params.push_back({"dec_W0", init_matrix(hidden, width, hidden, rng)});
    m.params.push_back({"dec_b0", init_matrix(1, width, hidden, rng)});
    m.params.push_back({"dec_W1", init_matrix(width, n_x, width, rng)});
    m.params.push_back({"dec_b1", init_matrix(1, n_x, width, rng)});
    return m;
}

StagedParams stage_params(Tape& tape, const SurrogateModel& model) {
    StagedParams sp;
    sp.ids.reserve(model.params.size());
    for (const auto& p : model.params) sp.ids.push_back(tape.leaf(p.value));
    return sp;
}

namespace {

struct ParamLookup {
    const SurrogateModel& model;
    const StagedParams& sp;
    VarId operator()(const std::string& name) const {
        for (size_t i = 0; i < model.params.size(); ++i)
            if (model.params[i].name == name) return sp.ids[i];
        throw std::invalid_argument("no staged parameter named " + name);
    }
};

VarId affine(Tape& tape, VarId x, VarId w, VarId b) { return tape.add(tape.matmul(x, w), b); }

VarId mlp2(Tape& tape, const ParamLookup& P, const std::string& prefix, VarId in) {
    VarId h = tape.tanh(affine(tape, in, P(prefix + "_W0"), P(prefix + "_b0")));
    return affine(tape, h, P(prefix + "_W1"), P(prefix + "_b1"));
}

struct LstmGateStep {
    VarId h, c;
};

LstmGateStep lstm_cell(Tape& tape, const ParamLookup& P, VarId u_t, VarId h, VarId c) {
    VarId i = tape.sigmoid(tape.add(affine(tape, u_t, P("W_ii"), P("b_ii")), affine(tape, h, P("W_hi"), P("b_hi"))));
    VarId f = tape.sigmoid(tape.add(affine(tape, u_t, P("W_if"), P("b_if")), affine(tape, h, P("W_hf"), P("b_hf"))));
    VarId g = tape.tanh(tape.add(affine(tape, u_t, P("W_ig"), P("b_ig")), affine(tape, h, P("W_hg"), P("b_hg"))));
    VarId o = tape.sigmoid(tape.add(affine(tape, u_t, P("W_io"), P("b_io")), affine(tape, h, P("W_ho"), P("b_ho"))));
    VarId c_next = tape.add(tape.hadamard(f, c), tape.hadamard(i, g));
    VarId h_next = tape.hadamard(o, tape.tanh(c_next));
    return {h_next, c_next};
}

VarId linear_forward(Tape& tape, const SurrogateModel& m, const ParamLookup& P, VarId window) {
    VarId acc = -1;
    int off = 0;
    auto block = [&](const char* stem, int lag, int n) {
        for (int j = 0; j <= lag; ++j) {
            // Window entries are oldest-first; matrix index k counts back from
            // the current step, so entry j pairs with k = lag - j.
            VarId part = tape.slice_cols(window, off + j * n, off + (j + 1) * n);
            VarId term = tape.matmul(part, P(std::string(stem) + "_" + std::to_string(lag - j)));
            acc = acc < 0 ? term : tape.add(acc, term);
        }
        off += (lag + 1) * n;
    };
    block("A", m.lags.m_x, m.n_x);
    block("B", m.lags.m_u, m.n_u);
    block("C", m.lags.m_d, m.n_d);
    return acc;
}

VarId mlp_forward(Tape& tape, const SurrogateModel& m, const ParamLookup& P, VarId window) {
    VarId h = window;
    for (int k = 0; k < m.depth; ++k)
        h = tape.tanh(affine(tape, h, P("W_" + std::to_string(k)), P("b_" + std::to_string(k))));
    return affine(tape, h, P("W_" + std::to_string(m.depth)), P("b_" + std::to_string(m.depth)));
}

// Encoder input per the lag layout: full x and d windows, u window without
// the current control (the current control enters only through the gates).
VarId lstm_encoder_input(Tape& tape, const SurrogateModel& m, VarId window) {
    int xw = (m.lags.m_x + 1) * m.n_x;
    int uw = (m.lags.m_u + 1) * m.n_u;
    std::vector<VarId> parts;
    parts.push_back(tape.slice_cols(window, 0, xw));
    if (m.lags.m_u > 0) parts.push_back(tape.slice_cols(window, xw, xw + m.lags.m_u * m.n_u));
    parts.push_back(tape.slice_cols(window, xw + uw, xw + uw + (m.lags.m_d + 1) * m.n_d));
    return parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
}

VarId lstm_forward(Tape& tape, const SurrogateModel& m, const ParamLookup& P, VarId window) {
    int xw = (m.lags.m_x + 1) * m.n_x;
    int uw = (m.lags.m_u + 1) * m.n_u;
    VarId u_t = tape.slice_cols(window, xw + uw - m.n_u, xw + uw);
    VarId hc = mlp2(tape, P, "enc", lstm_encoder_input(tape, m, window));
    VarId h = tape.slice_cols(hc, 0, m.hidden);
    VarId c = tape.slice_cols(hc, m.hidden, 2 * m.hidden);
    auto next = lstm_cell(tape, P, u_t, h, c);
    return mlp2(tape, P, "dec", next.h);
}

}  // namespace

VarId predict_norm_window(Tape& tape, const SurrogateModel& model, const StagedParams& sp, VarId window) {
    if (tape.value(window).cols() != model.window_width())
        throw ShapeError("predict: window width " + tape.value(window).shape_str() + " != model width " +
                         std::to_string(model.window_width()));
    ParamLookup P{model, sp};
    switch (model.kind) {
        case ModelKind::Linear: return linear_forward(tape, model, P, window);
        case ModelKind::Mlp: return mlp_forward(tape, model, P, window);
        case ModelKind::Lstm: return lstm_forward(tape, model, P, window);
    }
    throw std::logic_error("unreachable");
}

std::vector<double> normalize_window(const SurrogateModel& model, const std::vector<double>& raw_window) {
    if (static_cast<int>(raw_window.size()) != model.window_width())
        throw ShapeError("normalize_window: raw window has " + std::to_string(raw_window.size()) +
                         " entries, expected " + std::to_string(model.window_width()));
    std::vector<double> out;
    out.reserve(raw_window.size());
    size_t i = 0;
    auto block = [&](int lag, const std::vector<double>& mean, const std::vector<double>& std) {
        for (int j = 0; j <= lag; ++j)
            for (size_t c = 0; c < mean.size(); ++c, ++i) out.push_back((raw_window[i] - mean[c]) / std[c]);
    };
    block(model.lags.m_x, model.norm.x_mean, model.norm.x_std);
    block(model.lags.m_u, model.norm.u_mean, model.norm.u_std);
    block(model.lags.m_d, model.norm.d_mean, model.norm.d_std);
    return out;
}

std::vector<double> predict_one(const SurrogateModel& model, const std::vector<std::vector<double>>& x_window,
                                const std::vector<std::vector<double>>& u_window,
                                const std::vector<std::vector<double>>& d_window) {
    if (static_cast<int>(x_window.size()) != model.lags.m_x + 1 ||
        static_cast<int>(u_window.size()) != model.lags.m_u + 1 ||
        static_cast<int>(d_window.size()) != model.lags.m_d + 1)
        throw ShapeError("predict_one: window lengths do not match the lag spec");
    std::vector<double> raw;
    for (auto& v : x_window) raw.insert(raw.end(), v.begin(), v.end());
    for (auto& v : u_window) raw.insert(raw.end(), v.begin(), v.end());
    for (auto& v : d_window) raw.insert(raw.end(), v.begin(), v.end());

    Tape tape;
    StagedParams sp = stage_params(tape, model);
    VarId win = tape.leaf(Tensor::row(normalize_window(model, raw)));
    VarId out = predict_norm_window(tape, model, sp, win);
    return model.norm.invert_x(tape.value(out).data());
}

std::vector<VarId> rollout_norm(Tape& tape, const SurrogateModel& model, const StagedParams& sp,
                                const History& history, const std::vector<VarId>& controls_norm,
                                const std::vector<std::vector<double>>& disturbances) {
    const size_t horizon = controls_norm.size();
    if (horizon == 0) throw std::invalid_argument("rollout: horizon must be >= 1");
    if (disturbances.size() != horizon)
        throw std::invalid_argument("rollout: controls and disturbances must have equal length");
    if (static_cast<int>(history.x.size()) != model.lags.m_x + 1 ||
        static_cast<int>(history.u.size()) != model.lags.m_u ||
        static_cast<int>(history.d.size()) != model.lags.m_d)
        throw ShapeError("rollout: history does not cover the lag spec");

    auto leaf_norm = [&](const std::vector<double>& raw, auto&& applier) {
        return tape.leaf(Tensor::row(applier(raw)));
    };

    std::vector<VarId> x_win, u_hist, d_hist;
    for (auto& v : history.x) x_win.push_back(leaf_norm(v, [&](auto& r) { return model.norm.apply_x(r); }));
    for (auto& v : history.u) u_hist.push_back(leaf_norm(v, [&](auto& r) { return model.norm.apply_u(r); }));
    for (auto& v : history.d) d_hist.push_back(leaf_norm(v, [&](auto& r) { return model.norm.apply_d(r); }));

    std::vector<VarId> outputs;
    outputs.reserve(horizon);

    for (size_t k = 0; k < horizon; ++k) {
        VarId d_cur = leaf_norm(disturbances[k], [&](auto& r) { return model.norm.apply_d(r); });
        std::vector<VarId> parts = x_win;
        parts.insert(parts.end(), u_hist.begin(), u_hist.end());
        parts.push_back(controls_norm[k]);
        parts.insert(parts.end(), d_hist.begin(), d_hist.end());
        parts.push_back(d_cur);
        VarId win = tape.concat_cols(parts);
        VarId pred = predict_norm_window(tape, model, sp, win);
        outputs.push_back(pred);

        x_win.erase(x_win.begin());
        x_win.push_back(pred);
        if (model.lags.m_u > 0) {
            u_hist.erase(u_hist.begin());
            u_hist.push_back(controls_norm[k]);
        }
        if (model.lags.m_d > 0) {
            d_hist.erase(d_hist.begin());
            d_hist.push_back(d_cur);
        }
    }
    return outputs;
}

std::vector<std::vector<double>> rollout(const SurrogateModel& model, const History& history,
                                         const std::vector<std::vector<double>>& controls,
                                         const std::vector<std::vector<double>>& disturbances) {
    Tape tape;
    StagedParams sp = stage_params(tape, model);
    std::vector<VarId> u_vars;
    for (auto& u : controls) u_vars.push_back(tape.leaf(Tensor::row(model.norm.apply_u(u))));
    auto outs = rollout_norm(tape, model, sp, history, u_vars, disturbances);
    std::vector<std::vector<double>> result;
    for (VarId v : outs) result.push_back(model.norm.invert_x(tape.value(v).data()));
    return result;
}

namespace {

// Train/val samples packed into dense normalized matrices.
struct Packed {
    Tensor inputs;   // N x window_width
    Tensor targets;  // N x n_x
    int n = 0;
};

Packed pack(const SurrogateModel& model, const Dataset& ds) {
    Packed p;
    p.n = static_cast<int>(ds.samples.size());
    p.inputs = Tensor(p.n, model.window_width());
    p.targets = Tensor(p.n, model.n_x);
    for (int i = 0; i < p.n; ++i) {
        auto in = normalize_window(model, ds.samples[i].input);
        auto tg = model.norm.apply_x(ds.samples[i].target);
        for (int c = 0; c < model.window_width(); ++c) p.inputs(i, c) = in[c];
        for (int c = 0; c < model.n_x; ++c) p.targets(i, c) = tg[c];
    }
    return p;
}

Tensor gather_rows(const Tensor& src, const std::vector<int>& idx, int begin, int end) {
    Tensor out(end - begin, src.cols());
    for (int r = begin; r < end; ++r)
        for (int c = 0; c < src.cols(); ++c) out(r - begin, c) = src(idx[r], c);
    return out;
}

double eval_mse(const SurrogateModel& model, const Packed& p) {
    if (p.n == 0) return 0.0;
    double total = 0.0;
    const int chunk = 4096;
    for (int start = 0; start < p.n; start += chunk) {
        int stop = std::min(p.n, start + chunk);
        Tensor in(stop - start, p.inputs.cols());
        Tensor tg(stop - start, p.targets.cols());
        for (int r = start; r < stop; ++r) {
            for (int c = 0; c < in.cols(); ++c) in(r - start, c) = p.inputs(r, c);
            for (int c = 0; c < tg.cols(); ++c) tg(r - start, c) = p.targets(r, c);
        }
        Tape tape;
        StagedParams sp = stage_params(tape, model);
        VarId loss = tape.mse(predict_norm_window(tape, model, sp, tape.leaf(std::move(in))), tape.leaf(std::move(tg)));
        total += tape.value(loss).item() * (stop - start);
    }
    return total / p.n;
}

}  // namespace

TrainResult train(SurrogateModel& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config) {
    if (train_set.samples.empty()) throw TrainingError("train: empty training set");
    if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (static_cast<int>(train_set.samples[0].input.size()) != model.window_width())
        throw ShapeError("train: dataset window width does not match model");

    Packed tr = pack(model, train_set);
    Packed va = pack(model, val_set);

    std::mt19937_64 rng(config.seed);
    Adam adam(config.learning_rate, config.beta1, config.beta2, config.eps);

    std::vector<int> order(tr.n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<NamedTensor> best_params = model.params;

    const int bs = std::max(1, config.batch_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (int start = 0; start < tr.n; start += bs) {
            int stop = std::min(tr.n, start + bs);
            Tape tape;
            StagedParams sp = stage_params(tape, model);
            VarId in = tape.leaf(gather_rows(tr.inputs, order, start, stop));
            VarId tg = tape.leaf(gather_rows(tr.targets, order, start, stop));
            VarId loss = tape.mse(predict_norm_window(tape, model, sp, in), tg);
            double lv = tape.value(loss).item();
            if (!std::isfinite(lv))
                throw TrainingError("training diverged (loss not finite) at epoch " + std::to_string(epoch));
            epoch_loss += lv * (stop - start);
            tape.backward(loss);

            std::vector<Tensor*> ps;
            std::vector<const Tensor*> gs;
            for (size_t i = 0; i < model.params.size(); ++i) {
                ps.push_back(&model.params[i].value);
                gs.push_back(&tape.grad(sp.ids[i]));
            }
            adam.step(ps, gs);
        }
        result.train_mse.push_back(epoch_loss / tr.n);

        double val = va.n > 0 ? eval_mse(model, va) : result.train_mse.back();
        result.val_mse.push_back(val);
        if (val < best_val) {
            best_val = val;
            best_params = model.params;
            result.best_epoch = epoch;
        }
    }
    model.params = best_params;
    return result;
}

double evaluate(const SurrogateModel& model, const std::vector<Trajectory>& trajectories, int horizon,
                int* skipped) {
    if (horizon < 1) throw std::invalid_argument("evaluate: horizon must be >= 1");
    if (skipped) *skipped = 0;
    double total = 0.0;
    long count = 0;
    int lag = model.lags.max_lag();
    for (const auto& traj : trajectories) {
        int len = static_cast<int>(traj.length());
        if (len < lag + horizon + 1) {
            if (skipped) ++(*skipped);
            continue;
        }
        for (int t0 = lag; t0 + horizon <= len - 1; ++t0) {
            History h;
            for (int k = t0 - model.lags.m_x; k <= t0; ++k) h.x.push_back(traj.x[k]);
            for (int k = t0 - model.lags.m_u; k < t0; ++k) h.u.push_back(traj.u[k]);
            for (int k = t0 - model.lags.m_d; k < t0; ++k) h.d.push_back(traj.d[k]);
            std::vector<std::vector<double>> controls(traj.u.begin() + t0, traj.u.begin() + t0 + horizon);
            std::vector<std::vector<double>> dists(traj.d.begin() + t0, traj.d.begin() + t0 + horizon);
            auto preds = rollout(model, h, controls, dists);
            for (int k = 0; k < horizon; ++k) {
                auto pn = model.norm.apply_x(preds[k]);
                auto tn = model.norm.apply_x(traj.x[t0 + 1 + k]);
                for (size_t c = 0; c < pn.size(); ++c) {
                    double diff = pn[c] - tn[c];
                    total += diff * diff;
                    ++count;
                }
            }
        }
    }
    return count > 0 ? total / count : 0.0;
}

void save_checkpoint(const std::string& path, const SurrogateModel& model) {
    nlohmann::json j;
    j["kind"] = to_string(model.kind);
    j["lags"] = {{"m_x", model.lags.m_x}, {"m_u", model.lags.m_u}, {"m_d", model.lags.m_d}};
    j["channels"] = {{"n_x", model.n_x}, {"n_u", model.n_u}, {"n_d", model.n_d}};
    j["width"] = model.width;
    j["hidden"] = model.hidden;
    j["depth"] = model.depth;
    j["normalizer"] = {{"x_mean", model.norm.x_mean}, {"x_std", model.norm.x_std},
                       {"u_mean", model.norm.u_mean}, {"u_std", model.norm.u_std},
                       {"d_mean", model.norm.d_mean}, {"d_std", model.norm.d_std},
                       {"constant_x", model.norm.constant_x}, {"constant_u", model.norm.constant_u},
                       {"constant_d", model.norm.constant_d}};
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : model.params) {
        params.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()},
                          {"data", p.value.data()}});
    }
    j["params"] = params;
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write checkpoint: " + path);
    out << j.dump() << "\n";
}

SurrogateModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw CheckpointError("malformed checkpoint " + path + ": " + e.what());
    }
    SurrogateModel m;
    try {
        m.kind = model_kind_from_string(j.at("kind").get<std::string>());
        m.lags = {j.at("lags").at("m_x").get<int>(), j.at("lags").at("m_u").get<int>(),
                  j.at("lags").at("m_d").get<int>()};
        m.n_x = j.at("channels").at("n_x").get<int>();
        m.n_u = j.at("channels").at("n_u").get<int>();
        m.n_d = j.at("channels").at("n_d").get<int>();
        m.width = j.at("width").get<int>();
        m.hidden = j.at("hidden").get<int>();
        m.depth = j.at("depth").get<int>();
        const auto& n = j.at("normalizer");
        m.norm.x_mean = n.at("x_mean").get<std::vector<double>>();
        m.norm.x_std = n.at("x_std").get<std::vector<double>>();
        m.norm.u_mean = n.at("u_mean").get<std::vector<double>>();
        m.norm.u_std = n.at("u_std").get<std::vector<double>>();
        m.norm.d_mean = n.at("d_mean").get<std::vector<double>>();
        m.norm.d_std = n.at("d_std").get<std::vector<double>>();
        m.norm.constant_x = n.at("constant_x").get<std::vector<int>>();
        m.norm.constant_u = n.at("constant_u").get<std::vector<int>>();
        m.norm.constant_d = n.at("constant_d").get<std::vector<int>>();
        for (const auto& p : j.at("params")) {
            NamedTensor nt;
            nt.name = p.at("name").get<std::string>();
            int rows = p.at("rows").get<int>();
            int cols = p.at("cols").get<int>();
            auto data = p.at("data").get<std::vector<double>>();
            if (static_cast<int64_t>(data.size()) != static_cast<int64_t>(rows) * cols)
                throw CheckpointError("checkpoint " + path + ": shape mismatch for " + nt.name);
            nt.value = Tensor(rows, cols, std::move(data));
            m.params.push_back(std::move(nt));
        }
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError("malformed checkpoint " + path + ": " + e.what());
    }

    // Shape sanity against a freshly constructed model of the same kind.
    SurrogateModel ref;
    switch (m.kind) {
        case ModelKind::Linear: ref = make_linear(m.lags, m.norm, m.n_x, m.n_u, m.n_d, 0); break;
        case ModelKind::Mlp: ref = make_mlp(m.lags, m.norm, m.n_x, m.n_u, m.n_d, m.width, m.depth, 0); break;
        case ModelKind::Lstm: ref = make_lstm(m.lags, m.norm, m.n_x, m.n_u, m.n_d, m.width, m.hidden, 0); break;
    }
    if (ref.params.size() != m.params.size())
        throw CheckpointError("checkpoint " + path + ": unexpected parameter count for kind " + to_string(m.kind));
    for (size_t i = 0; i < ref.params.size(); ++i)
        if (ref.params[i].name != m.params[i].name || !ref.params[i].value.same_shape(m.params[i].value))
            throw CheckpointError("checkpoint " + path + ": parameter " + m.params[i].name +
                                  " has unexpected name or shape");
    return m;
}

SurrogateModel load_checkpoint(const std::string& path, ModelKind expected_kind) {
    SurrogateModel m = load_checkpoint(path);
    if (m.kind != expected_kind)
        throw CheckpointError("checkpoint " + path + " holds a " + to_string(m.kind) + " model, expected " +
                              to_string(expected_kind));
    return m;
}

void save_loss_curve(const std::string& path, const TrainResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write loss curve: " + path);
    out << "epoch,train_mse,val_mse\n";
    char buf[96];
    for (size_t e = 0; e < result.train_mse.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e, result.train_mse[e], result.val_mse[e]);
        out << buf;
    }
}

}  // namespace hvacmpc
