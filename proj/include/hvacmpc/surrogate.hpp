#pragma once

#include <string>
#include <vector>

#include "hvacmpc/dataio.hpp"
#include "hvacmpc/tape.hpp"
#include "hvacmpc/trajectory.hpp"

namespace hvacmpc {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind { Linear, Mlp, Lstm };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct NamedTensor {
    std::string name;
    Tensor value;
};

/// A differentiable plant proxy: one of the three model families plus its
/// normalizer and lag spec. Parameters live in a fixed-order list so the
/// optimizer and the checkpoint format stay generic.
struct SurrogateModel {
    ModelKind kind = ModelKind::Linear;
    LagSpec lags;
    Normalizer norm;
    int n_x = 0, n_u = 0, n_d = 0;
    int width = 64;   // MLP hidden width; LSTM encoder/decoder width
    int hidden = 64;  // LSTM hidden/cell size
    int depth = 4;    // MLP hidden layer count

    std::vector<NamedTensor> params;

    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;
    int window_width() const { return lags.window_width(n_x, n_u, n_d); }
};

SurrogateModel make_linear(const LagSpec& lags, const Normalizer& norm, int n_x, int n_u, int n_d, unsigned seed);
SurrogateModel make_mlp(const LagSpec& lags, const Normalizer& norm, int n_x, int n_u, int n_d, int width,
                        int depth, unsigned seed);
SurrogateModel make_lstm(const LagSpec& lags, const Normalizer& norm, int n_x, int n_u, int n_d, int width,
                         int hidden, unsigned seed);

/// Parameter leaves staged on a tape, aligned with model.params.
struct StagedParams {
    std::vector<VarId> ids;
};

StagedParams stage_params(Tape& tape, const SurrogateModel& model);

/// One-step prediction in normalized space from a (batch x window_width)
/// normalized lag window. Blocks ordered x, u, d, oldest-first.
VarId predict_norm_window(Tape& tape, const SurrogateModel& model, const StagedParams& sp, VarId window);

/// Raw-unit convenience wrapper: windows are oldest-first with m+1 entries per
/// block (the u block includes the current control).
std::vector<double> predict_one(const SurrogateModel& model, const std::vector<std::vector<double>>& x_window,
                                const std::vector<std::vector<double>>& u_window,
                                const std::vector<std::vector<double>>& d_window);

/// Lag context at the start of a rollout, raw units, oldest-first:
/// x holds the last m_x+1 states, u the last m_u controls, d the last m_d
/// disturbances.
struct History {
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> u;
    std::vector<std::vector<double>> d;
};

/// Differentiable multi-step rollout. controls_norm holds H tape variables of
/// normalized 1 x n_u control rows; disturbances holds the H raw forecast
/// vectors. Returns H normalized 1 x n_x state predictions. Predictions are
/// fed back into the sliding state window and gradients flow through them;
/// every family, the LSTM included, re-evaluates from the slid window each
/// step so the disturbance forecast enters throughout the horizon.
std::vector<VarId> rollout_norm(Tape& tape, const SurrogateModel& model, const StagedParams& sp,
                                const History& history, const std::vector<VarId>& controls_norm,
                                const std::vector<std::vector<double>>& disturbances);

/// Raw-unit rollout without gradient bookkeeping exposed.
std::vector<std::vector<double>> rollout(const SurrogateModel& model, const History& history,
                                         const std::vector<std::vector<double>>& controls,
                                         const std::vector<std::vector<double>>& disturbances);

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    unsigned seed = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct TrainResult {
    std::vector<double> train_mse;  // per epoch, normalized space
    std::vector<double> val_mse;
    int best_epoch = -1;
};

/// Minibatch Adam on one-step MSE in normalized space. Restores the
/// best-validation-epoch parameters before returning. Deterministic per seed.
TrainResult train(SurrogateModel& model, const Dataset& train_set, const Dataset& val_set,
                  const TrainConfig& config);

/// Mean normalized MSE of horizon-step rollouts over all admissible start
/// points of the given trajectories.
double evaluate(const SurrogateModel& model, const std::vector<Trajectory>& trajectories, int horizon,
                int* skipped = nullptr);

/// Normalizes one concatenated raw lag window per the model's block layout.
std::vector<double> normalize_window(const SurrogateModel& model, const std::vector<double>& raw_window);

void save_checkpoint(const std::string& path, const SurrogateModel& model);
SurrogateModel load_checkpoint(const std::string& path);
SurrogateModel load_checkpoint(const std::string& path, ModelKind expected_kind);

void save_loss_curve(const std::string& path, const TrainResult& result);

}  // namespace hvacmpc
