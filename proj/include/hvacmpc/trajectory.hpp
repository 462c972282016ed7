#pragma once

#include <cstddef>
#include <vector>

namespace hvacmpc {

/// Time-aligned (x, u, d) record of one episode. Row t holds the state
/// observed at time t, the control applied at t, and the disturbance at t,
/// so u[t] caused the transition to x[t+1].
struct Trajectory {
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> u;
    std::vector<std::vector<double>> d;
    std::vector<double> t;  // seconds

    size_t length() const { return x.size(); }
    bool empty() const { return x.empty(); }
};

}  // namespace hvacmpc
