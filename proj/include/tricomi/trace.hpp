#pragma once

#include <string>
#include <vector>

#include "exponents.hpp"
#include "grid.hpp"

namespace tricomi {

// Physical-space (u, du/dt) at one time.
struct Snapshot {
    double t = 0;
    Field2D u;
    Field2D ut;
};

struct ScalarRow {
    double t = 0;
    double sup = 0;
    double l2 = 0;
    double h1 = 0;         // homogeneous H^1 seminorm
    double lagrangian = 0; // integral of L
    double q0 = 0;         // integral of Q0
};

enum class Outcome { ReachedHorizon, BlowupDetected, StepCollapse };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::ReachedHorizon: return "ReachedHorizon";
        case Outcome::BlowupDetected: return "BlowupDetected";
        case Outcome::StepCollapse: return "StepCollapse";
    }
    return "?";
}

struct SimTrace {
    Grid grid;
    ModelParams params;
    std::vector<double> times;
    std::vector<Snapshot> snapshots;  // empty, or aligned with times
    std::vector<ScalarRow> scalars;   // aligned with times
    Outcome outcome = Outcome::ReachedHorizon;
    double t_event = 0;      // blowup or collapse time
    double sup_trend = 0;    // relative sup-norm change over the last accepted steps
    long steps = 0, rejects = 0;
};

}  // namespace tricomi
