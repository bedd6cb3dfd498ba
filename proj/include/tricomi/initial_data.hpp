#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "errors.hpp"
#include "grid.hpp"

namespace tricomi {

enum class DataKind { GaussianBump, SmoothCompactBump, AnnularBump };

inline const char* to_string(DataKind k) {
    switch (k) {
        case DataKind::GaussianBump: return "GaussianBump";
        case DataKind::SmoothCompactBump: return "SmoothCompactBump";
        case DataKind::AnnularBump: return "AnnularBump";
    }
    return "?";
}

inline DataKind data_kind_from_string(const std::string& s) {
    if (s == "GaussianBump" || s == "gaussian") return DataKind::GaussianBump;
    if (s == "SmoothCompactBump" || s == "compact") return DataKind::SmoothCompactBump;
    if (s == "AnnularBump" || s == "annular") return DataKind::AnnularBump;
    throw DomainError("unknown data kind '" + s + "'");
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
// unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

// Profiles on the unit ball, zero outside.
inline double data_profile(DataKind k, double r) {
    switch (k) {
        case DataKind::GaussianBump:
            // sigma = 1/8 puts the edge value at e^{-32}
            return r < 1 ? std::exp(-32 * r * r) : 0.0;
        case DataKind::SmoothCompactBump: {
            double r2 = r * r;
            return r2 < 1 ? std::exp(1 - 1 / (1 - r2)) : 0.0;
        }
        case DataKind::AnnularBump: {
            double s = (r - 0.55) / 0.4;
            return std::abs(s) < 1 ? std::exp(1 - 1 / (1 - s * s)) : 0.0;
        }
    }
    return 0.0;
}

struct DataSpec {
    DataKind kind = DataKind::SmoothCompactBump;
    double epsilon = 1;   // reported data norm: max(sup |u0|, sup |u1|)
    double radius = 1;    // support radius R
    double cx = 0, cy = 0;
    std::uint64_t seed = 0;  // 0: canonical centred u0 with u1 = 0
};

struct InitialData {
    Field2D u0, u1;
    double epsilon = 0;
    double radius = 0;  // radius of a centred ball containing the support
};

// Seeded members shift the centre by up to R/4, shrink the profile to stay
// inside B(c, R), and mix in u1 = beta * profile with beta in [-1, 1].
inline InitialData make_initial_data(const Grid& g, const DataSpec& d) {
    g.validate();
    if (!(d.epsilon >= 0)) throw DomainError("make_initial_data: requires epsilon >= 0");
    if (!(d.radius > 0)) throw DomainError("make_initial_data: requires radius > 0");
    double ox = 0, oy = 0, beta = 0, shrink = 1;
    if (d.seed != 0) {
        std::mt19937_64 rng(d.seed);
        double rr = 0.25 * d.radius * std::sqrt(unit_uniform(rng));
        double th = 2 * M_PI * unit_uniform(rng);
        ox = rr * std::cos(th);
        oy = rr * std::sin(th);
        beta = 2 * unit_uniform(rng) - 1;
        shrink = (d.radius - rr) / d.radius * (0.8 + 0.2 * unit_uniform(rng));
    }
    double Reff = d.radius * shrink;
    auto prof = [&](double x, double y) {
        double r = std::hypot(x - d.cx - ox, y - d.cy - oy) / Reff;
        return data_profile(d.kind, r);
    };
    InitialData out;
    out.u0 = Field2D::from_function(g, prof);
    out.u1 = Field2D::from_function(g, [&](double x, double y) { return beta * prof(x, y); });
    double s = std::max(sup_norm(out.u0), sup_norm(out.u1));
    double scale = s > 0 ? d.epsilon / s : 0.0;
    for (auto& v : out.u0.values) v *= scale;
    for (auto& v : out.u1.values) v *= scale;
    out.epsilon = d.epsilon;
    out.radius = std::hypot(d.cx, d.cy) + d.radius;
    return out;
}

}  // namespace tricomi
