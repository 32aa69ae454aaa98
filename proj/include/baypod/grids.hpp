#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace baypod {

// Uniform spatial grid on [0, L].
struct SpatialGrid {
    int n_x = 0;
    double length = 1.0;
    std::vector<double> positions;

    static SpatialGrid uniform(int n_x, double length = 1.0) {
        if (n_x < 2) throw std::invalid_argument("SpatialGrid: n_x must be >= 2");
        if (!(length > 0.0)) throw std::invalid_argument("SpatialGrid: length must be > 0");
        SpatialGrid g;
        g.n_x = n_x;
        g.length = length;
        g.positions.resize(n_x);
        const double dx = length / (n_x - 1);
        for (int j = 0; j < n_x; ++j) g.positions[j] = j * dx;
        g.positions.back() = length;
        return g;
    }

    double spacing() const { return length / (n_x - 1); }
};

// Uniform time grid on [0, 2*pi], endpoints inclusive.
struct TimeGrid {
    int n_t = 0;
    std::vector<double> times;

    static TimeGrid uniform(int n_t = 628) {
        if (n_t < 2) throw std::invalid_argument("TimeGrid: n_t must be >= 2");
        TimeGrid g;
        g.n_t = n_t;
        g.times.resize(n_t);
        const double horizon = 2.0 * std::numbers::pi;
        for (int i = 0; i < n_t; ++i) g.times[i] = horizon * i / (n_t - 1);
        g.times.back() = horizon;
        return g;
    }

    double horizon() const { return times.back(); }
};

struct BoundaryConditions {
    std::function<double(double)> left;     // f(x=0, t)
    std::function<double(double)> right;    // f(x=L, t)
    std::function<double(double)> initial;  // f(x, t=0)

    static BoundaryConditions benchmark_default() {
        BoundaryConditions bc;
        bc.left = [](double t) { return 3.0 * std::sin(2.0 * t); };
        bc.right = [](double) { return 3.0; };
        bc.initial = [](double) { return 0.0; };
        return bc;
    }

    static BoundaryConditions constant(double left_val, double right_val, double init_val) {
        BoundaryConditions bc;
        bc.left = [left_val](double) { return left_val; };
        bc.right = [right_val](double) { return right_val; };
        bc.initial = [init_val](double) { return init_val; };
        return bc;
    }
};

// One spatial field at a fixed (kappa, time_index).
struct Snapshot {
    double kappa = 0.0;
    int time_index = 0;
    std::vector<double> field;
    bool homogenized = false;
};

}  // namespace baypod
