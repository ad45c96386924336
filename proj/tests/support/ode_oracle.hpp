#pragma once

// Test-only oracles: fine-step Euler integration of the device ODE and
// cycle-time measurement by threshold crossing. Kept independent of the
// closed forms they are used to check.

#include <cmath>

#include "resdyn/thermal.hpp"

namespace resdyn_test {

/// Forward-Euler integration of d(theta)/dt = -(theta - ambient + m*R*Q)/(C*R).
inline double euler_temperature(double theta0, int mode, double ambient,
                                const resdyn::DeviceParams& d, double dt_total, int n_steps) {
    double h = dt_total / n_steps;
    double theta = theta0;
    double cr = d.C * d.R;
    double rq = d.R * d.cop * d.p;
    for (int i = 0; i < n_steps; ++i)
        theta += -h / cr * (theta - ambient + (mode ? rq : 0.0));
    return theta;
}

/// Time for the temperature to fall from `from` to `to` while ON (fine Euler).
inline double euler_on_time(double from, double to, double ambient, const resdyn::DeviceParams& d,
                            double h_hours = 1e-5) {
    double theta = from, t = 0.0;
    double cr = d.C * d.R;
    double rq = d.R * d.cop * d.p;
    while (theta > to) {
        theta += -h_hours / cr * (theta - ambient + rq);
        t += h_hours;
        if (t > 1000.0) return t;
    }
    return t;
}

/// Time for the temperature to rise from `from` to `to` while OFF (fine Euler).
inline double euler_off_time(double from, double to, double ambient, const resdyn::DeviceParams& d,
                             double h_hours = 1e-5) {
    double theta = from, t = 0.0;
    double cr = d.C * d.R;
    while (theta < to) {
        theta += -h_hours / cr * (theta - ambient);
        t += h_hours;
        if (t > 1000.0) return t;
    }
    return t;
}

}  // namespace resdyn_test
