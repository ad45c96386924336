#pragma once

// Single-device hybrid thermal model of a cooling TCL and the closed-form
// on/off cycle times within a temperature hysteresis band.

#include <cmath>
#include <stdexcept>
#include <string>

#include "resdyn/common.hpp"

namespace resdyn {

/// Which heat-rate term enters the cycle-time logarithms. The thermal ODE
/// always removes heat at cop*p while ON; `p_literal` reproduces the variant
/// with the electrical power in place of the heat rate.
enum class HeatRateMode { cop_times_p, p_literal };

struct DeviceParams {
    double C = 0.0;    ///< thermal capacity, kWh/degC
    double R = 0.0;    ///< thermal resistance, degC/kW
    double p = 0.0;    ///< electrical input power, kW
    double cop = 0.0;  ///< coefficient of performance

    /// Heat extraction rate while ON, kW.
    [[nodiscard]] double heat_rate() const { return cop * p; }

    void validate() const {
        if (!(C > 0.0) || !(R > 0.0) || !(p > 0.0) || !(cop > 0.0))
            throw std::invalid_argument("DeviceParams: C, R, p, cop must all be > 0");
    }
};

struct HysteresisBand {
    double setpoint = 0.0;  ///< degC
    double deadband = 0.0;  ///< degC, full band width

    [[nodiscard]] double lower() const { return setpoint - 0.5 * deadband; }
    [[nodiscard]] double upper() const { return setpoint + 0.5 * deadband; }

    /// Band after raising the setpoint by beta degC.
    [[nodiscard]] HysteresisBand shifted(double beta) const {
        return HysteresisBand{setpoint + beta, deadband};
    }

    void validate() const {
        if (!(deadband > 0.0)) throw std::invalid_argument("HysteresisBand: deadband must be > 0");
    }
};

struct DeviceState {
    double theta = 0.0;  ///< room temperature, degC
    int mode = 0;        ///< 1 = ON (cooling), 0 = OFF
};

struct CycleTimes {
    double t_on = 0.0;   ///< hours
    double t_off = 0.0;  ///< hours
};

/// Heat-rate term used by the cycle-time formulas under the given mode.
inline double cycle_heat_rate(const DeviceParams& d, HeatRateMode mode) {
    return mode == HeatRateMode::cop_times_p ? d.heat_rate() : d.p;
}

/// Advance the room temperature over dt hours with the mode held fixed.
/// Exact solution of the linear ODE: theta -> eq + (theta - eq) * exp(-dt/CR)
/// with eq = ambient - mode*R*Q.
inline DeviceState temperature_step(const DeviceState& s, double ambient,
                                    const DeviceParams& d, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("temperature_step: dt must be > 0");
    double eq = ambient - (s.mode ? d.R * d.heat_rate() : 0.0);
    double theta = eq + (s.theta - eq) * std::exp(-dt / (d.C * d.R));
    return DeviceState{theta, s.mode};
}

/// Thermostat switching rule: ON above the band, OFF below it, memory inside.
inline int mode_update(double theta, int prev_mode, const HysteresisBand& band) {
    if (theta > band.upper()) return 1;
    if (theta < band.lower()) return 0;
    return prev_mode;
}

namespace detail {
inline double checked_log_ratio(double num, double den, const char* what) {
    if (!(num > 0.0) || !(den > 0.0))
        throw std::domain_error(std::string(what) + ": nonpositive log argument (infeasible device/ambient)");
    return std::log(num / den);
}
}  // namespace detail

/// Steady-state ON and OFF durations for a device cycling in `band` against
/// `ambient`. Requires ambient above the band and enough cooling capacity to
/// reach the lower band edge.
inline CycleTimes steady_cycle_times(const DeviceParams& d, const HysteresisBand& band,
                                     double ambient, HeatRateMode mode = HeatRateMode::cop_times_p) {
    double rq = d.R * cycle_heat_rate(d, mode);
    double cr = d.C * d.R;
    double t_on = cr * detail::checked_log_ratio(rq + band.upper() - ambient,
                                                 rq + band.lower() - ambient, "steady_cycle_times[on]");
    double t_off = cr * detail::checked_log_ratio(ambient - band.lower(),
                                                  ambient - band.upper(), "steady_cycle_times[off]");
    return CycleTimes{t_on, t_off};
}

/// Steady cycle times after raising the setpoint by beta.
inline CycleTimes shifted_cycle_times(const DeviceParams& d, const HysteresisBand& band,
                                      double ambient, double beta,
                                      HeatRateMode mode = HeatRateMode::cop_times_p) {
    if (!(beta > 0.0)) throw std::invalid_argument("shifted_cycle_times: beta must be > 0");
    return steady_cycle_times(d, band.shifted(beta), ambient, mode);
}

/// Time for an OFF device to drift from the old upper band edge to the new
/// one after the setpoint is raised by beta.
inline double migration_delay(const DeviceParams& d, const HysteresisBand& band,
                              double ambient, double beta,
                              HeatRateMode /*mode*/ = HeatRateMode::cop_times_p) {
    if (!(beta > 0.0)) throw std::invalid_argument("migration_delay: beta must be > 0");
    double cr = d.C * d.R;
    return cr * detail::checked_log_ratio(ambient - band.upper(),
                                          ambient - band.upper() - beta, "migration_delay");
}

/// True when the device can cycle in `band` at `ambient` (band below ambient,
/// lower edge reachable while cooling).
inline bool device_feasible(const DeviceParams& d, const HysteresisBand& band, double ambient,
                            HeatRateMode mode = HeatRateMode::cop_times_p) {
    double rq = d.R * cycle_heat_rate(d, mode);
    return ambient > band.upper() && rq > ambient - band.lower();
}

}  // namespace resdyn
