#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "qtraj/state.hpp"

namespace qtraj {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Gamma_phi such that gamma2() = 1/11.2 us^-1 at gamma_d = 0 with
// gamma1 = 1/15 us^-1.
inline constexpr double kDefaultGammaPhi = 1.0 / 11.2 - 1.0 / 30.0;

// All times in microseconds, rates in us^-1, records in us^(-1/2).
struct PhysicsParams {
    double gamma1 = 1.0 / 15.0;   // relaxation rate
    double gamma_d = 0.0;         // measurement-induced dephasing rate
    double gamma_phi = kDefaultGammaPhi;  // unread pure dephasing rate
    double omega = 0.0;           // Rabi angular frequency, rad/us
    double eta_f = 0.14;          // fluorescence detection efficiency
    double eta_d = 0.34;          // dispersive detection efficiency
    double dt_record = 0.1;       // record bin
    double dt_int = 0.1;          // integrator sub-step, divides dt_record
    double duration = 20.0;
    double w_record_sign = 1.0;   // optional quadrature sign on the w record
    QubitState initial_state = ground_state();

    double gamma2() const { return 0.5 * gamma1 + gamma_phi + gamma_d; }

    int n_bins() const { return static_cast<int>(std::llround(duration / dt_record)); }
    int n_substeps() const { return static_cast<int>(std::llround(dt_record / dt_int)); }
    double dt_sub() const { return dt_record / n_substeps(); }

    // Throws std::invalid_argument on any violated invariant.
    void validate() const;
};

// Named drive/dephasing configurations from the figure captions.
// fig1 ("zeno"): Omega/2pi = (5.2 us)^-1, gamma_d = (0.9 us)^-1.
// fig2a: Omega/2pi = (2 us)^-1, gamma_d = (5 us)^-1.
// fig2b: Omega/2pi = (16 us)^-1, gamma_d = (0.9 us)^-1.
bool is_known_preset(std::string_view name);
void apply_preset(PhysicsParams& p, std::string_view name);

}  // namespace qtraj
