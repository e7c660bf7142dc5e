#include "qtraj/params.hpp"

#include <cmath>
#include <stdexcept>

namespace qtraj {

namespace {

struct Preset {
    const char* name;
    double rabi_per_us;   // Omega / 2pi
    double gamma_d;
};

// Drive/dephasing pairs from the figure captions; gamma1, gamma_phi and the
// efficiencies keep their defaults.
constexpr Preset kPresets[] = {
    {"fig1", 1.0 / 5.2, 1.0 / 0.9},
    {"zeno", 1.0 / 5.2, 1.0 / 0.9},
    {"fig2a", 0.5, 0.2},
    {"fig2b", 1.0 / 16.0, 1.0 / 0.9},
};

const Preset* find_preset(std::string_view name) {
    for (const auto& p : kPresets) {
        if (name == p.name) return &p;
    }
    return nullptr;
}

}  // namespace

bool is_known_preset(std::string_view name) { return find_preset(name) != nullptr; }

void apply_preset(PhysicsParams& p, std::string_view name) {
    const Preset* preset = find_preset(name);
    if (preset == nullptr) throw std::invalid_argument("unknown preset: " + std::string(name));
    p.omega = kTwoPi * preset->rabi_per_us;
    p.gamma_d = preset->gamma_d;
}

void PhysicsParams::validate() const {
    if (!(gamma1 >= 0.0) || !(gamma_d >= 0.0) || !(gamma_phi >= 0.0))
        throw std::invalid_argument("rates must be non-negative");
    if (!(eta_f >= 0.0 && eta_f <= 1.0))
        throw std::invalid_argument("eta_f outside [0, 1]");
    if (!(eta_d >= 0.0 && eta_d <= 1.0))
        throw std::invalid_argument("eta_d outside [0, 1]");
    if (!(dt_int > 0.0) || !(dt_record >= dt_int))
        throw std::invalid_argument("need 0 < dt_int <= dt_record");
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
    if (w_record_sign != 1.0 && w_record_sign != -1.0)
        throw std::invalid_argument("w_record_sign must be +1 or -1");

    const double bins = duration / dt_record;
    if (std::abs(bins - std::llround(bins)) > 1e-9)
        throw std::invalid_argument("dt_record must divide duration");
    const double subs = dt_record / dt_int;
    if (std::abs(subs - std::llround(subs)) > 1e-9)
        throw std::invalid_argument("dt_int must divide dt_record");

    if (!is_finite(initial_state))
        throw std::invalid_argument("initial state is not finite");
    const double tr = initial_state.rho_gg + initial_state.rho_ee;
    if (std::abs(tr - 1.0) > 1e-9)
        throw std::invalid_argument("initial state trace must be 1");
    if (bloch_of(initial_state).norm2() > 1.0 + 1e-9)
        throw std::invalid_argument("initial state outside the Bloch ball");
}

}  // namespace qtraj
