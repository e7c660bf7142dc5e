#pragma once

#include <cmath>
#include <stdexcept>

#include "qtraj/mat2.hpp"

namespace qtraj {

struct Bloch {
    double x = 0.0, y = 0.0, z = 0.0;

    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
};

enum class Axis { x, y, z };

inline double component(const Bloch& b, Axis a) {
    switch (a) {
        case Axis::x: return b.x;
        case Axis::y: return b.y;
        default: return b.z;
    }
}

// Qubit density matrix stored as populations plus the single independent
// off-diagonal element rho_ge = <g|rho|e>; rho_eg is its conjugate.
struct QubitState {
    double rho_gg = 1.0;
    double rho_ee = 0.0;
    cplx rho_ge = 0.0;
};

inline QubitState ground_state() { return {1.0, 0.0, 0.0}; }
inline QubitState excited_state() { return {0.0, 1.0, 0.0}; }
inline QubitState maximally_mixed() { return {0.5, 0.5, 0.0}; }

// x = Tr(sigma_x rho) = 2 Re rho_ge, y = 2 Im rho_ge, z = rho_ee - rho_gg.
inline Bloch bloch_of(const QubitState& s) {
    return {2.0 * s.rho_ge.real(), 2.0 * s.rho_ge.imag(), s.rho_ee - s.rho_gg};
}

inline QubitState density_of(const Bloch& b) {
    return {0.5 * (1.0 - b.z), 0.5 * (1.0 + b.z), cplx(0.5 * b.x, 0.5 * b.y)};
}

inline QubitState density_of(double x, double y, double z) {
    return density_of(Bloch{x, y, z});
}

// Tr(rho^2); equals (1 + x^2 + y^2 + z^2)/2 for unit-trace states.
inline double purity(const QubitState& s) {
    return s.rho_gg * s.rho_gg + s.rho_ee * s.rho_ee + 2.0 * std::norm(s.rho_ge);
}

inline Mat2 to_matrix(const QubitState& s) {
    return {cplx(s.rho_gg, 0.0), s.rho_ge, std::conj(s.rho_ge), cplx(s.rho_ee, 0.0)};
}

// Hermitizes: populations from real diagonals, coherence averaged.
inline QubitState state_from_matrix(const Mat2& m) {
    return {m.m00.real(), m.m11.real(), 0.5 * (m.m01 + std::conj(m.m10))};
}

// Renormalizes the trace exactly to 1, then projects the Bloch vector back
// onto the unit ball if the step pushed it outside.
inline QubitState normalize_state(QubitState s) {
    const double tr = s.rho_gg + s.rho_ee;
    if (!(tr > 0.0)) throw std::runtime_error("state trace is not positive");
    s.rho_gg /= tr;
    s.rho_ee = 1.0 - s.rho_gg;
    s.rho_ge /= tr;
    const Bloch b = bloch_of(s);
    const double n2 = b.norm2();
    if (n2 > 1.0) {
        const double inv = 1.0 / std::sqrt(n2);
        return density_of(b.x * inv, b.y * inv, b.z * inv);
    }
    return s;
}

inline bool is_finite(const QubitState& s) {
    return std::isfinite(s.rho_gg) && std::isfinite(s.rho_ee) &&
           std::isfinite(s.rho_ge.real()) && std::isfinite(s.rho_ge.imag());
}

}  // namespace qtraj
