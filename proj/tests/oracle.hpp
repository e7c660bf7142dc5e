#pragma once

// Brute-force 2x2 complex matrix algebra, independent of the library types.
// Used as the oracle for the superoperator identities.

#include <array>
#include <cmath>
#include <complex>

#include "qtraj/rng.hpp"
#include "qtraj/state.hpp"

namespace oracle {

using C = std::complex<double>;
using M = std::array<C, 4>;  // row-major [m00 m01; m10 m11]

inline M mul(const M& a, const M& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

inline M add(const M& a, const M& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}; }

inline M sub(const M& a, const M& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]}; }

inline M scale(C s, const M& a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }

inline M dagger(const M& a) {
    return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
}

inline C tr(const M& a) { return a[0] + a[3]; }

inline M lindblad(const M& L, const M& rho) {
    const M Ld = dagger(L);
    const M LdL = mul(Ld, L);
    return sub(mul(mul(L, rho), Ld), scale(0.5, add(mul(LdL, rho), mul(rho, LdL))));
}

inline M meas_backaction(const M& L, const M& rho) {
    const M anti = add(mul(L, rho), mul(rho, dagger(L)));
    return sub(anti, scale(tr(anti), rho));
}

inline M rabi(double omega, const M& rho) {
    const M sy = {C(0, 0), C(0, 1), C(0, -1), C(0, 0)};
    return scale(C(0, 0.5 * omega), sub(mul(sy, rho), mul(rho, sy)));
}

inline M of_mat2(const qtraj::Mat2& m) { return {m.m00, m.m01, m.m10, m.m11}; }

inline double max_diff(const M& a, const M& b) {
    double d = 0.0;
    for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// Random point in the closed Bloch ball (rejection-free: scaled direction).
inline qtraj::Bloch random_bloch(qtraj::RandomStream& rng) {
    for (;;) {
        const double x = 2.0 * rng.uniform() - 1.0;
        const double y = 2.0 * rng.uniform() - 1.0;
        const double z = 2.0 * rng.uniform() - 1.0;
        if (x * x + y * y + z * z <= 1.0) return {x, y, z};
    }
}

inline M random_op(qtraj::RandomStream& rng) {
    auto c = [&]() { return C(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0); };
    return {c(), c(), c(), c()};
}

}  // namespace oracle
