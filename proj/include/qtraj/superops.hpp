#pragma once

#include "qtraj/mat2.hpp"
#include "qtraj/state.hpp"

namespace qtraj {

// Lindblad dissipator D(rho) = L rho L+ - 1/2 {L+L, rho}.  Traceless.
inline Mat2 dissipator(const Mat2& L, const Mat2& rho) {
    const Mat2 Ld = adjoint(L);
    const Mat2 LdL = Ld * L;
    return L * rho * Ld - 0.5 * (LdL * rho + rho * LdL);
}

// Diffusive measurement backaction M(rho) = L rho + rho L+ - Tr(L rho + rho L+) rho.
// Traceless; homogeneous of degree one in L, so sqrt(eta) M_L = M_{sqrt(eta) L}.
inline Mat2 backaction(const Mat2& L, const Mat2& rho) {
    const Mat2 anti = L * rho + rho * adjoint(L);
    return anti - trace(anti) * rho;
}

// Rabi drive i (Omega/2) [sigma_y, rho]; moves the ground state toward
// positive x (dx/dt = -Omega z, dz/dt = +Omega x).
inline Mat2 drive_term(double omega, const Mat2& rho) {
    return cplx(0.0, 0.5 * omega) * commutator(kSigmaY, rho);
}

inline Mat2 dissipator(const Mat2& L, const QubitState& s) {
    return dissipator(L, to_matrix(s));
}

inline Mat2 backaction(const Mat2& L, const QubitState& s) {
    return backaction(L, to_matrix(s));
}

inline Mat2 drive_term(double omega, const QubitState& s) {
    return drive_term(omega, to_matrix(s));
}

}  // namespace qtraj
