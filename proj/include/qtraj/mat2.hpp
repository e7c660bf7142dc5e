#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace qtraj {

using cplx = std::complex<double>;

// Dense complex 2x2 matrix, row-major, basis order (g, e).
struct Mat2 {
    cplx m00{}, m01{}, m10{}, m11{};

    static Mat2 zero() { return {}; }
    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
};

inline Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {a.m00 + b.m00, a.m01 + b.m01, a.m10 + b.m10, a.m11 + b.m11};
}

inline Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {a.m00 - b.m00, a.m01 - b.m01, a.m10 - b.m10, a.m11 - b.m11};
}

inline Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}

inline Mat2 operator*(cplx s, const Mat2& a) {
    return {s * a.m00, s * a.m01, s * a.m10, s * a.m11};
}

inline Mat2 operator*(double s, const Mat2& a) { return cplx(s, 0.0) * a; }

inline Mat2 adjoint(const Mat2& a) {
    return {std::conj(a.m00), std::conj(a.m10), std::conj(a.m01), std::conj(a.m11)};
}

inline cplx trace(const Mat2& a) { return a.m00 + a.m11; }

inline Mat2 commutator(const Mat2& a, const Mat2& b) { return a * b - b * a; }

inline double max_abs_entry(const Mat2& a) {
    return std::max(std::max(std::abs(a.m00), std::abs(a.m01)),
                    std::max(std::abs(a.m10), std::abs(a.m11)));
}

// Pauli operators in the (g, e) basis with sigma_z = |e><e| - |g><g|,
// so the ground state sits at z = -1.  sigma_minus = |g><e|.
inline const Mat2 kSigmaX{0.0, 1.0, 1.0, 0.0};
inline const Mat2 kSigmaY{0.0, cplx(0.0, 1.0), cplx(0.0, -1.0), 0.0};
inline const Mat2 kSigmaZ{-1.0, 0.0, 0.0, 1.0};
inline const Mat2 kSigmaMinus{0.0, 1.0, 0.0, 0.0};
inline const Mat2 kSigmaPlus{0.0, 0.0, 1.0, 0.0};

}  // namespace qtraj
