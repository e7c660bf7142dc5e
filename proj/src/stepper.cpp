#include "qtraj/stepper.hpp"

#include <cmath>
#include <stdexcept>

#include "qtraj/superops.hpp"

namespace qtraj {

namespace {

// Real 4-vector representation (rho_gg, rho_ee, Re rho_ge, Im rho_ge).
inline void vec_of(const QubitState& s, double v[4]) {
    v[0] = s.rho_gg;
    v[1] = s.rho_ee;
    v[2] = s.rho_ge.real();
    v[3] = s.rho_ge.imag();
}

inline QubitState state_of(const double v[4]) {
    return {v[0], v[1], cplx(v[2], v[3])};
}

inline Mat2 basis_matrix(int i) {
    switch (i) {
        case 0: return {1.0, 0.0, 0.0, 0.0};
        case 1: return {0.0, 0.0, 0.0, 1.0};
        case 2: return {0.0, 1.0, 1.0, 0.0};
        default: return {0.0, cplx(0.0, 1.0), cplx(0.0, -1.0), 0.0};
    }
}

// Decomposes a Hermitian-preserving superoperator output onto the basis.
inline void fill_column(double map[16], int col, const Mat2& out) {
    map[0 * 4 + col] = out.m00.real();
    map[1 * 4 + col] = out.m11.real();
    map[2 * 4 + col] = out.m01.real();
    map[3 * 4 + col] = out.m01.imag();
}

inline void apply4(const double m[16], const double v[4], double out[4]) {
    out[0] = m[0] * v[0] + m[1] * v[1] + m[2] * v[2] + m[3] * v[3];
    out[1] = m[4] * v[0] + m[5] * v[1] + m[6] * v[2] + m[7] * v[3];
    out[2] = m[8] * v[0] + m[9] * v[1] + m[10] * v[2] + m[11] * v[3];
    out[3] = m[12] * v[0] + m[13] * v[1] + m[14] * v[2] + m[15] * v[3];
}

}  // namespace

Stepper::Stepper(const ChannelSet& channels, double omega) {
    for (int col = 0; col < 4; ++col) {
        const Mat2 rho = basis_matrix(col);
        Mat2 det = drive_term(omega, rho);
        Mat2 refill = Mat2::zero();
        for (const auto& c : channels.channels) {
            det = det + dissipator(c.op, rho);
            if (!c.monitored) refill = refill + c.op * rho * adjoint(c.op);
        }
        fill_column(gen_, col, det);
        fill_column(refill_, col, refill);
    }
    // -iH with H = -(Omega/2) sigma_y, so -iH = -i (Omega/2) (-sigma_y)
    kraus_drift_ = cplx(0.0, 0.5 * omega) * kSigmaY;
    for (const auto& c : channels.channels) {
        const Mat2 LdL = adjoint(c.op) * c.op;
        kraus_drift_ = kraus_drift_ - 0.5 * LdL;
    }
    for (const auto& c : channels.channels) {
        if (!c.monitored) continue;
        Monitored m{};
        m.column = c.record_column;
        m.scale = c.record_scale;
        m.op = c.op;
        const Mat2 Ld = adjoint(c.op);
        for (int col = 0; col < 4; ++col) {
            const Mat2 rho = basis_matrix(col);
            fill_column(m.lin, col, c.op * rho + rho * Ld);
        }
        for (int j = 0; j < 4; ++j) m.mean[j] = m.lin[0 * 4 + j] + m.lin[1 * 4 + j];
        mon_.push_back(m);
    }
}

double Stepper::record_mean(int monitored_index, const QubitState& s) const {
    double v[4];
    vec_of(s, v);
    const auto& f = mon_[static_cast<std::size_t>(monitored_index)].mean;
    return f[0] * v[0] + f[1] * v[1] + f[2] * v[2] + f[3] * v[3];
}

QubitState Stepper::euler_maruyama(const QubitState& s, double dt,
                                   std::span<const double> noise) const {
    if (noise.size() != mon_.size())
        throw std::invalid_argument("noise count does not match monitored channels");
    double v[4], dv[4];
    vec_of(s, v);
    apply4(gen_, v, dv);
    double out[4] = {v[0] + dt * dv[0], v[1] + dt * dv[1], v[2] + dt * dv[2],
                     v[3] + dt * dv[3]};
    for (std::size_t k = 0; k < mon_.size(); ++k) {
        const double dW = noise[k];
        if (!std::isfinite(dW)) throw std::invalid_argument("non-finite Wiener increment");
        if (dW == 0.0) continue;
        const auto& m = mon_[k];
        double bv[4];
        apply4(m.lin, v, bv);
        const double mean = m.mean[0] * v[0] + m.mean[1] * v[1] + m.mean[2] * v[2] +
                            m.mean[3] * v[3];
        out[0] += dW * (bv[0] - mean * v[0]);
        out[1] += dW * (bv[1] - mean * v[1]);
        out[2] += dW * (bv[2] - mean * v[2]);
        out[3] += dW * (bv[3] - mean * v[3]);
    }
    return normalize_state(state_of(out));
}

QubitState Stepper::kraus_bin_update(const QubitState& s, double dt_record, int n_sub,
                                     const double sample_by_column[3]) const {
    const double dt = dt_record / n_sub;
    Mat2 kraus = Mat2::identity() + dt * kraus_drift_;
    for (const auto& m : mon_) {
        if (m.column < 0) continue;
        const double r = sample_by_column[m.column];
        if (!std::isfinite(r)) throw std::invalid_argument("non-finite record sample");
        if (r == 0.0) continue;
        kraus = kraus + (r * dt) * m.op;
    }
    const Mat2 kraus_dag = adjoint(kraus);
    Mat2 sigma = to_matrix(s);
    double v[4], rv[4];
    for (int j = 0; j < n_sub; ++j) {
        Mat2 next = kraus * sigma * kraus_dag;
        v[0] = sigma.m00.real();
        v[1] = sigma.m11.real();
        v[2] = sigma.m01.real();
        v[3] = sigma.m01.imag();
        apply4(refill_, v, rv);
        next.m00 += dt * rv[0];
        next.m11 += dt * rv[1];
        next.m01 += dt * cplx(rv[2], rv[3]);
        next.m10 += dt * cplx(rv[2], -rv[3]);
        const double tr = next.m00.real() + next.m11.real();
        if (!(tr > 0.0)) throw std::runtime_error("bin update lost positivity");
        sigma = (1.0 / tr) * next;
    }
    return normalize_state(state_from_matrix(sigma));
}

QubitState Stepper::rk4_step(const QubitState& s, double dt) const {
    double v[4], k1[4], k2[4], k3[4], k4[4], t[4];
    vec_of(s, v);
    apply4(gen_, v, k1);
    for (int i = 0; i < 4; ++i) t[i] = v[i] + 0.5 * dt * k1[i];
    apply4(gen_, t, k2);
    for (int i = 0; i < 4; ++i) t[i] = v[i] + 0.5 * dt * k2[i];
    apply4(gen_, t, k3);
    for (int i = 0; i < 4; ++i) t[i] = v[i] + dt * k3[i];
    apply4(gen_, t, k4);
    for (int i = 0; i < 4; ++i)
        t[i] = v[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return normalize_state(state_of(t));
}

QubitState sme_step(const QubitState& s, const ChannelSet& channels, double omega,
                    double dt, std::span<const double> noise) {
    return Stepper(channels, omega).euler_maruyama(s, dt, noise);
}

QubitState lindblad_step(const QubitState& s, const PhysicsParams& p, double dt) {
    if (dt == 0.0) return s;
    return Stepper(build_channels(p, DetectorSubset::none), p.omega).rk4_step(s, dt);
}

}  // namespace qtraj
