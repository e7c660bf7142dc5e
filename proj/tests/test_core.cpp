#include "doctest.h"

#include <cmath>

#include "oracle.hpp"
#include "qtraj/channels.hpp"
#include "qtraj/engine.hpp"
#include "qtraj/superops.hpp"

using namespace qtraj;

TEST_CASE("bloch conventions") {
    const Bloch g = bloch_of(ground_state());
    CHECK(g.x == 0.0);
    CHECK(g.y == 0.0);
    CHECK(g.z == -1.0);

    const Bloch mixed = bloch_of(maximally_mixed());
    CHECK(mixed.x == 0.0);
    CHECK(mixed.z == 0.0);

    // (|g>+|e>)(<g|+<e|)/2: trace against sigma_x by brute force.
    const QubitState plus{0.5, 0.5, cplx(0.5, 0.0)};
    const oracle::M sx = {0.0, 1.0, 1.0, 0.0};
    const oracle::M rho = oracle::of_mat2(to_matrix(plus));
    CHECK(oracle::tr(oracle::mul(sx, rho)).real() == doctest::Approx(1.0).epsilon(1e-14));
    const Bloch p = bloch_of(plus);
    CHECK(p.x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.y == 0.0);
    CHECK(p.z == 0.0);
}

TEST_CASE("bloch/density round trip on random ball points") {
    RandomStream rng(7, 0, StreamPurpose::dynamics);
    for (int i = 0; i < 1000; ++i) {
        const Bloch b = oracle::random_bloch(rng);
        const Bloch r = bloch_of(density_of(b));
        CHECK(std::abs(r.x - b.x) < 1e-12);
        CHECK(std::abs(r.y - b.y) < 1e-12);
        CHECK(std::abs(r.z - b.z) < 1e-12);
    }
}

TEST_CASE("purity") {
    CHECK(purity(ground_state()) == doctest::Approx(1.0));
    CHECK(purity(maximally_mixed()) == doctest::Approx(0.5));
    CHECK(purity(density_of(0.6, 0.0, 0.8)) == doctest::Approx(1.0).epsilon(1e-14));
    RandomStream rng(8, 0, StreamPurpose::dynamics);
    for (int i = 0; i < 200; ++i) {
        const double p = purity(density_of(oracle::random_bloch(rng)));
        CHECK(p >= 0.5 - 1e-12);
        CHECK(p <= 1.0 + 1e-9);
    }
}

TEST_CASE("dissipator matches brute force and hand values") {
    const double gamma_d = 1.0 / 0.9;
    const Mat2 Lw = std::sqrt(gamma_d / 2.0) * kSigmaZ;

    // L = sqrt(gamma_d/2) sigma_z on (1 + sigma_x)/2 decays x at gamma_d.
    const QubitState rho_x = density_of(1.0, 0.0, 0.0);
    const Mat2 d = dissipator(Lw, rho_x);
    const oracle::M expect =
        oracle::lindblad(oracle::of_mat2(Lw), oracle::of_mat2(to_matrix(rho_x)));
    CHECK(oracle::max_diff(oracle::of_mat2(d), expect) < 1e-14);
    // dx/dt = 2 Re d_ge = -gamma_d * x
    CHECK(2.0 * d.m01.real() == doctest::Approx(-gamma_d).epsilon(1e-12));
    CHECK(d.m00.real() == doctest::Approx(0.0));

    // L_u and L_v summed on |e><e| give Gamma_1 (|g><g| - |e><e|).
    const double gamma1 = 1.0 / 15.0;
    const Mat2 Lu = std::sqrt(gamma1 / 2.0) * kSigmaMinus;
    const Mat2 Lv = cplx(0.0, 1.0) * Lu;
    const Mat2 sum = dissipator(Lu, excited_state()) + dissipator(Lv, excited_state());
    CHECK(sum.m00.real() == doctest::Approx(gamma1).epsilon(1e-12));
    CHECK(sum.m11.real() == doctest::Approx(-gamma1).epsilon(1e-12));
    CHECK(std::abs(sum.m01) < 1e-15);
}

TEST_CASE("superoperators are traceless and preserve hermiticity") {
    RandomStream rng(11, 0, StreamPurpose::dynamics);
    for (int i = 0; i < 2000; ++i) {
        const QubitState s = density_of(oracle::random_bloch(rng));
        const oracle::M Lo = oracle::random_op(rng);
        const Mat2 L{Lo[0], Lo[1], Lo[2], Lo[3]};

        const Mat2 d = dissipator(L, s);
        CHECK(std::abs(trace(d)) < 1e-12);
        CHECK(max_abs_entry(d - adjoint(d)) < 1e-12);

        const Mat2 m = backaction(L, s);
        CHECK(std::abs(trace(m)) < 1e-12);
        CHECK(max_abs_entry(m - adjoint(m)) < 1e-12);

        const Mat2 h = drive_term(1.7, s);
        CHECK(std::abs(trace(h)) < 1e-12);
        CHECK(max_abs_entry(h - adjoint(h)) < 1e-12);

        // cross-check against the brute-force oracle
        CHECK(oracle::max_diff(oracle::of_mat2(d),
                               oracle::lindblad(Lo, oracle::of_mat2(to_matrix(s)))) < 1e-13);
        CHECK(oracle::max_diff(oracle::of_mat2(m), oracle::meas_backaction(
                                                       Lo, oracle::of_mat2(to_matrix(s)))) <
              1e-13);
    }
}

TEST_CASE("backaction fixed point and hand values") {
    const double gamma1 = 1.0 / 15.0;
    const Mat2 Lu = std::sqrt(gamma1 / 2.0) * kSigmaMinus;
    const Mat2 Lv = cplx(0.0, 1.0) * Lu;
    // exactly zero at the pointer state |g><g|
    CHECK(max_abs_entry(backaction(Lu, ground_state())) == 0.0);
    CHECK(max_abs_entry(backaction(Lv, ground_state())) == 0.0);

    const double gamma_d = 1.0 / 0.9;
    const Mat2 Lw = std::sqrt(gamma_d / 2.0) * kSigmaZ;
    const Mat2 m = backaction(Lw, maximally_mixed());
    CHECK(m.m11.real() == doctest::Approx(std::sqrt(gamma_d / 2.0)).epsilon(1e-14));
    CHECK(m.m00.real() == doctest::Approx(-std::sqrt(gamma_d / 2.0)).epsilon(1e-14));
    CHECK(std::abs(m.m01) == 0.0);
}

TEST_CASE("drive sign convention") {
    const double omega = kTwoPi * 0.5;
    // commutator brute force at |g><g|
    const oracle::M rho_g = {1.0, 0.0, 0.0, 0.0};
    const oracle::M dr = oracle::rabi(omega, rho_g);
    const double dxdt = 2.0 * dr[1].real();
    CHECK(dxdt == doctest::Approx(omega).epsilon(1e-12));  // ground state moves to +x

    const Mat2 d = drive_term(omega, ground_state());
    CHECK(2.0 * d.m01.real() == doctest::Approx(omega).epsilon(1e-12));
    CHECK(max_abs_entry(drive_term(0.0, density_of(0.3, 0.2, -0.4))) == 0.0);
    CHECK(max_abs_entry(drive_term(omega, maximally_mixed())) < 1e-15);
}

TEST_CASE("dephasing channels leave populations untouched") {
    RandomStream rng(13, 0, StreamPurpose::dynamics);
    for (int i = 0; i < 100; ++i) {
        const QubitState s = density_of(oracle::random_bloch(rng));
        const double amp = 3.0 * rng.uniform();
        const Mat2 d = dissipator(amp * kSigmaZ, s);
        CHECK(std::abs(d.m00) < 1e-14);
        CHECK(std::abs(d.m11) < 1e-14);
    }
}

TEST_CASE("build_channels scales and split") {
    PhysicsParams p;
    p.gamma1 = 1.0 / 15.0;
    p.gamma_d = 1.0 / 0.9;
    p.eta_f = 0.14;
    p.eta_d = 0.34;

    const ChannelSet set = build_channels(p, DetectorSubset::uvw);
    CHECK(set.scale_for_column(2) ==
          doctest::Approx(std::sqrt(2.0 * 0.34 / 0.9)).epsilon(1e-12));
    CHECK(set.scale_for_column(0) ==
          doctest::Approx(std::sqrt(0.14 * (1.0 / 15.0) / 2.0)).epsilon(1e-12));
    CHECK(set.scale_for_column(0) == doctest::Approx(std::sqrt(0.004666666666667)).epsilon(1e-9));

    // monitored^2 + loss^2 recovers the physical rate of each pair
    auto rate_of = [&](ChannelLabel l) {
        for (const auto& c : set.channels) {
            if (c.label == l) return trace(adjoint(c.op) * c.op).real();
        }
        return 0.0;
    };
    CHECK(rate_of(ChannelLabel::u) + rate_of(ChannelLabel::u_loss) ==
          doctest::Approx(p.gamma1 / 2.0).epsilon(1e-12));
    CHECK(rate_of(ChannelLabel::v) + rate_of(ChannelLabel::v_loss) ==
          doctest::Approx(p.gamma1 / 2.0).epsilon(1e-12));
    // sigma_z ops: tr(L+L) = 2 amp^2
    CHECK(rate_of(ChannelLabel::w) + rate_of(ChannelLabel::w_loss) ==
          doctest::Approx(2.0 * p.gamma_d / 2.0).epsilon(1e-12));

    const ChannelSet none = build_channels(p, DetectorSubset::none);
    for (const auto& c : none.channels) CHECK(!c.monitored);

    const ChannelSet uv = build_channels(p, DetectorSubset::uv);
    for (const auto& c : uv.channels) {
        if (c.label == ChannelLabel::w) CHECK(!c.monitored);
        if (c.label == ChannelLabel::u) CHECK(c.monitored);
    }

    const ChannelSet omni = omniscient_channels(p);
    for (const auto& c : omni.channels) CHECK(c.monitored);
    CHECK(omni.channels.size() == 7);  // u v w + two fluorescence losses + w loss + phi

    PhysicsParams bad = p;
    bad.eta_f = 1.5;
    CHECK_THROWS_AS(build_channels(bad, DetectorSubset::uvw), std::invalid_argument);
}

TEST_CASE("params invariants and presets") {
    PhysicsParams p;
    p.gamma_d = 0.2;
    p.omega = kTwoPi * 0.5;
    CHECK(p.gamma2() == doctest::Approx(0.5 / 15.0 + kDefaultGammaPhi + 0.2));
    CHECK(kDefaultGammaPhi == doctest::Approx(0.05595238).epsilon(1e-6));
    p.validate();

    PhysicsParams q = p;
    q.gamma1 = -0.1;
    CHECK_THROWS(q.validate());
    q = p;
    q.eta_d = 1.2;
    CHECK_THROWS(q.validate());
    q = p;
    q.dt_int = 0.03;  // does not divide dt_record
    CHECK_THROWS(q.validate());
    q = p;
    q.duration = 20.05;  // not a bin multiple
    CHECK_THROWS(q.validate());
    q = p;
    q.initial_state = QubitState{0.8, 0.8, 0.0};
    CHECK_THROWS(q.validate());

    PhysicsParams f;
    apply_preset(f, "fig2a");
    CHECK(f.omega / kTwoPi == doctest::Approx(0.5));
    CHECK(f.gamma_d == doctest::Approx(0.2));
    apply_preset(f, "fig2b");
    CHECK(f.omega / kTwoPi == doctest::Approx(0.0625));
    CHECK(f.gamma_d == doctest::Approx(1.0 / 0.9));
    apply_preset(f, "fig1");
    CHECK(f.omega / kTwoPi == doctest::Approx(1.0 / 5.2));
    CHECK(f.gamma_d == doctest::Approx(1.0 / 0.9));
    CHECK_THROWS(apply_preset(f, "fig9"));
}

TEST_CASE("coherence decays at gamma2 in the deterministic ME") {
    PhysicsParams p;
    p.gamma_d = 0.13;
    p.omega = 0.0;
    p.dt_record = 0.1;
    p.dt_int = 0.01;
    p.initial_state = density_of(1.0, 0.0, 0.0);
    const double g2 = p.gamma2();
    p.duration = std::ceil(std::log(10.0) / g2 / p.dt_record) * p.dt_record;  // one decade

    const Trajectory traj = solve_master_equation(p);
    // least-squares slope of log x(t)
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    const auto n = traj.times.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = traj.times[i];
        const double lx = std::log(bloch_of(traj.states[i]).x);
        st += t;
        sl += lx;
        stt += t * t;
        stl += t * lx;
    }
    const double slope = (n * stl - st * sl) / (n * stt - st * st);
    CHECK(std::abs(-slope - g2) / g2 < 1e-6);
}
