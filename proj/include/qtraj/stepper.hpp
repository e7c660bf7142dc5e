#pragma once

#include <span>
#include <vector>

#include "qtraj/channels.hpp"
#include "qtraj/state.hpp"

namespace qtraj {

// Time stepper for one ChannelSet.  The drive plus every dissipator form a
// single linear superoperator; it and the linear part of each monitored
// channel's backaction are precomputed as real 4x4 maps acting on
// (rho_gg, rho_ee, Re rho_ge, Im rho_ge).  The maps are built by applying the
// superoperator functions to a Hermitian basis, so this path is algebraically
// identical to the matrix form (covered by tests).
class Stepper {
  public:
    Stepper(const ChannelSet& channels, double omega);

    int n_noise() const { return static_cast<int>(mon_.size()); }
    int record_column(int monitored_index) const { return mon_[monitored_index].column; }
    double record_scale(int monitored_index) const { return mon_[monitored_index].scale; }

    // Tr((L_k + L_k+) rho): the predicted record mean of monitored channel k,
    // equal to record_scale times the channel's Bloch coordinate.
    double record_mean(int monitored_index, const QubitState& s) const;

    // Ito Euler-Maruyama update with one Wiener increment per monitored
    // channel (canonical channel order), then normalization.  Rejects
    // non-finite noise.
    QubitState euler_maruyama(const QubitState& s, double dt,
                              std::span<const double> noise) const;

    // Classical fourth-order Runge-Kutta on the deterministic vector field.
    QubitState rk4_step(const QubitState& s, double dt) const;

    // Record-bin filter update in Kraus form (Rouchon's discrete scheme):
    //   sigma' = M sigma M+ + sum_unread L sigma L+ dt,
    //   M = I + (-iH - 1/2 sum_k L_k+ L_k) dt + sum_read sample_k L_k dt,
    // applied n_sub times with the bin's sample and trace-rescaled, then
    // normalized once at the bin boundary.  This is the Bayes-consistent
    // update for a binned record; per-substep Euler innovation replays carry
    // the wrong quadratic variation and measurably bias the filter.
    QubitState kraus_bin_update(const QubitState& s, double dt_record, int n_sub,
                                const double sample_by_column[3]) const;

  private:
    struct Monitored {
        double lin[16];  // rho -> L rho + rho L+
        double mean[4];  // rho -> Tr(L rho + rho L+)
        Mat2 op;
        int column;
        double scale;
    };

    double gen_[16];      // drive + sum of all dissipators
    double refill_[16];   // sum over unread channels of L rho L+
    Mat2 kraus_drift_;    // -iH - 1/2 sum_all L+L
    std::vector<Monitored> mon_;
};

// Convenience wrappers matching the operation-level API.  Each call builds a
// Stepper; hot loops should construct one and reuse it.
QubitState sme_step(const QubitState& s, const ChannelSet& channels, double omega,
                    double dt, std::span<const double> noise);
QubitState lindblad_step(const QubitState& s, const PhysicsParams& p, double dt);

}  // namespace qtraj
