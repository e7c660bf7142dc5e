#pragma once

#include <string_view>
#include <vector>

#include "qtraj/mat2.hpp"
#include "qtraj/params.hpp"

namespace qtraj {

enum class ChannelLabel { u, v, w, phi, u_loss, v_loss, w_loss };

enum class DetectorSubset { uvw, uv, w, none };

std::string_view to_string(DetectorSubset s);
DetectorSubset subset_from_string(std::string_view s);

// One diffusive decoherence channel.  The jump operator carries both the
// physical rate and the branch efficiency, e.g. the monitored fluorescence
// branch is sqrt(eta_f * Gamma_1 / 2) sigma_-, its loss branch
// sqrt((1 - eta_f) * Gamma_1 / 2) sigma_-; the squared magnitudes of a
// monitored/loss pair add back to the full physical rate.
struct Channel {
    ChannelLabel label;
    Mat2 op;                   // jump operator, rate and efficiency folded in
    bool monitored = false;    // consumes a Wiener increment / an innovation
    double record_scale = 0.0; // coefficient of the Bloch coordinate in the record
    int record_column = -1;    // u -> 0, v -> 1, w -> 2; -1 for internal branches
};

struct ChannelSet {
    std::vector<Channel> channels;

    int n_monitored() const;
    // record_scale of the channel feeding the given record column (0 if absent).
    double scale_for_column(int column) const;
};

// Channel decomposition seen by the filter for a given detector selection.
// Read channels outside the subset are demoted to loss channels (dissipator
// only); subset none yields the deterministic master equation.
ChannelSet build_channels(const PhysicsParams& p, DetectorSubset subset);

// Every branch monitored, including loss branches and pure dephasing; this is
// the generative decomposition whose conditioned state stays pure.
ChannelSet omniscient_channels(const PhysicsParams& p);

}  // namespace qtraj
