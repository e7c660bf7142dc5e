#include "qtraj/channels.hpp"

#include <cmath>
#include <stdexcept>

namespace qtraj {

std::string_view to_string(DetectorSubset s) {
    switch (s) {
        case DetectorSubset::uvw: return "uvw";
        case DetectorSubset::uv: return "uv";
        case DetectorSubset::w: return "w";
        default: return "none";
    }
}

DetectorSubset subset_from_string(std::string_view s) {
    if (s == "uvw") return DetectorSubset::uvw;
    if (s == "uv") return DetectorSubset::uv;
    if (s == "w") return DetectorSubset::w;
    if (s == "none") return DetectorSubset::none;
    throw std::invalid_argument("unknown detector subset: " + std::string(s));
}

int ChannelSet::n_monitored() const {
    int n = 0;
    for (const auto& c : channels) n += c.monitored ? 1 : 0;
    return n;
}

double ChannelSet::scale_for_column(int column) const {
    for (const auto& c : channels) {
        if (c.record_column == column) return c.record_scale;
    }
    return 0.0;
}

ChannelSet build_channels(const PhysicsParams& p, DetectorSubset subset) {
    if (!(p.eta_f >= 0.0 && p.eta_f <= 1.0) || !(p.eta_d >= 0.0 && p.eta_d <= 1.0))
        throw std::invalid_argument("efficiencies must lie in [0, 1]");

    const bool read_fluor = subset == DetectorSubset::uvw || subset == DetectorSubset::uv;
    const bool read_disp = subset == DetectorSubset::uvw || subset == DetectorSubset::w;

    // Monitored fluorescence branches sqrt(eta_f Gamma_1 / 2) sigma_- give
    // records u = sqrt(eta_f Gamma_1 / 2) x + noise (and y for the i-rotated
    // v branch).  The dispersive branch sqrt(eta_d Gamma_d / 2) sigma_z gives
    // w = sqrt(2 eta_d Gamma_d) z + noise: the trace doubles the sigma_z
    // coefficient, hence the different prefactor form.
    const double amp_f = std::sqrt(p.eta_f * p.gamma1 / 2.0);
    const double amp_d = p.w_record_sign * std::sqrt(p.eta_d * p.gamma_d / 2.0);
    const double scale_f = std::sqrt(p.eta_f * p.gamma1 / 2.0);
    const double scale_d = p.w_record_sign * std::sqrt(2.0 * p.eta_d * p.gamma_d);

    ChannelSet set;
    set.channels.push_back({ChannelLabel::u, amp_f * kSigmaMinus, read_fluor, scale_f, 0});
    set.channels.push_back(
        {ChannelLabel::v, cplx(0.0, 1.0) * (amp_f * kSigmaMinus), read_fluor, scale_f, 1});
    set.channels.push_back({ChannelLabel::w, amp_d * kSigmaZ, read_disp, scale_d, 2});

    const double loss_f = std::sqrt((1.0 - p.eta_f) * p.gamma1 / 2.0);
    if (loss_f > 0.0) {
        set.channels.push_back({ChannelLabel::u_loss, loss_f * kSigmaMinus, false, 0.0, -1});
        set.channels.push_back(
            {ChannelLabel::v_loss, cplx(0.0, 1.0) * (loss_f * kSigmaMinus), false, 0.0, -1});
    }
    const double loss_d = std::sqrt((1.0 - p.eta_d) * p.gamma_d / 2.0);
    if (loss_d > 0.0) {
        set.channels.push_back({ChannelLabel::w_loss, loss_d * kSigmaZ, false, 0.0, -1});
    }
    const double amp_phi = std::sqrt(p.gamma_phi / 2.0);
    if (amp_phi > 0.0) {
        set.channels.push_back({ChannelLabel::phi, amp_phi * kSigmaZ, false, 0.0, -1});
    }
    return set;
}

ChannelSet omniscient_channels(const PhysicsParams& p) {
    ChannelSet set = build_channels(p, DetectorSubset::uvw);
    for (auto& c : set.channels) c.monitored = true;
    return set;
}

}  // namespace qtraj
