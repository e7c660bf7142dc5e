#include "qtraj/engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qtraj {

QubitState filter_apply_bin(QubitState s, const Stepper& st, const double sample[3],
                            double dt_record, int n_sub, InnovationMode mode,
                            std::vector<double>& scratch) {
    const int steps = mode == InnovationMode::lump ? 1 : n_sub;
    (void)scratch;
    return st.kraus_bin_update(s, dt_record, steps, sample);
}

GenResult generate(const PhysicsParams& p, const ChannelSet& gen_channels,
                   std::uint64_t master_seed, std::uint32_t trajectory_index,
                   const GenOptions& opt) {
    const int n_bins = p.n_bins();
    const int n_sub = p.n_substeps();
    const double dt = p.dt_sub();
    const double sqrt_dt = std::sqrt(dt);

    GenResult res;
    res.records.n_bins = n_bins;
    res.records.dt_record = p.dt_record;
    res.records.master_seed = master_seed;
    res.records.trajectory_index = trajectory_index;
    for (int c = 0; c < 3; ++c) res.records.column(c).resize(static_cast<std::size_t>(n_bins));

    const Stepper st(gen_channels, p.omega);
    RandomStream rng(master_seed, trajectory_index, StreamPurpose::dynamics);

    QubitState state = p.initial_state;
    res.conditioned.times.reserve(static_cast<std::size_t>(n_bins) + 1);
    res.conditioned.states.reserve(static_cast<std::size_t>(n_bins) + 1);
    res.conditioned.times.push_back(0.0);
    res.conditioned.states.push_back(state);
    res.conditioned.conditioned_on = DetectorSubset::uvw;

    const ChannelSet filter_channels =
        opt.corun_filter ? build_channels(p, opt.filter_subset) : ChannelSet{};
    const Stepper filter_st(filter_channels, p.omega);
    QubitState filter_state = p.initial_state;
    std::vector<double> filter_innov(static_cast<std::size_t>(filter_st.n_noise()));
    if (opt.corun_filter) {
        res.has_corun = true;
        res.corun_filter.conditioned_on = opt.filter_subset;
        res.corun_filter.times.push_back(0.0);
        res.corun_filter.states.push_back(filter_state);
    }

    std::vector<double> dW(static_cast<std::size_t>(st.n_noise()));
    for (int b = 0; b < n_bins; ++b) {
        double flux[3] = {0.0, 0.0, 0.0};
        double wiener[3] = {0.0, 0.0, 0.0};
        for (int j = 0; j < n_sub; ++j) {
            for (int k = 0; k < st.n_noise(); ++k)
                dW[static_cast<std::size_t>(k)] = rng.normal() * sqrt_dt;
            for (int k = 0; k < st.n_noise(); ++k) {
                const int col = st.record_column(k);
                if (col < 0) continue;  // loss-branch records stay internal
                flux[col] += st.record_mean(k, state) * dt;
                wiener[col] += dW[static_cast<std::size_t>(k)];
            }
            state = st.euler_maruyama(state, dt, dW);
        }
        if (!is_finite(state))
            throw std::runtime_error("non-finite state while generating bin " +
                                     std::to_string(b));
        double sample[3];
        for (int c = 0; c < 3; ++c) {
            sample[c] = (flux[c] + wiener[c]) / p.dt_record;
            res.records.column(c)[static_cast<std::size_t>(b)] = sample[c];
        }
        res.conditioned.times.push_back((b + 1) * p.dt_record);
        res.conditioned.states.push_back(state);
        if (opt.corun_filter) {
            filter_state = filter_apply_bin(filter_state, filter_st, sample, p.dt_record, n_sub,
                                      opt.innovation_mode, filter_innov);
            res.corun_filter.times.push_back((b + 1) * p.dt_record);
            res.corun_filter.states.push_back(filter_state);
        }
    }
    return res;
}

Trajectory reconstruct(const RecordSet& records, const PhysicsParams& filter_params,
                       DetectorSubset subset, InnovationMode mode) {
    if (records.n_bins <= 0 ||
        records.u.size() != static_cast<std::size_t>(records.n_bins) ||
        records.v.size() != static_cast<std::size_t>(records.n_bins) ||
        records.w.size() != static_cast<std::size_t>(records.n_bins))
        throw std::runtime_error("record column length mismatch");
    if (std::abs(records.dt_record - filter_params.dt_record) > 1e-12)
        throw std::runtime_error("records dt_record does not match filter params");

    const Stepper st(build_channels(filter_params, subset), filter_params.omega);
    const int n_sub = filter_params.n_substeps();
    std::vector<double> innov(static_cast<std::size_t>(st.n_noise()));

    Trajectory traj;
    traj.conditioned_on = subset;
    traj.times.reserve(static_cast<std::size_t>(records.n_bins) + 1);
    traj.states.reserve(static_cast<std::size_t>(records.n_bins) + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(filter_params.initial_state);

    QubitState state = filter_params.initial_state;
    for (int b = 0; b < records.n_bins; ++b) {
        double sample[3];
        for (int c = 0; c < 3; ++c) {
            sample[c] = records.column(c)[static_cast<std::size_t>(b)];
            if (!std::isfinite(sample[c]))
                throw std::runtime_error("non-finite record sample in bin " +
                                            std::to_string(b));
        }
        state = filter_apply_bin(state, st, sample, records.dt_record, n_sub, mode, innov);
        traj.times.push_back((b + 1) * records.dt_record);
        traj.states.push_back(state);
    }
    return traj;
}

Trajectory solve_master_equation(const PhysicsParams& p) {
    const Stepper st(build_channels(p, DetectorSubset::none), p.omega);
    const int n_bins = p.n_bins();
    const int n_sub = p.n_substeps();
    const double dt = p.dt_sub();

    Trajectory traj;
    traj.conditioned_on = DetectorSubset::none;
    traj.times.reserve(static_cast<std::size_t>(n_bins) + 1);
    traj.states.reserve(static_cast<std::size_t>(n_bins) + 1);
    QubitState state = p.initial_state;
    traj.times.push_back(0.0);
    traj.states.push_back(state);
    for (int b = 0; b < n_bins; ++b) {
        for (int j = 0; j < n_sub; ++j) state = st.rk4_step(state, dt);
        traj.times.push_back((b + 1) * p.dt_record);
        traj.states.push_back(state);
    }
    return traj;
}

std::vector<Bloch> me_bin_averages(const PhysicsParams& p) {
    const Stepper st(build_channels(p, DetectorSubset::none), p.omega);
    const int n_bins = p.n_bins();
    const int n_sub = p.n_substeps();
    const double dt = p.dt_sub();

    std::vector<Bloch> avg(static_cast<std::size_t>(n_bins));
    QubitState state = p.initial_state;
    for (int b = 0; b < n_bins; ++b) {
        double sx = 0.0, sy = 0.0, sz = 0.0;
        for (int j = 0; j < n_sub; ++j) {
            const Bloch bl = bloch_of(state);  // sub-step start, as records sample
            sx += bl.x;
            sy += bl.y;
            sz += bl.z;
            state = st.rk4_step(state, dt);
        }
        avg[static_cast<std::size_t>(b)] = {sx / n_sub, sy / n_sub, sz / n_sub};
    }
    return avg;
}

}  // namespace qtraj
