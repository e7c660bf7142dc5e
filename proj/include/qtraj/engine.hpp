#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtraj/channels.hpp"
#include "qtraj/rng.hpp"
#include "qtraj/state.hpp"
#include "qtraj/stepper.hpp"

namespace qtraj {

// Time-binned measurement samples for one realization.  Each sample is the
// bin-averaged flux: sample * dt_record = record_scale * coordinate * dt_record
// + summed Wiener increment over the bin (units us^(-1/2)).
struct RecordSet {
    int n_bins = 0;
    double dt_record = 0.0;
    std::vector<double> u, v, w;
    std::string config_id;
    std::uint64_t master_seed = 0;
    std::uint32_t trajectory_index = 0;

    const std::vector<double>& column(int c) const { return c == 0 ? u : (c == 1 ? v : w); }
    std::vector<double>& column(int c) { return c == 0 ? u : (c == 1 ? v : w); }
};

struct Trajectory {
    std::vector<double> times;        // n_bins + 1 entries, starts at t = 0
    std::vector<QubitState> states;   // state at each bin boundary
    DetectorSubset conditioned_on = DetectorSubset::none;

    Bloch bloch_at(int bin) const { return bloch_of(states[static_cast<std::size_t>(bin)]); }
};

// Whether a bin's innovation is applied in dt_int sub-increments with the
// coordinate re-evaluated each sub-step (default) or in one lump.
enum class InnovationMode { substep, lump };

struct GenOptions {
    bool corun_filter = false;                       // run the read-record filter alongside
    DetectorSubset filter_subset = DetectorSubset::uvw;
    InnovationMode innovation_mode = InnovationMode::substep;
};

struct GenResult {
    RecordSet records;
    Trajectory conditioned;   // generator state; pure (up to O(dt)) when the
                              // channel set is omniscient
    Trajectory corun_filter;  // populated only when GenOptions asked for it
    bool has_corun = false;
};

// Synthesizes one realization: evolves the SME at dt_int with one Wiener
// stream per trajectory, emitting bin samples for the read channels (u, v, w).
// Loss-branch records stay internal.  gen_channels decides the conditioning:
// pass omniscient_channels(p) for the pure ground-truth trajectory, or
// build_channels(p, uvw) when only the records matter (identical record law).
GenResult generate(const PhysicsParams& p, const ChannelSet& gen_channels,
                   std::uint64_t master_seed, std::uint32_t trajectory_index,
                   const GenOptions& opt = {});

// Runs the SME filter over recorded samples: for each monitored channel the
// innovation dW = sample*dt - record_scale*coordinate(filter)*dt replaces the
// Wiener increment; channels outside the subset contribute dissipators only.
// filter_params may differ from the generating ones (efficiency sweeps,
// mis-specification controls).
Trajectory reconstruct(const RecordSet& records, const PhysicsParams& filter_params,
                       DetectorSubset subset,
                       InnovationMode mode = InnovationMode::substep);

// Advances a filter state over one record bin: the innovation
// (sample - predicted mean) * dt substitutes for the Wiener increment of each
// monitored channel.  scratch must hold stepper.n_noise() doubles.  Exposed so
// ensemble drivers can reuse prebuilt steppers; generate/reconstruct share it.
QubitState filter_apply_bin(QubitState s, const Stepper& stepper, const double sample[3],
                            double dt_record, int n_sub, InnovationMode mode,
                            std::vector<double>& scratch);

// Deterministic master equation via RK4 at dt_int; states at bin boundaries.
Trajectory solve_master_equation(const PhysicsParams& p);

// Master-equation Bloch vector averaged over the integrator sub-step grid of
// each record bin -- the reference a bin-averaged record estimates.
std::vector<Bloch> me_bin_averages(const PhysicsParams& p);

}  // namespace qtraj
