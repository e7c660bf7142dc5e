#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qtraj/engine.hpp"
#include "qtraj/ensemble.hpp"

namespace qtraj {

enum class Plane { xy, xz, yz };

std::string_view to_string(Plane p);
Plane plane_from_string(std::string_view s);

struct EnsembleSpec {
    PhysicsParams params;
    std::uint32_t n_traj = 1;
    std::uint64_t master_seed = 1;
    DetectorSubset subset = DetectorSubset::uvw;
    int workers = 1;
};

// ---------------------------------------------------------------------------
// Raw-average tomography: mean records rescaled by the record-model prefactors
// against the master-equation curves.

struct RawAverageColumn {
    bool present = false;       // false when the record scale is zero
    std::vector<double> mean;   // rescaled per-bin average
    std::vector<double> se;     // standard error of the rescaled average
};

struct RawAverageResult {
    std::vector<double> t;      // bin start times
    RawAverageColumn u, v, w;
    std::vector<Bloch> me;      // bin-averaged master-equation reference
    std::uint32_t n_traj = 0;

    const RawAverageColumn& column(int c) const { return c == 0 ? u : (c == 1 ? v : w); }
};

RawAverageResult raw_average_tomography(const EnsembleSpec& spec);

// ---------------------------------------------------------------------------
// Projective readout and tomographic validation.

// Strong measurement of one Bloch axis: +1 with probability (1 + coordinate)/2.
int projective_readout(const QubitState& s, Axis axis, RandomStream& rng);

struct ValidationBin {
    double center = 0.0;        // geometric bin center
    std::int64_t count = 0;
    double mean_outcome = 0.0;
    double se = 0.0;            // sample std of outcomes / sqrt(count)
    double mean_coord = 0.0;    // mean filter coordinate inside the bin
    bool in_fit = false;
};

struct AxisValidation {
    Axis axis = Axis::x;
    double T = 0.0;
    double bin_width = 0.0;
    std::vector<ValidationBin> bins;
    double slope = 0.0, intercept = 0.0;
    double slope_se = 0.0, intercept_se = 0.0;
    double chi2_identity = 0.0;  // against mean outcome == coordinate
    std::int64_t n_fit_bins = 0;
};

struct ValidationOptions {
    double T = 10.0;
    double bin_width = 0.01;
    std::int64_t min_count = 50;
    // Filter efficiencies when they differ from the generating ones
    // (mis-specification control / efficiency sweep).
    std::optional<double> filter_eta_f;
    std::optional<double> filter_eta_d;
};

struct ValidationResult {
    AxisValidation per_axis[3];
};

// Generates with the omniscient decomposition, filters on the read records,
// and bins independent projective outcomes (sampled from the omniscient
// state at T) by the filter coordinate at T.
ValidationResult validate_tomography(const EnsembleSpec& spec, const ValidationOptions& opt);

// ---------------------------------------------------------------------------
// Distributions of conditioned states.

struct HistogramGrid {
    Plane plane = Plane::xz;
    double tau = 0.0;
    int n_bins = 61;
    std::vector<std::int64_t> counts;  // row-major [a][b] over [-1, 1]^2

    std::int64_t total() const;
    std::int64_t at(int ia, int ib) const { return counts[static_cast<std::size_t>(ia * n_bins + ib)]; }
};

struct AsymmetryResult {
    double x0 = 0.3;
    std::int64_t n_pos = 0, n_neg = 0;
    double std_pos = 0.0, std_neg = 0.0;   // spread of y on each side
    double se_pos = 0.0, se_neg = 0.0;
    double ratio = 0.0;                    // std_neg / std_pos
    double z_score = 0.0;                  // significance of std_neg > std_pos
};

struct PuritySample {
    double tau = 0.0;
    double mean = 0.0;
    double se = 0.0;
};

struct DistributionResult {
    std::vector<HistogramGrid> grids;           // one per (tau, plane)
    std::vector<double> overlay_t;              // bin times up to max tau
    std::vector<Bloch> overlay_mean;            // ensemble-mean trajectory
    std::vector<PuritySample> purity;           // per tau
    std::vector<AsymmetryResult> asymmetry;     // per tau
    double max_abs_y = 0.0;                     // over all states and times
    std::uint32_t n_traj = 0;
};

struct DistributionOptions {
    std::vector<double> times{6.5};
    std::vector<Plane> planes{Plane::xy, Plane::xz, Plane::yz};
    int n_bins = 61;
    double overlay_trim = 0.0;   // drop t < trim from the overlay
    double asymmetry_x0 = 0.3;
};

DistributionResult state_distribution(const EnsembleSpec& spec, const DistributionOptions& opt);

// Conditional spread of y for x > x0 versus x < -x0 over a point cloud.
AsymmetryResult asymmetry_statistic(const std::vector<Bloch>& points, double x0 = 0.3);

// ---------------------------------------------------------------------------
// Purity ordering across detector subsets (same records, three filters).

struct PurityOrdering {
    double tau = 0.0;
    double mean_uvw = 0.0, mean_uv = 0.0, mean_w = 0.0;
    double se_uvw = 0.0, se_uv = 0.0, se_w = 0.0;
    // Paired differences uvw - uv and uvw - w with their standard errors.
    double diff_uv = 0.0, diff_uv_se = 0.0;
    double diff_w = 0.0, diff_w_se = 0.0;
};

PurityOrdering purity_ordering(const EnsembleSpec& spec, double tau);

// ---------------------------------------------------------------------------
// Efficiency sweep: reconstruction re-run across an (eta_f, eta_d) grid; the
// score is the summed chi-square of the validation fit against identity over
// all axes and checkpoint times.

struct EtaGrid {
    double eta_f_min = 0.08, eta_f_max = 0.20, eta_f_step = 0.01;
    double eta_d_min = 0.28, eta_d_max = 0.40, eta_d_step = 0.01;

    int nf() const;
    int nd() const;
    double eta_f(int i) const { return eta_f_min + i * eta_f_step; }
    double eta_d(int j) const { return eta_d_min + j * eta_d_step; }
};

struct SweepPoint {
    double eta_f = 0.0, eta_d = 0.0;
    double chi2 = 0.0;
};

struct SweepOptions {
    EtaGrid grid;
    std::vector<double> times{4.0, 7.0, 10.0};
    double bin_width = 0.04;
    std::int64_t min_count = 50;
    // Integrator sub-step for the grid filters; 0 keeps the ensemble's dt_int.
    // The Kraus bin update is insensitive to it, so a coarse filter step saves
    // a large factor over the grid loop.
    double filter_dt_int = 0.0;
    // Projective readouts drawn per (axis, checkpoint); more readouts sharpen
    // the chi-square surface at fixed trajectory count.
    int readouts = 1;
    // Bins whose mean filter coordinate exceeds this magnitude are excluded
    // from the score: outcome means saturate near the poles, so those bins
    // carry no efficiency information.
    double coord_cap = 1.0;
};

struct SweepResult {
    std::vector<SweepPoint> points;     // row-major over (eta_f, eta_d)
    SweepPoint best;
    std::vector<SweepPoint> sigma1;     // chi2 <= best.chi2 + 2.30
};

SweepResult efficiency_sweep(const EnsembleSpec& spec, const SweepOptions& opt);

// ---------------------------------------------------------------------------
// The 30-configuration grid (5 drive values x 6 log-spaced dephasing rates
// spanning the published ranges) plus the named figure presets.

struct GridPoint {
    std::string name;
    double rabi_per_us = 0.0;  // Omega / 2pi
    double gamma_d = 0.0;
};

const char* config_grid_version();  // "grid-v1"
std::vector<GridPoint> config_grid();

}  // namespace qtraj
