#include "qtraj/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qtraj {

namespace {

int bin_index_of(double t, double dt_record, const char* what) {
    const double b = t / dt_record;
    const long long idx = std::llround(b);
    if (std::abs(b - static_cast<double>(idx)) > 1e-9 || idx < 0)
        throw std::invalid_argument(std::string(what) + " must be a record-bin boundary");
    return static_cast<int>(idx);
}

int coord_bin(double c, double width, int n) {
    int idx = static_cast<int>(std::floor((c + 1.0) / width));
    return std::clamp(idx, 0, n - 1);
}

// Weighted least squares y = intercept + slope * x.
struct LineFit {
    double slope = 0.0, intercept = 0.0, slope_se = 0.0, intercept_se = 0.0;
    bool ok = false;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& weight) {
    LineFit f;
    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += weight[i];
        swx += weight[i] * x[i];
        swy += weight[i] * y[i];
        swxx += weight[i] * x[i] * x[i];
        swxy += weight[i] * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    if (x.size() < 2 || det <= 0.0) return f;
    f.slope = (sw * swxy - swx * swy) / det;
    f.intercept = (swxx * swy - swx * swxy) / det;
    f.slope_se = std::sqrt(sw / det);
    f.intercept_se = std::sqrt(swxx / det);
    f.ok = true;
    return f;
}

// Variance of a +-1 outcome mean with a 1/n floor so empty-spread bins keep a
// finite weight.
double outcome_var(double mean, std::int64_t n) {
    return std::max(1.0 - mean * mean, 1.0 / static_cast<double>(n));
}

}  // namespace

std::string_view to_string(Plane p) {
    switch (p) {
        case Plane::xy: return "xy";
        case Plane::xz: return "xz";
        default: return "yz";
    }
}

Plane plane_from_string(std::string_view s) {
    if (s == "xy") return Plane::xy;
    if (s == "xz") return Plane::xz;
    if (s == "yz") return Plane::yz;
    throw std::invalid_argument("unknown plane: " + std::string(s));
}

std::int64_t HistogramGrid::total() const {
    std::int64_t t = 0;
    for (const auto c : counts) t += c;
    return t;
}

// ---------------------------------------------------------------------------

namespace {

struct RawAverageAcc {
    std::vector<std::int64_t> sum;    // [bin][col], kQSample
    std::vector<std::int64_t> sumsq;  // [bin][col], kQSampleSq

    void merge(const RawAverageAcc& o) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += o.sum[i];
        for (std::size_t i = 0; i < sumsq.size(); ++i) sumsq[i] += o.sumsq[i];
    }
};

}  // namespace

RawAverageResult raw_average_tomography(const EnsembleSpec& spec) {
    const PhysicsParams& p = spec.params;
    p.validate();
    const int n_bins = p.n_bins();
    const ChannelSet gen_channels = build_channels(p, DetectorSubset::uvw);

    RawAverageAcc init;
    init.sum.assign(static_cast<std::size_t>(n_bins) * 3, 0);
    init.sumsq.assign(static_cast<std::size_t>(n_bins) * 3, 0);

    const auto acc = run_trajectories(
        spec.n_traj, spec.workers, init, [&](RawAverageAcc& a, std::uint32_t idx) {
            const GenResult g = generate(p, gen_channels, spec.master_seed, idx);
            for (int b = 0; b < n_bins; ++b) {
                for (int c = 0; c < 3; ++c) {
                    const double s = g.records.column(c)[static_cast<std::size_t>(b)];
                    a.sum[static_cast<std::size_t>(b * 3 + c)] += fixed_of(s, kQSample);
                    a.sumsq[static_cast<std::size_t>(b * 3 + c)] +=
                        fixed_of(s * s, kQSampleSq);
                }
            }
        });

    RawAverageResult res;
    res.n_traj = spec.n_traj;
    res.t.resize(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) res.t[static_cast<std::size_t>(b)] = b * p.dt_record;
    res.me = me_bin_averages(p);

    for (int c = 0; c < 3; ++c) {
        const double scale = gen_channels.scale_for_column(c);
        RawAverageColumn col;
        col.present = scale != 0.0;
        if (col.present) {
            col.mean.resize(static_cast<std::size_t>(n_bins));
            col.se.resize(static_cast<std::size_t>(n_bins));
            for (int b = 0; b < n_bins; ++b) {
                const auto m =
                    moments(acc.sum[static_cast<std::size_t>(b * 3 + c)], kQSample,
                            acc.sumsq[static_cast<std::size_t>(b * 3 + c)], kQSampleSq,
                            spec.n_traj);
                col.mean[static_cast<std::size_t>(b)] = m.mean / scale;
                col.se[static_cast<std::size_t>(b)] = m.se / std::abs(scale);
            }
        }
        (c == 0 ? res.u : c == 1 ? res.v : res.w) = std::move(col);
    }
    return res;
}

// ---------------------------------------------------------------------------

int projective_readout(const QubitState& s, Axis axis, RandomStream& rng) {
    const double c = std::clamp(component(bloch_of(s), axis), -1.0, 1.0);
    return rng.uniform() < 0.5 * (1.0 + c) ? +1 : -1;
}

namespace {

struct ValidationAcc {
    // [axis][bin]: count, outcome sum (+-1), coordinate sum (kQCoord)
    std::vector<std::int64_t> count, outcome, coord;

    void merge(const ValidationAcc& o) {
        for (std::size_t i = 0; i < count.size(); ++i) {
            count[i] += o.count[i];
            outcome[i] += o.outcome[i];
            coord[i] += o.coord[i];
        }
    }
};

AxisValidation finalize_axis(Axis axis, double T, double width, std::int64_t min_count,
                             const std::int64_t* count, const std::int64_t* outcome,
                             const std::int64_t* coord, int n_bins) {
    AxisValidation av;
    av.axis = axis;
    av.T = T;
    av.bin_width = width;
    std::vector<double> fx, fy, fw;
    for (int i = 0; i < n_bins; ++i) {
        ValidationBin vb;
        vb.center = -1.0 + (i + 0.5) * width;
        vb.count = count[i];
        if (vb.count > 0) {
            const double n = static_cast<double>(vb.count);
            vb.mean_outcome = static_cast<double>(outcome[i]) / n;
            vb.mean_coord = fixed_to(coord[i], kQCoord) / n;
            vb.se = std::sqrt(outcome_var(vb.mean_outcome, vb.count) / n);
            if (vb.count >= min_count) {
                vb.in_fit = true;
                fx.push_back(vb.center);
                fy.push_back(vb.mean_outcome);
                fw.push_back(1.0 / (vb.se * vb.se));
                const double r = vb.mean_outcome - vb.mean_coord;
                av.chi2_identity += r * r / (vb.se * vb.se);
                ++av.n_fit_bins;
            }
        }
        av.bins.push_back(vb);
    }
    const LineFit f = fit_line(fx, fy, fw);
    av.slope = f.slope;
    av.intercept = f.intercept;
    av.slope_se = f.slope_se;
    av.intercept_se = f.intercept_se;
    return av;
}

}  // namespace

ValidationResult validate_tomography(const EnsembleSpec& spec, const ValidationOptions& opt) {
    PhysicsParams p = spec.params;
    if (opt.T > p.duration + 1e-9)
        throw std::invalid_argument("validation time beyond duration");
    const int bin_T = bin_index_of(opt.T, p.dt_record, "validation time");
    p.duration = bin_T * p.dt_record;
    p.validate();

    PhysicsParams filter = p;
    if (opt.filter_eta_f) filter.eta_f = *opt.filter_eta_f;
    if (opt.filter_eta_d) filter.eta_d = *opt.filter_eta_d;

    const ChannelSet gen_channels = omniscient_channels(p);
    const int n_val_bins = static_cast<int>(std::llround(2.0 / opt.bin_width));

    ValidationAcc init;
    init.count.assign(static_cast<std::size_t>(3 * n_val_bins), 0);
    init.outcome.assign(static_cast<std::size_t>(3 * n_val_bins), 0);
    init.coord.assign(static_cast<std::size_t>(3 * n_val_bins), 0);

    const auto acc = run_trajectories(
        spec.n_traj, spec.workers, init, [&](ValidationAcc& a, std::uint32_t idx) {
            const GenResult g = generate(p, gen_channels, spec.master_seed, idx);
            const Trajectory traj = reconstruct(g.records, filter, spec.subset);
            const QubitState& omni = g.conditioned.states.back();
            const Bloch fb = bloch_of(traj.states.back());
            RandomStream readout(spec.master_seed, idx, StreamPurpose::readout);
            for (int ax = 0; ax < 3; ++ax) {
                const Axis axis = static_cast<Axis>(ax);
                const int out = projective_readout(omni, axis, readout);
                const double c = component(fb, axis);
                const int bin = coord_bin(c, opt.bin_width, n_val_bins);
                const std::size_t at = static_cast<std::size_t>(ax * n_val_bins + bin);
                a.count[at] += 1;
                a.outcome[at] += out;
                a.coord[at] += fixed_of(c, kQCoord);
            }
        });

    ValidationResult res;
    for (int ax = 0; ax < 3; ++ax) {
        res.per_axis[ax] = finalize_axis(
            static_cast<Axis>(ax), p.duration, opt.bin_width, opt.min_count,
            acc.count.data() + ax * n_val_bins, acc.outcome.data() + ax * n_val_bins,
            acc.coord.data() + ax * n_val_bins, n_val_bins);
    }
    return res;
}

// ---------------------------------------------------------------------------

namespace {

std::pair<double, double> plane_coords(const Bloch& b, Plane p) {
    switch (p) {
        case Plane::xy: return {b.x, b.y};
        case Plane::xz: return {b.x, b.z};
        default: return {b.y, b.z};
    }
}

struct SpreadAcc {
    std::int64_t n = 0;
    std::int64_t sum = 0;    // kQCoord
    std::int64_t sumsq = 0;  // kQCoord

    void add(double v) {
        ++n;
        sum += fixed_of(v, kQCoord);
        sumsq += fixed_of(v * v, kQCoord);
    }
    void merge(const SpreadAcc& o) {
        n += o.n;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    MomentStats stats() const { return moments(sum, kQCoord, sumsq, kQCoord, n); }
};

AsymmetryResult finalize_asymmetry(double x0, const SpreadAcc& pos, const SpreadAcc& neg) {
    AsymmetryResult r;
    r.x0 = x0;
    r.n_pos = pos.n;
    r.n_neg = neg.n;
    if (pos.n < 2 || neg.n < 2) return r;
    r.std_pos = std::sqrt(pos.stats().var);
    r.std_neg = std::sqrt(neg.stats().var);
    r.se_pos = r.std_pos / std::sqrt(2.0 * static_cast<double>(pos.n - 1));
    r.se_neg = r.std_neg / std::sqrt(2.0 * static_cast<double>(neg.n - 1));
    r.ratio = r.std_pos > 0.0 ? r.std_neg / r.std_pos : 0.0;
    const double se = std::sqrt(r.se_pos * r.se_pos + r.se_neg * r.se_neg);
    r.z_score = se > 0.0 ? (r.std_neg - r.std_pos) / se : 0.0;
    return r;
}

struct DistributionAcc {
    std::vector<std::int64_t> hist;        // [tau][plane][cell]
    std::vector<std::int64_t> overlay;     // [bin][xyz], kQCoord
    std::vector<std::int64_t> purity_sum;  // [tau], kQCoord
    std::vector<std::int64_t> purity_sq;   // [tau], kQCoord
    std::vector<SpreadAcc> asym;           // [tau][pos/neg]
    std::int64_t max_abs_y_q = 0;          // kQCoord

    void merge(const DistributionAcc& o) {
        for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += o.hist[i];
        for (std::size_t i = 0; i < overlay.size(); ++i) overlay[i] += o.overlay[i];
        for (std::size_t i = 0; i < purity_sum.size(); ++i) {
            purity_sum[i] += o.purity_sum[i];
            purity_sq[i] += o.purity_sq[i];
        }
        for (std::size_t i = 0; i < asym.size(); ++i) asym[i].merge(o.asym[i]);
        max_abs_y_q = std::max(max_abs_y_q, o.max_abs_y_q);
    }
};

}  // namespace

DistributionResult state_distribution(const EnsembleSpec& spec, const DistributionOptions& opt) {
    PhysicsParams p = spec.params;
    if (opt.times.empty() || opt.planes.empty())
        throw std::invalid_argument("need at least one time and one plane");
    std::vector<int> tau_bins;
    for (const double t : opt.times) {
        if (t > p.duration + 1e-9) throw std::invalid_argument("tau beyond duration");
        tau_bins.push_back(bin_index_of(t, p.dt_record, "tau"));
    }
    const int max_bin = *std::max_element(tau_bins.begin(), tau_bins.end());
    p.duration = std::max(1, max_bin) * p.dt_record;
    p.validate();

    const ChannelSet gen_channels = build_channels(p, DetectorSubset::uvw);
    const int n_taus = static_cast<int>(tau_bins.size());
    const int n_planes = static_cast<int>(opt.planes.size());
    const int cells = opt.n_bins * opt.n_bins;
    const int n_bins = p.n_bins();
    const double cell_width = 2.0 / opt.n_bins;

    DistributionAcc init;
    init.hist.assign(static_cast<std::size_t>(n_taus * n_planes * cells), 0);
    init.overlay.assign(static_cast<std::size_t>(n_bins + 1) * 3, 0);
    init.purity_sum.assign(static_cast<std::size_t>(n_taus), 0);
    init.purity_sq.assign(static_cast<std::size_t>(n_taus), 0);
    init.asym.assign(static_cast<std::size_t>(n_taus) * 2, SpreadAcc{});

    const auto acc = run_trajectories(
        spec.n_traj, spec.workers, init, [&](DistributionAcc& a, std::uint32_t idx) {
            const GenResult g = generate(p, gen_channels, spec.master_seed, idx);
            const Trajectory traj = reconstruct(g.records, p, spec.subset);
            for (int b = 0; b <= n_bins; ++b) {
                const Bloch bl = traj.bloch_at(b);
                a.overlay[static_cast<std::size_t>(b * 3 + 0)] += fixed_of(bl.x, kQCoord);
                a.overlay[static_cast<std::size_t>(b * 3 + 1)] += fixed_of(bl.y, kQCoord);
                a.overlay[static_cast<std::size_t>(b * 3 + 2)] += fixed_of(bl.z, kQCoord);
                a.max_abs_y_q =
                    std::max(a.max_abs_y_q, std::abs(fixed_of(bl.y, kQCoord)));
            }
            for (int ti = 0; ti < n_taus; ++ti) {
                const Bloch bl = traj.bloch_at(tau_bins[static_cast<std::size_t>(ti)]);
                const QubitState& s =
                    traj.states[static_cast<std::size_t>(tau_bins[static_cast<std::size_t>(ti)])];
                for (int pi = 0; pi < n_planes; ++pi) {
                    const auto [ca, cb] =
                        plane_coords(bl, opt.planes[static_cast<std::size_t>(pi)]);
                    const int ia = coord_bin(ca, cell_width, opt.n_bins);
                    const int ib = coord_bin(cb, cell_width, opt.n_bins);
                    a.hist[static_cast<std::size_t>((ti * n_planes + pi) * cells +
                                                    ia * opt.n_bins + ib)] += 1;
                }
                a.purity_sum[static_cast<std::size_t>(ti)] += fixed_of(purity(s), kQCoord);
                a.purity_sq[static_cast<std::size_t>(ti)] +=
                    fixed_of(purity(s) * purity(s), kQCoord);
                if (bl.x > opt.asymmetry_x0)
                    a.asym[static_cast<std::size_t>(ti * 2)].add(bl.y);
                else if (bl.x < -opt.asymmetry_x0)
                    a.asym[static_cast<std::size_t>(ti * 2 + 1)].add(bl.y);
            }
        });

    DistributionResult res;
    res.n_traj = spec.n_traj;
    res.max_abs_y = fixed_to(acc.max_abs_y_q, kQCoord);
    for (int ti = 0; ti < n_taus; ++ti) {
        for (int pi = 0; pi < n_planes; ++pi) {
            HistogramGrid grid;
            grid.plane = opt.planes[static_cast<std::size_t>(pi)];
            grid.tau = tau_bins[static_cast<std::size_t>(ti)] * p.dt_record;
            grid.n_bins = opt.n_bins;
            const auto* base = acc.hist.data() + (ti * n_planes + pi) * cells;
            grid.counts.assign(base, base + cells);
            res.grids.push_back(std::move(grid));
        }
        PuritySample ps;
        ps.tau = tau_bins[static_cast<std::size_t>(ti)] * p.dt_record;
        const auto m = moments(acc.purity_sum[static_cast<std::size_t>(ti)], kQCoord,
                               acc.purity_sq[static_cast<std::size_t>(ti)], kQCoord,
                               spec.n_traj);
        ps.mean = m.mean;
        ps.se = m.se;
        res.purity.push_back(ps);
        res.asymmetry.push_back(finalize_asymmetry(
            opt.asymmetry_x0, acc.asym[static_cast<std::size_t>(ti * 2)],
            acc.asym[static_cast<std::size_t>(ti * 2 + 1)]));
    }
    for (int b = 0; b <= n_bins; ++b) {
        const double t = b * p.dt_record;
        if (t < opt.overlay_trim) continue;
        res.overlay_t.push_back(t);
        const double n = static_cast<double>(spec.n_traj);
        res.overlay_mean.push_back(
            {fixed_to(acc.overlay[static_cast<std::size_t>(b * 3 + 0)], kQCoord) / n,
             fixed_to(acc.overlay[static_cast<std::size_t>(b * 3 + 1)], kQCoord) / n,
             fixed_to(acc.overlay[static_cast<std::size_t>(b * 3 + 2)], kQCoord) / n});
    }
    return res;
}

AsymmetryResult asymmetry_statistic(const std::vector<Bloch>& points, double x0) {
    SpreadAcc pos, neg;
    for (const auto& b : points) {
        if (b.x > x0)
            pos.add(b.y);
        else if (b.x < -x0)
            neg.add(b.y);
    }
    if (pos.n < 2 || neg.n < 2)
        throw std::invalid_argument("insufficient counts on one side of the asymmetry cut");
    return finalize_asymmetry(x0, pos, neg);
}

// ---------------------------------------------------------------------------

namespace {

struct PurityAcc {
    // sums and squared sums for uvw, uv, w and the paired differences
    std::int64_t n = 0;
    std::int64_t sum[3] = {0, 0, 0};
    std::int64_t sq[3] = {0, 0, 0};
    std::int64_t dsum[2] = {0, 0};
    std::int64_t dsq[2] = {0, 0};

    void merge(const PurityAcc& o) {
        n += o.n;
        for (int i = 0; i < 3; ++i) {
            sum[i] += o.sum[i];
            sq[i] += o.sq[i];
        }
        for (int i = 0; i < 2; ++i) {
            dsum[i] += o.dsum[i];
            dsq[i] += o.dsq[i];
        }
    }
};

}  // namespace

PurityOrdering purity_ordering(const EnsembleSpec& spec, double tau) {
    PhysicsParams p = spec.params;
    if (tau > p.duration + 1e-9) throw std::invalid_argument("tau beyond duration");
    const int tau_bin = bin_index_of(tau, p.dt_record, "tau");
    p.duration = tau_bin * p.dt_record;
    p.validate();

    const ChannelSet gen_channels = build_channels(p, DetectorSubset::uvw);
    const DetectorSubset subsets[3] = {DetectorSubset::uvw, DetectorSubset::uv,
                                       DetectorSubset::w};

    const auto acc = run_trajectories(
        spec.n_traj, spec.workers, PurityAcc{}, [&](PurityAcc& a, std::uint32_t idx) {
            const GenResult g = generate(p, gen_channels, spec.master_seed, idx);
            double pur[3];
            for (int si = 0; si < 3; ++si) {
                const Trajectory traj = reconstruct(g.records, p, subsets[si]);
                pur[si] = purity(traj.states.back());
            }
            ++a.n;
            for (int si = 0; si < 3; ++si) {
                a.sum[si] += fixed_of(pur[si], kQCoord);
                a.sq[si] += fixed_of(pur[si] * pur[si], kQCoord);
            }
            const double d[2] = {pur[0] - pur[1], pur[0] - pur[2]};
            for (int i = 0; i < 2; ++i) {
                a.dsum[i] += fixed_of(d[i], kQCoord);
                a.dsq[i] += fixed_of(d[i] * d[i], kQCoord);
            }
        });

    PurityOrdering res;
    res.tau = tau_bin * p.dt_record;
    const MomentStats m0 = moments(acc.sum[0], kQCoord, acc.sq[0], kQCoord, acc.n);
    const MomentStats m1 = moments(acc.sum[1], kQCoord, acc.sq[1], kQCoord, acc.n);
    const MomentStats m2 = moments(acc.sum[2], kQCoord, acc.sq[2], kQCoord, acc.n);
    res.mean_uvw = m0.mean;
    res.se_uvw = m0.se;
    res.mean_uv = m1.mean;
    res.se_uv = m1.se;
    res.mean_w = m2.mean;
    res.se_w = m2.se;
    const MomentStats d0 = moments(acc.dsum[0], kQCoord, acc.dsq[0], kQCoord, acc.n);
    const MomentStats d1 = moments(acc.dsum[1], kQCoord, acc.dsq[1], kQCoord, acc.n);
    res.diff_uv = d0.mean;
    res.diff_uv_se = d0.se;
    res.diff_w = d1.mean;
    res.diff_w_se = d1.se;
    return res;
}

// ---------------------------------------------------------------------------

int EtaGrid::nf() const {
    return static_cast<int>(std::llround((eta_f_max - eta_f_min) / eta_f_step)) + 1;
}

int EtaGrid::nd() const {
    return static_cast<int>(std::llround((eta_d_max - eta_d_min) / eta_d_step)) + 1;
}

namespace {

struct SweepAcc {
    // [grid][time][axis][bin]: count, per-trajectory mean outcome and its
    // square (kQCoord fixed point), coordinate sum (kQCoord)
    std::vector<std::int64_t> count, outcome, outcome2, coord;

    void merge(const SweepAcc& o) {
        for (std::size_t i = 0; i < count.size(); ++i) {
            count[i] += o.count[i];
            outcome[i] += o.outcome[i];
            outcome2[i] += o.outcome2[i];
            coord[i] += o.coord[i];
        }
    }
};

}  // namespace

SweepResult efficiency_sweep(const EnsembleSpec& spec, const SweepOptions& opt) {
    PhysicsParams p = spec.params;
    const EtaGrid& grid = opt.grid;
    if (grid.eta_f_min < 0.0 || grid.eta_f_max > 1.0 || grid.eta_d_min < 0.0 ||
        grid.eta_d_max > 1.0)
        throw std::invalid_argument("efficiency grid outside [0, 1]^2");
    if (opt.times.empty()) throw std::invalid_argument("sweep needs checkpoint times");

    std::vector<int> t_bins;
    for (const double t : opt.times) {
        if (t > p.duration + 1e-9) throw std::invalid_argument("checkpoint beyond duration");
        t_bins.push_back(bin_index_of(t, p.dt_record, "checkpoint"));
    }
    std::sort(t_bins.begin(), t_bins.end());
    const int max_bin = t_bins.back();
    p.duration = max_bin * p.dt_record;
    p.validate();

    const ChannelSet gen_channels = omniscient_channels(p);
    const int nf = grid.nf(), nd = grid.nd(), ng = nf * nd;
    const int nt = static_cast<int>(t_bins.size());
    const int nb = static_cast<int>(std::llround(2.0 / opt.bin_width));
    const int n_readouts = std::max(1, opt.readouts);

    PhysicsParams fp_base = p;
    if (opt.filter_dt_int > 0.0) {
        fp_base.dt_int = opt.filter_dt_int;
        fp_base.validate();
    }
    const int n_sub = fp_base.n_substeps();

    // Filter steppers depend only on the grid point; build them once.
    std::vector<Stepper> steppers;
    steppers.reserve(static_cast<std::size_t>(ng));
    for (int fi = 0; fi < nf; ++fi) {
        for (int di = 0; di < nd; ++di) {
            PhysicsParams fp = fp_base;
            fp.eta_f = grid.eta_f(fi);
            fp.eta_d = grid.eta_d(di);
            steppers.emplace_back(build_channels(fp, spec.subset), fp.omega);
        }
    }

    SweepAcc init;
    const std::size_t cells = static_cast<std::size_t>(ng) * nt * 3 * nb;
    init.count.assign(cells, 0);
    init.outcome.assign(cells, 0);
    init.outcome2.assign(cells, 0);
    init.coord.assign(cells, 0);

    const auto acc = run_trajectories(
        spec.n_traj, spec.workers, init, [&](SweepAcc& a, std::uint32_t idx) {
            const GenResult g = generate(p, gen_channels, spec.master_seed, idx);
            RandomStream readout(spec.master_seed, idx, StreamPurpose::readout);
            std::vector<double> out(static_cast<std::size_t>(nt) * 3);
            for (int ti = 0; ti < nt; ++ti) {
                const QubitState& omni =
                    g.conditioned.states[static_cast<std::size_t>(t_bins[static_cast<std::size_t>(ti)])];
                for (int ax = 0; ax < 3; ++ax) {
                    int sum = 0;
                    for (int rep = 0; rep < n_readouts; ++rep)
                        sum += projective_readout(omni, static_cast<Axis>(ax), readout);
                    out[static_cast<std::size_t>(ti * 3 + ax)] =
                        static_cast<double>(sum) / n_readouts;
                }
            }
            std::vector<double> innov;
            for (int gi = 0; gi < ng; ++gi) {
                const Stepper& st = steppers[static_cast<std::size_t>(gi)];
                innov.resize(static_cast<std::size_t>(st.n_noise()));
                QubitState state = p.initial_state;
                int ti = 0;
                for (int b = 0; b < g.records.n_bins && ti < nt; ++b) {
                    double sample[3];
                    for (int c = 0; c < 3; ++c)
                        sample[c] = g.records.column(c)[static_cast<std::size_t>(b)];
                    state = filter_apply_bin(state, st, sample, p.dt_record, n_sub,
                                             InnovationMode::substep, innov);
                    while (ti < nt && t_bins[static_cast<std::size_t>(ti)] == b + 1) {
                        const Bloch fb = bloch_of(state);
                        for (int ax = 0; ax < 3; ++ax) {
                            const double c = component(fb, static_cast<Axis>(ax));
                            const int bin = coord_bin(c, opt.bin_width, nb);
                            const std::size_t at = static_cast<std::size_t>(
                                ((gi * nt + ti) * 3 + ax) * nb + bin);
                            const double o = out[static_cast<std::size_t>(ti * 3 + ax)];
                            a.count[at] += 1;
                            a.outcome[at] += fixed_of(o, kQCoord);
                            a.outcome2[at] += fixed_of(o * o, kQCoord);
                            a.coord[at] += fixed_of(c, kQCoord);
                        }
                        ++ti;
                    }
                }
            }
        });

    SweepResult res;
    res.points.reserve(static_cast<std::size_t>(ng));
    for (int fi = 0; fi < nf; ++fi) {
        for (int di = 0; di < nd; ++di) {
            const int gi = fi * nd + di;
            SweepPoint pt;
            pt.eta_f = grid.eta_f(fi);
            pt.eta_d = grid.eta_d(di);
            for (int ti = 0; ti < nt; ++ti) {
                for (int ax = 0; ax < 3; ++ax) {
                    for (int bi = 0; bi < nb; ++bi) {
                        const std::size_t at = static_cast<std::size_t>(
                            ((gi * nt + ti) * 3 + ax) * nb + bi);
                        const std::int64_t n = acc.count[at];
                        if (n < opt.min_count) continue;
                        const auto st =
                            moments(acc.outcome[at], kQCoord, acc.outcome2[at], kQCoord, n);
                        const double c = fixed_to(acc.coord[at], kQCoord) / static_cast<double>(n);
                        if (std::abs(c) > opt.coord_cap) continue;
                        const double r = st.mean - c;
                        const double var =
                            std::max(st.var, 1.0 / (static_cast<double>(n) * n_readouts));
                        pt.chi2 += r * r * static_cast<double>(n) / var;
                    }
                }
            }
            res.points.push_back(pt);
        }
    }
    res.best = *std::min_element(
        res.points.begin(), res.points.end(),
        [](const SweepPoint& a, const SweepPoint& b) { return a.chi2 < b.chi2; });
    for (const auto& pt : res.points) {
        if (pt.chi2 <= res.best.chi2 + 2.30) res.sigma1.push_back(pt);
    }
    return res;
}

// ---------------------------------------------------------------------------

const char* config_grid_version() { return "grid-v1"; }

std::vector<GridPoint> config_grid() {
    // Omega/2pi linear over [0, (2 us)^-1], gamma_d log-spaced over
    // [(30 us)^-1, (0.3 us)^-1]; a stand-in grid, not the published list.
    std::vector<GridPoint> pts;
    const double gd_min = 1.0 / 30.0;
    const double ratio = std::pow(100.0, 1.0 / 5.0);
    for (int i = 0; i < 5; ++i) {
        const double rabi = 0.125 * i;
        for (int j = 0; j < 6; ++j) {
            GridPoint gp;
            gp.name = "o" + std::to_string(i) + "d" + std::to_string(j);
            gp.rabi_per_us = rabi;
            gp.gamma_d = gd_min * std::pow(ratio, j);
            pts.push_back(std::move(gp));
        }
    }
    return pts;
}

}  // namespace qtraj
