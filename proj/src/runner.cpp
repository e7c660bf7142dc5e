#include "qtraj/runner.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace qtraj {

namespace {

namespace fs = std::filesystem;

std::string g10(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Produces one row of doubles per trajectory in parallel and hands rows to the
// sink strictly in trajectory order, so files are identical for any worker
// count.
void ordered_rows(std::uint32_t n_traj, int workers,
                  const std::function<std::vector<double>(std::uint32_t)>& make_row,
                  const std::function<void(std::uint32_t, const std::vector<double>&)>& sink) {
    if (workers <= 1) {
        for (std::uint32_t i = 0; i < n_traj; ++i) {
            const auto row = make_row(i);
            sink(i, row);
        }
        return;
    }
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::uint32_t, std::vector<double>> ready;
    std::atomic<std::uint32_t> next_index{0};
    std::uint32_t next_write = 0;
    std::exception_ptr failure;
    constexpr std::uint32_t kMaxPending = 1024;

    auto worker = [&]() {
        try {
            for (;;) {
                const std::uint32_t i = next_index.fetch_add(1);
                if (i >= n_traj) break;
                auto row = make_row(i);
                std::unique_lock<std::mutex> lk(mu);
                cv.wait(lk, [&] { return failure || i < next_write + kMaxPending; });
                if (failure) break;
                ready.emplace(i, std::move(row));
                cv.notify_all();
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(mu);
            if (!failure) failure = std::current_exception();
            cv.notify_all();
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);

    try {
        std::unique_lock<std::mutex> lk(mu);
        while (next_write < n_traj) {
            cv.wait(lk, [&] { return failure || ready.count(next_write) > 0; });
            if (failure) break;
            auto node = ready.extract(next_write);
            lk.unlock();
            sink(next_write, node.mapped());
            lk.lock();
            ++next_write;
            cv.notify_all();
        }
    } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!failure) failure = std::current_exception();
        cv.notify_all();
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

EnsembleSpec spec_of(const RunConfig& cfg) {
    EnsembleSpec spec;
    spec.params = cfg.phys;
    spec.n_traj = cfg.n_traj;
    spec.master_seed = cfg.master_seed;
    spec.subset = cfg.subset;
    spec.workers = cfg.workers;
    return spec;
}

void write_summary(const std::string& dir, const nlohmann::json& lines_obj) {
    std::ofstream out(fs::path(dir) / "summary.ndjson", std::ios::binary);
    if (!out) throw std::runtime_error("cannot open summary.ndjson");
    if (lines_obj.is_array()) {
        for (const auto& j : lines_obj) out << j.dump() << '\n';
    } else {
        out << lines_obj.dump() << '\n';
    }
    out.flush();
    if (!out) throw std::runtime_error("write failed: summary.ndjson");
}

void run_generate(const RunConfig& cfg, RunManifest& m) {
    const PhysicsParams& p = cfg.phys;
    const ChannelSet channels = omniscient_channels(p);
    const int n_bins = p.n_bins();
    const std::size_t rec_elems = static_cast<std::size_t>(n_bins) * 3;
    const std::size_t traj_elems = (static_cast<std::size_t>(n_bins) + 1) * 3;

    if (cfg.format == "csv" && cfg.n_traj > 1000)
        throw ConfigError(0, "csv record export is limited to n_traj <= 1000; use format = bin");
    if (cfg.format == "ndjson")
        throw ConfigError(0, "record payloads support format csv or bin");

    auto make_row = [&](std::uint32_t idx) {
        const GenResult g = generate(p, channels, cfg.master_seed, idx);
        std::vector<double> row(rec_elems + traj_elems);
        for (int b = 0; b < n_bins; ++b)
            for (int c = 0; c < 3; ++c)
                row[static_cast<std::size_t>(b * 3 + c)] = g.records.column(c)[static_cast<std::size_t>(b)];
        for (int b = 0; b <= n_bins; ++b) {
            const Bloch bl = g.conditioned.bloch_at(b);
            row[rec_elems + static_cast<std::size_t>(b * 3 + 0)] = bl.x;
            row[rec_elems + static_cast<std::size_t>(b * 3 + 1)] = bl.y;
            row[rec_elems + static_cast<std::size_t>(b * 3 + 2)] = bl.z;
        }
        return row;
    };

    if (cfg.format == "bin") {
        RecordFileHeader rh;
        rh.n_traj = cfg.n_traj;
        rh.n_bins = static_cast<std::uint32_t>(n_bins);
        rh.dt_record = p.dt_record;
        RecordFileHeader th;
        th.n_traj = cfg.n_traj;
        th.n_bins = static_cast<std::uint32_t>(n_bins) + 1;
        th.dt_record = p.dt_record;
        RecordFileWriter rec_w((fs::path(cfg.out_dir) / "records.bin").string(), rh);
        RecordFileWriter traj_w((fs::path(cfg.out_dir) / "trajectories.bin").string(), th);
        ordered_rows(cfg.n_traj, cfg.workers, make_row,
                     [&](std::uint32_t, const std::vector<double>& row) {
                         rec_w.write_row(row.data(), rec_elems);
                         traj_w.write_row(row.data() + rec_elems, traj_elems);
                     });
        rec_w.close();
        traj_w.close();
        note_output(m, cfg.out_dir, "records.bin");
        note_output(m, cfg.out_dir, "trajectories.bin");
        return;
    }

    ordered_rows(cfg.n_traj, cfg.workers, make_row,
                 [&](std::uint32_t idx, const std::vector<double>& row) {
                     char name[64];
                     std::snprintf(name, sizeof(name), "records_%05u.csv", idx);
                     std::ofstream out(fs::path(cfg.out_dir) / name, std::ios::binary);
                     out << "t_us,u,v,w\n";
                     for (int b = 0; b < n_bins; ++b) {
                         out << g17(b * p.dt_record);
                         for (int c = 0; c < 3; ++c)
                             out << ',' << g17(row[static_cast<std::size_t>(b * 3 + c)]);
                         out << '\n';
                     }
                     if (!out) throw std::runtime_error("write failed");
                     std::snprintf(name, sizeof(name), "trajectory_%05u.csv", idx);
                     std::ofstream tout(fs::path(cfg.out_dir) / name, std::ios::binary);
                     tout << "t_us,x,y,z\n";
                     for (int b = 0; b <= n_bins; ++b) {
                         tout << g17(b * p.dt_record);
                         for (int c = 0; c < 3; ++c)
                             tout << ',' << g17(row[rec_elems + static_cast<std::size_t>(b * 3 + c)]);
                         tout << '\n';
                     }
                     if (!tout) throw std::runtime_error("write failed");
                 });
    for (std::uint32_t idx = 0; idx < cfg.n_traj; ++idx) {
        char name[64];
        std::snprintf(name, sizeof(name), "records_%05u.csv", idx);
        note_output(m, cfg.out_dir, name);
        std::snprintf(name, sizeof(name), "trajectory_%05u.csv", idx);
        note_output(m, cfg.out_dir, name);
    }
}

void run_reconstruct(const RunConfig& cfg, RunManifest& m) {
    if (cfg.records_path.empty())
        throw ConfigError(0, "reconstruct mode needs --records pointing at a records.bin file");
    RecordFileReader reader(cfg.records_path);
    const auto& h = reader.header();
    if (std::abs(h.dt_record - cfg.phys.dt_record) > 1e-12)
        throw ConfigError(0, "records dt_record does not match the configuration");
    const std::uint32_t n = std::min<std::uint32_t>(cfg.n_traj, h.n_traj);
    const int n_bins = static_cast<int>(h.n_bins);
    const double rec_duration = h.n_bins * h.dt_record;
    PhysicsParams p = cfg.phys;
    if (rec_duration < p.duration - 1e-9) p.duration = rec_duration;
    const std::size_t traj_elems = (static_cast<std::size_t>(n_bins) + 1) * 3;

    RecordFileHeader th;
    th.n_traj = n;
    th.n_bins = h.n_bins + 1;
    th.dt_record = h.dt_record;
    RecordFileWriter traj_w((fs::path(cfg.out_dir) / "trajectories.bin").string(), th);
    ordered_rows(n, cfg.workers,
                 [&](std::uint32_t idx) {
                     const RecordSet r = reader.read_records(idx);
                     const Trajectory traj = reconstruct(r, p, cfg.subset, cfg.innovation_mode);
                     std::vector<double> row(traj_elems);
                     for (int b = 0; b <= n_bins; ++b) {
                         const Bloch bl = traj.bloch_at(b);
                         row[static_cast<std::size_t>(b * 3 + 0)] = bl.x;
                         row[static_cast<std::size_t>(b * 3 + 1)] = bl.y;
                         row[static_cast<std::size_t>(b * 3 + 2)] = bl.z;
                     }
                     return row;
                 },
                 [&](std::uint32_t, const std::vector<double>& row) {
                     traj_w.write_row(row.data(), traj_elems);
                 });
    traj_w.close();
    note_output(m, cfg.out_dir, "trajectories.bin");
    m.n_traj_completed = n;
}

void run_average(const RunConfig& cfg, RunManifest& m, const std::string& suffix = "",
                 bool with_summary = true) {
    const RawAverageResult res = raw_average_tomography(spec_of(cfg));
    const std::string file = "average" + suffix + ".csv";
    write_average_csv((fs::path(cfg.out_dir) / file).string(), res);
    note_output(m, cfg.out_dir, file);
    if (!with_summary) return;
    nlohmann::json j;
    j["type"] = "average";
    j["n_traj"] = res.n_traj;
    j["columns_present"] = {res.u.present, res.v.present, res.w.present};
    write_summary(cfg.out_dir, j);
    note_output(m, cfg.out_dir, "summary.ndjson");
}

void run_validate(const RunConfig& cfg, RunManifest& m) {
    ValidationOptions opt;
    opt.T = cfg.validation_t;
    opt.bin_width = cfg.validation_bin_width;
    opt.min_count = cfg.validation_min_count;
    const ValidationResult res = validate_tomography(spec_of(cfg), opt);
    write_validation_csv((fs::path(cfg.out_dir) / "validation.csv").string(), res);
    note_output(m, cfg.out_dir, "validation.csv");
    nlohmann::json lines = nlohmann::json::array();
    const char* names[3] = {"x", "y", "z"};
    for (int ax = 0; ax < 3; ++ax) {
        const auto& av = res.per_axis[ax];
        nlohmann::json j;
        j["type"] = "validation_fit";
        j["axis"] = names[ax];
        j["T_us"] = av.T;
        j["slope"] = av.slope;
        j["slope_se"] = av.slope_se;
        j["intercept"] = av.intercept;
        j["intercept_se"] = av.intercept_se;
        j["chi2_identity"] = av.chi2_identity;
        j["n_fit_bins"] = av.n_fit_bins;
        lines.push_back(j);
    }
    write_summary(cfg.out_dir, lines);
    note_output(m, cfg.out_dir, "summary.ndjson");
}

void run_histogram(const RunConfig& cfg, RunManifest& m) {
    DistributionOptions opt;
    opt.times = cfg.histogram_times.empty() ? std::vector<double>{cfg.phys.duration}
                                            : cfg.histogram_times;
    opt.planes = cfg.histogram_planes;
    opt.n_bins = cfg.histogram_bins;
    opt.overlay_trim = cfg.overlay_trim;
    const DistributionResult res = state_distribution(spec_of(cfg), opt);
    write_histogram_csv((fs::path(cfg.out_dir) / "histogram.csv").string(), res.grids);
    write_overlay_csv((fs::path(cfg.out_dir) / "overlay.csv").string(), res.overlay_t,
                      res.overlay_mean);
    write_purity_csv((fs::path(cfg.out_dir) / "purity.csv").string(), cfg.subset, res.purity);
    note_output(m, cfg.out_dir, "histogram.csv");
    note_output(m, cfg.out_dir, "overlay.csv");
    note_output(m, cfg.out_dir, "purity.csv");
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& a : res.asymmetry) {
        nlohmann::json j;
        j["type"] = "asymmetry";
        j["x0"] = a.x0;
        j["n_pos"] = a.n_pos;
        j["n_neg"] = a.n_neg;
        j["std_y_pos_x"] = a.std_pos;
        j["std_y_neg_x"] = a.std_neg;
        j["ratio"] = a.ratio;
        j["z_score"] = a.z_score;
        lines.push_back(j);
    }
    nlohmann::json j;
    j["type"] = "distribution";
    j["n_traj"] = res.n_traj;
    j["max_abs_y"] = res.max_abs_y;
    j["subset"] = std::string(to_string(cfg.subset));
    lines.push_back(j);
    write_summary(cfg.out_dir, lines);
    note_output(m, cfg.out_dir, "summary.ndjson");
}

void run_sweep(const RunConfig& cfg, RunManifest& m) {
    SweepOptions opt = cfg.sweep;
    if (!cfg.grid_file.empty()) opt = parse_sweep_file(read_text_file(cfg.grid_file));
    const SweepResult res = efficiency_sweep(spec_of(cfg), opt);
    write_sweep_csv((fs::path(cfg.out_dir) / "sweep.csv").string(), res);
    note_output(m, cfg.out_dir, "sweep.csv");
    nlohmann::json j;
    j["type"] = "sweep";
    j["best_eta_f"] = res.best.eta_f;
    j["best_eta_d"] = res.best.eta_d;
    j["best_chi2"] = res.best.chi2;
    j["n_grid"] = res.points.size();
    j["n_in_1sigma"] = res.sigma1.size();
    write_summary(cfg.out_dir, j);
    note_output(m, cfg.out_dir, "summary.ndjson");
}

void run_grid(const RunConfig& cfg, RunManifest& m) {
    std::vector<GridPoint> points;
    std::string version;
    if (!cfg.grid_file.empty()) {
        const GridFile gf = parse_grid_file(read_text_file(cfg.grid_file));
        points = gf.points;
        version = gf.version;
    } else {
        points = config_grid();
        version = config_grid_version();
    }
    nlohmann::json lines = nlohmann::json::array();
    for (const auto& gp : points) {
        RunConfig sub = cfg;
        sub.phys.omega = kTwoPi * gp.rabi_per_us;
        sub.phys.gamma_d = gp.gamma_d;
        sub.phys.validate();
        run_average(sub, m, "_" + gp.name, /*with_summary=*/false);
        nlohmann::json j;
        j["type"] = "grid_point";
        j["name"] = gp.name;
        j["rabi_per_us"] = gp.rabi_per_us;
        j["gamma_d_per_us"] = gp.gamma_d;
        j["file"] = "average_" + gp.name + ".csv";
        lines.push_back(j);
    }
    nlohmann::json head;
    head["type"] = "grid";
    head["version"] = version;
    head["n_points"] = points.size();
    lines.insert(lines.begin(), head);
    std::ofstream out(fs::path(cfg.out_dir) / "grid_index.ndjson", std::ios::binary);
    for (const auto& j : lines) out << j.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: grid_index.ndjson");
    note_output(m, cfg.out_dir, "grid_index.ndjson");
}

}  // namespace

std::string to_flat_text(const RunConfig& cfg) {
    std::ostringstream os;
    os << "mode = " << to_string(cfg.mode) << '\n';
    if (!cfg.preset.empty()) os << "preset = " << cfg.preset << '\n';
    os << "gamma1_per_us = " << g17(cfg.phys.gamma1) << '\n'
       << "gamma_d_per_us = " << g17(cfg.phys.gamma_d) << '\n'
       << "gamma_phi_per_us = " << g17(cfg.phys.gamma_phi) << '\n'
       << "rabi_per_us = " << g17(cfg.phys.omega / kTwoPi) << '\n'
       << "eta_f = " << g17(cfg.phys.eta_f) << '\n'
       << "eta_d = " << g17(cfg.phys.eta_d) << '\n'
       << "dt_record_us = " << g17(cfg.phys.dt_record) << '\n'
       << "dt_int_us = " << g17(cfg.phys.dt_int) << '\n'
       << "duration_us = " << g17(cfg.phys.duration) << '\n'
       << "w_record_sign = " << g10(cfg.phys.w_record_sign) << '\n'
       << "n_traj = " << cfg.n_traj << '\n'
       << "master_seed = " << cfg.master_seed << '\n'
       << "subset = " << to_string(cfg.subset) << '\n'
       << "workers = " << cfg.workers << '\n'
       << "format = " << cfg.format << '\n';
    const Bloch b0 = bloch_of(cfg.phys.initial_state);
    os << "initial_x = " << g17(b0.x) << '\n'
       << "initial_y = " << g17(b0.y) << '\n'
       << "initial_z = " << g17(b0.z) << '\n';
    return os.str();
}

RunManifest run(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);

    RunManifest m;
    m.mode = std::string(to_string(cfg.mode));
    m.platform = platform_fingerprint();
    m.master_seed = cfg.master_seed;
    m.n_traj_completed = cfg.n_traj;
    m.config_snapshot = to_flat_text(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    try {
        switch (cfg.mode) {
            case RunMode::generate: run_generate(cfg, m); break;
            case RunMode::reconstruct: run_reconstruct(cfg, m); break;
            case RunMode::average: run_average(cfg, m); break;
            case RunMode::validate: run_validate(cfg, m); break;
            case RunMode::histogram: run_histogram(cfg, m); break;
            case RunMode::sweep: run_sweep(cfg, m); break;
            case RunMode::grid: run_grid(cfg, m); break;
        }
    } catch (...) {
        // Mark whatever was noted as the failure state and persist the
        // manifest before propagating.
        m.valid = false;
        m.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        try {
            write_manifest(cfg.out_dir, m);
        } catch (...) {
        }
        throw;
    }
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(cfg.out_dir, m);
    return m;
}

}  // namespace qtraj
