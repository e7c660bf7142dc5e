#include "qtraj/export.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace qtraj {

namespace {

namespace fs = std::filesystem;

// Shortest round-trip formatting for data values.
std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_g10(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex_of_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016" PRIx64, h);
    return hex;
}

// --- binary record files ---------------------------------------------------

namespace {

void pack_header(const RecordFileHeader& h, char out[32]) {
    std::memset(out, 0, 32);
    std::memcpy(out, "QTRJ", 4);
    std::memcpy(out + 4, &h.version, 4);
    std::memcpy(out + 8, &h.n_traj, 4);
    std::memcpy(out + 12, &h.n_bins, 4);
    std::memcpy(out + 16, &h.n_cols, 4);
    std::memcpy(out + 20, &h.dt_record, 8);
}

RecordFileHeader unpack_header(const char in[32]) {
    if (std::memcmp(in, "QTRJ", 4) != 0)
        throw std::runtime_error("not a QTRJ record file");
    RecordFileHeader h;
    std::memcpy(&h.version, in + 4, 4);
    std::memcpy(&h.n_traj, in + 8, 4);
    std::memcpy(&h.n_bins, in + 12, 4);
    std::memcpy(&h.n_cols, in + 16, 4);
    std::memcpy(&h.dt_record, in + 20, 8);
    if (h.version != 1) throw std::runtime_error("unsupported QTRJ version");
    return h;
}

}  // namespace

struct RecordFileWriter::Impl {
    std::ofstream out;
    std::string path;
    std::uint64_t rows_written = 0;
    RecordFileHeader header;
};

RecordFileWriter::RecordFileWriter(const std::string& path, const RecordFileHeader& header)
    : impl_(new Impl) {
    impl_->path = path;
    impl_->header = header;
    impl_->out = open_out(path);
    char buf[32];
    pack_header(header, buf);
    impl_->out.write(buf, 32);
}

RecordFileWriter::~RecordFileWriter() {
    delete impl_;
}

void RecordFileWriter::write_row(const double* row, std::size_t n) {
    if (n != static_cast<std::size_t>(impl_->header.n_bins) * impl_->header.n_cols)
        throw std::invalid_argument("record row size mismatch");
    impl_->out.write(reinterpret_cast<const char*>(row),
                     static_cast<std::streamsize>(n * sizeof(double)));
    ++impl_->rows_written;
}

void RecordFileWriter::close() {
    if (impl_->rows_written != impl_->header.n_traj)
        throw std::runtime_error("record file row count mismatch");
    finish(impl_->out, impl_->path);
    impl_->out.close();
}

struct RecordFileReader::Impl {
    mutable std::ifstream in;
    RecordFileHeader header;
    std::string path;
};

RecordFileReader::RecordFileReader(const std::string& path) : impl_(new Impl) {
    impl_->path = path;
    impl_->in.open(path, std::ios::binary);
    if (!impl_->in) throw std::runtime_error("cannot open record file: " + path);
    char buf[32];
    impl_->in.read(buf, 32);
    if (!impl_->in) throw std::runtime_error("truncated record file header: " + path);
    impl_->header = unpack_header(buf);
}

RecordFileReader::~RecordFileReader() {
    delete impl_;
}

const RecordFileHeader& RecordFileReader::header() const { return impl_->header; }

void RecordFileReader::read_row(std::uint32_t index, double* row, std::size_t n) const {
    const auto& h = impl_->header;
    if (index >= h.n_traj) throw std::out_of_range("trajectory index beyond record file");
    if (n != static_cast<std::size_t>(h.n_bins) * h.n_cols)
        throw std::invalid_argument("record row size mismatch");
    const std::uint64_t offset = 32ull + static_cast<std::uint64_t>(index) * n * sizeof(double);
    impl_->in.seekg(static_cast<std::streamoff>(offset));
    impl_->in.read(reinterpret_cast<char*>(row), static_cast<std::streamsize>(n * sizeof(double)));
    if (!impl_->in) throw std::runtime_error("truncated record file: " + impl_->path);
}

RecordSet RecordFileReader::read_records(std::uint32_t index) const {
    const auto& h = impl_->header;
    if (h.n_cols != 3) throw std::runtime_error("record file does not hold u,v,w columns");
    std::vector<double> row(static_cast<std::size_t>(h.n_bins) * 3);
    read_row(index, row.data(), row.size());
    RecordSet r;
    r.n_bins = static_cast<int>(h.n_bins);
    r.dt_record = h.dt_record;
    r.trajectory_index = index;
    for (int c = 0; c < 3; ++c) {
        auto& col = r.column(c);
        col.resize(h.n_bins);
        for (std::uint32_t b = 0; b < h.n_bins; ++b)
            col[b] = row[static_cast<std::size_t>(b) * 3 + static_cast<std::size_t>(c)];
    }
    return r;
}

void write_records_bin(const std::string& path, const std::vector<RecordSet>& records) {
    if (records.empty()) throw std::invalid_argument("no records to write");
    RecordFileHeader h;
    h.n_traj = static_cast<std::uint32_t>(records.size());
    h.n_bins = static_cast<std::uint32_t>(records.front().n_bins);
    h.dt_record = records.front().dt_record;
    RecordFileWriter w(path, h);
    std::vector<double> row(static_cast<std::size_t>(h.n_bins) * 3);
    for (const auto& r : records) {
        for (std::uint32_t b = 0; b < h.n_bins; ++b)
            for (int c = 0; c < 3; ++c)
                row[static_cast<std::size_t>(b) * 3 + static_cast<std::size_t>(c)] =
                    r.column(c)[b];
        w.write_row(row.data(), row.size());
    }
    w.close();
}

// --- CSV ---------------------------------------------------------------------

void write_records_csv(const std::string& path, const RecordSet& records) {
    auto out = open_out(path);
    out << "t_us,u,v,w\n";
    for (int b = 0; b < records.n_bins; ++b) {
        out << fmt_g17(b * records.dt_record) << ',' << fmt_g17(records.u[static_cast<std::size_t>(b)])
            << ',' << fmt_g17(records.v[static_cast<std::size_t>(b)]) << ','
            << fmt_g17(records.w[static_cast<std::size_t>(b)]) << '\n';
    }
    finish(out, path);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    auto out = open_out(path);
    out << "t_us,x,y,z,purity\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const Bloch b = bloch_of(traj.states[i]);
        out << fmt_g17(traj.times[i]) << ',' << fmt_g17(b.x) << ',' << fmt_g17(b.y) << ','
            << fmt_g17(b.z) << ',' << fmt_g17(purity(traj.states[i])) << '\n';
    }
    finish(out, path);
}

void write_average_csv(const std::string& path, const RawAverageResult& res) {
    auto out = open_out(path);
    out << "t_us,u_tilde,v_tilde,w_tilde,se_u,se_v,se_w,x_me,y_me,z_me\n";
    for (std::size_t b = 0; b < res.t.size(); ++b) {
        out << fmt_g10(res.t[b]);
        for (int c = 0; c < 3; ++c) {
            const auto& col = res.column(c);
            out << ',' << (col.present ? fmt_g10(col.mean[b]) : std::string());
        }
        for (int c = 0; c < 3; ++c) {
            const auto& col = res.column(c);
            out << ',' << (col.present ? fmt_g10(col.se[b]) : std::string());
        }
        out << ',' << fmt_g10(res.me[b].x) << ',' << fmt_g10(res.me[b].y) << ','
            << fmt_g10(res.me[b].z) << '\n';
    }
    finish(out, path);
}

void write_validation_csv(const std::string& path, const ValidationResult& res) {
    auto out = open_out(path);
    out << "axis,T_us,center,count,mean_outcome,se,mean_coord,in_fit\n";
    const char* names[3] = {"x", "y", "z"};
    for (int ax = 0; ax < 3; ++ax) {
        const auto& av = res.per_axis[ax];
        for (const auto& b : av.bins) {
            if (b.count == 0) continue;
            out << names[ax] << ',' << fmt_g10(av.T) << ',' << fmt_g10(b.center) << ','
                << b.count << ',' << fmt_g10(b.mean_outcome) << ',' << fmt_g10(b.se) << ','
                << fmt_g10(b.mean_coord) << ',' << (b.in_fit ? 1 : 0) << '\n';
        }
    }
    finish(out, path);
}

void write_histogram_csv(const std::string& path, const std::vector<HistogramGrid>& grids) {
    auto out = open_out(path);
    out << "plane,tau_us,x_center,y_center,count\n";
    for (const auto& g : grids) {
        const double w = 2.0 / g.n_bins;
        for (int ia = 0; ia < g.n_bins; ++ia) {
            for (int ib = 0; ib < g.n_bins; ++ib) {
                const std::int64_t c = g.at(ia, ib);
                if (c == 0) continue;
                out << to_string(g.plane) << ',' << fmt_g10(g.tau) << ','
                    << fmt_g10(-1.0 + (ia + 0.5) * w) << ',' << fmt_g10(-1.0 + (ib + 0.5) * w)
                    << ',' << c << '\n';
            }
        }
    }
    finish(out, path);
}

void write_overlay_csv(const std::string& path, const std::vector<double>& t,
                       const std::vector<Bloch>& mean) {
    auto out = open_out(path);
    out << "t_us,x_mean,y_mean,z_mean\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << fmt_g10(t[i]) << ',' << fmt_g10(mean[i].x) << ',' << fmt_g10(mean[i].y) << ','
            << fmt_g10(mean[i].z) << '\n';
    }
    finish(out, path);
}

void write_purity_csv(const std::string& path, DetectorSubset subset,
                      const std::vector<PuritySample>& purity) {
    auto out = open_out(path);
    out << "subset,tau_us,mean_purity,se\n";
    for (const auto& p : purity) {
        out << to_string(subset) << ',' << fmt_g10(p.tau) << ',' << fmt_g10(p.mean) << ','
            << fmt_g10(p.se) << '\n';
    }
    finish(out, path);
}

void write_sweep_csv(const std::string& path, const SweepResult& res) {
    auto out = open_out(path);
    out << "eta_f,eta_d,chi2,in_1sigma\n";
    for (const auto& pt : res.points) {
        const bool in_region = pt.chi2 <= res.best.chi2 + 2.30;
        out << fmt_g10(pt.eta_f) << ',' << fmt_g10(pt.eta_d) << ',' << fmt_g10(pt.chi2) << ','
            << (in_region ? 1 : 0) << '\n';
    }
    finish(out, path);
}

// --- manifest ------------------------------------------------------------

std::string platform_fingerprint() {
    std::string s;
#if defined(__linux__)
    s += "linux";
#elif defined(__APPLE__)
    s += "darwin";
#else
    s += "other";
#endif
#if defined(__x86_64__)
    s += "-x86_64";
#elif defined(__aarch64__)
    s += "-aarch64";
#endif
#if defined(__clang__)
    s += "-clang" + std::to_string(__clang_major__);
#elif defined(__GNUC__)
    s += "-gcc" + std::to_string(__GNUC__);
#endif
    return s;
}

void note_output(RunManifest& m, const std::string& dir, const std::string& file, bool valid) {
    ManifestOutput o;
    o.file = file;
    o.valid = valid;
    const fs::path p = fs::path(dir) / file;
    if (valid && fs::exists(p)) {
        o.bytes = static_cast<std::uint64_t>(fs::file_size(p));
        o.fnv1a64 = fnv1a64_hex_of_file(p.string());
    } else {
        o.valid = false;
        m.valid = false;
    }
    m.outputs.push_back(std::move(o));
}

void write_manifest(const std::string& dir, const RunManifest& m) {
    const fs::path tmp = fs::path(dir) / ".manifest.ndjson.tmp";
    const fs::path dst = fs::path(dir) / "manifest.ndjson";
    {
        auto out = open_out(tmp.string());
        nlohmann::json run;
        run["type"] = "run";
        run["artifact_version"] = m.artifact_version;
        run["mode"] = m.mode;
        run["platform"] = m.platform;
        run["master_seed"] = m.master_seed;
        run["n_traj_completed"] = m.n_traj_completed;
        run["wall_seconds"] = m.wall_seconds;
        run["valid"] = m.valid;
        run["config"] = m.config_snapshot;
        out << run.dump() << '\n';
        for (const auto& o : m.outputs) {
            nlohmann::json j;
            j["type"] = "output";
            j["file"] = o.file;
            j["bytes"] = o.bytes;
            j["fnv1a64"] = o.fnv1a64;
            j["valid"] = o.valid;
            out << j.dump() << '\n';
        }
        finish(out, tmp.string());
    }
    fs::rename(tmp, dst);
}

}  // namespace qtraj
