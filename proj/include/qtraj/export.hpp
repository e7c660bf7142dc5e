#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtraj/engine.hpp"
#include "qtraj/experiments.hpp"

namespace qtraj {

inline constexpr const char* kArtifactVersion = "0.1.0";

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string fnv1a64_hex_of_file(const std::string& path);

// --- raw binary record files -------------------------------------------------
// 32-byte header: magic "QTRJ", u32 version, u32 n_traj, u32 n_bins, u32 n_cols,
// f64 dt_record, 4 pad bytes; then little-endian f64 payload, row-major
// [trajectory][bin][column].

struct RecordFileHeader {
    std::uint32_t version = 1;
    std::uint32_t n_traj = 0;
    std::uint32_t n_bins = 0;
    std::uint32_t n_cols = 3;
    double dt_record = 0.0;
};

class RecordFileWriter {
  public:
    RecordFileWriter(const std::string& path, const RecordFileHeader& header);
    ~RecordFileWriter();
    // Rows must arrive in trajectory order; each row is n_bins * n_cols doubles.
    void write_row(const double* row, std::size_t n);
    void close();

  private:
    struct Impl;
    Impl* impl_;
};

class RecordFileReader {
  public:
    explicit RecordFileReader(const std::string& path);
    ~RecordFileReader();
    const RecordFileHeader& header() const;
    void read_row(std::uint32_t index, double* row, std::size_t n) const;
    RecordSet read_records(std::uint32_t index) const;

  private:
    struct Impl;
    Impl* impl_;
};

void write_records_bin(const std::string& path, const std::vector<RecordSet>& records);

// --- CSV tables ---------------------------------------------------------------

void write_records_csv(const std::string& path, const RecordSet& records);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
void write_average_csv(const std::string& path, const RawAverageResult& res);
void write_validation_csv(const std::string& path, const ValidationResult& res);
void write_histogram_csv(const std::string& path, const std::vector<HistogramGrid>& grids);
void write_overlay_csv(const std::string& path, const std::vector<double>& t,
                       const std::vector<Bloch>& mean);
void write_purity_csv(const std::string& path, DetectorSubset subset,
                      const std::vector<PuritySample>& purity);
void write_sweep_csv(const std::string& path, const SweepResult& res);

// --- run manifest ---------------------------------------------------------

struct ManifestOutput {
    std::string file;
    std::uint64_t bytes = 0;
    std::string fnv1a64;
    bool valid = true;
};

struct RunManifest {
    std::string mode;
    std::string config_snapshot;     // the resolved flat config
    std::string artifact_version = kArtifactVersion;
    std::string platform;
    std::uint64_t master_seed = 0;
    std::uint32_t n_traj_completed = 0;
    double wall_seconds = 0.0;
    bool valid = true;
    std::vector<ManifestOutput> outputs;
};

std::string platform_fingerprint();

// Hashes and appends one data file to the manifest.
void note_output(RunManifest& m, const std::string& dir, const std::string& file,
                 bool valid = true);

// NDJSON, one object per line, written to a temp file and renamed into place.
void write_manifest(const std::string& dir, const RunManifest& m);

}  // namespace qtraj
