#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qtraj/experiments.hpp"

namespace qtraj {

struct ConfigError : std::runtime_error {
    int line;  // 0 when not tied to a specific line
    ConfigError(int line_, const std::string& msg)
        : std::runtime_error(line_ > 0 ? "line " + std::to_string(line_) + ": " + msg : msg),
          line(line_) {}
};

enum class RunMode { generate, reconstruct, average, validate, histogram, sweep, grid };

std::string_view to_string(RunMode m);
RunMode mode_from_string(std::string_view s);

struct RunConfig {
    PhysicsParams phys;
    std::string preset;           // empty when not used
    std::uint32_t n_traj = 0;
    std::uint64_t master_seed = 0;
    DetectorSubset subset = DetectorSubset::uvw;
    RunMode mode = RunMode::generate;
    int workers = 1;
    std::string out_dir = ".";
    std::string format = "csv";   // payload format for records/trajectories: csv|bin
    std::string config_id;
    InnovationMode innovation_mode = InnovationMode::substep;

    // validate mode
    double validation_t = 10.0;
    double validation_bin_width = 0.01;
    std::int64_t validation_min_count = 50;

    // histogram mode; empty means "the full duration"
    std::vector<double> histogram_times;
    std::vector<Plane> histogram_planes{Plane::xy, Plane::xz, Plane::yz};
    int histogram_bins = 61;
    double overlay_trim = 0.0;

    // sweep mode (overridable through the auxiliary grid file)
    SweepOptions sweep;

    // inputs resolved on the command line, not in the config file
    std::string records_path;  // reconstruct
    std::string grid_file;     // grid/sweep auxiliary file

    void validate() const;
};

// Parses flat "key = value" text ('#' comments).  Unknown keys, unparsable
// values and violated invariants are rejected with their line number.
// A preset expands before explicit keys override it.
RunConfig parse_config(const std::string& text);

// Environment overrides: QTRAJ_<KEY> (upper-cased config key) replaces the
// file value for every known key.
void apply_env_overrides(RunConfig& cfg);

// Auxiliary file for grid mode: "point = <name> <rabi_per_us> <gamma_d_per_us>"
// lines plus a version tag.
struct GridFile {
    std::string version;
    std::vector<GridPoint> points;
};

GridFile parse_grid_file(const std::string& text);

// Auxiliary file for sweep mode: eta_f_min/max/step, eta_d_min/max/step,
// times (comma-separated), bin_width, min_count.
SweepOptions parse_sweep_file(const std::string& text);

std::string read_text_file(const std::string& path);

}  // namespace qtraj
