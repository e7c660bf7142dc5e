#include "qtraj/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace qtraj {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError(line, "cannot parse value of '" + key + "': " + v);
    }
}

std::uint64_t parse_u64(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return u;
    } catch (...) {
        throw ConfigError(line, "cannot parse value of '" + key + "': " + v);
    }
}

std::vector<double> parse_double_list(const std::string& v, int line, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(item, line, key));
    }
    if (out.empty()) throw ConfigError(line, "empty list for '" + key + "'");
    return out;
}

const char* const kKnownKeys[] = {
    "gamma1_per_us", "gamma_d_per_us", "gamma_phi_per_us", "rabi_per_us", "eta_f",
    "eta_d", "dt_record_us", "dt_int_us", "duration_us", "n_traj", "master_seed",
    "subset", "mode", "preset", "workers", "format", "out_dir", "config_id",
    "initial_x", "initial_y", "initial_z", "w_record_sign", "innovation_mode",
    "validation_t_us", "validation_bin_width", "validation_min_count",
    "histogram_times_us", "histogram_planes", "histogram_bins", "overlay_trim_us",
};

bool known_key(const std::string& k) {
    for (const auto* kk : kKnownKeys) {
        if (k == kk) return true;
    }
    return false;
}

struct KeyValue {
    std::string value;
    int line;
};

std::map<std::string, KeyValue> parse_kv(const std::string& text) {
    std::map<std::string, KeyValue> kv;
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "expected 'key = value', got: " + s);
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(line, "expected 'key = value', got: " + s);
        kv[key] = {value, line};
    }
    return kv;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
    auto as_double = [&]() { return parse_double(value, line, key); };
    if (key == "gamma1_per_us") cfg.phys.gamma1 = as_double();
    else if (key == "gamma_d_per_us") cfg.phys.gamma_d = as_double();
    else if (key == "gamma_phi_per_us") cfg.phys.gamma_phi = as_double();
    else if (key == "rabi_per_us") cfg.phys.omega = kTwoPi * as_double();
    else if (key == "eta_f") cfg.phys.eta_f = as_double();
    else if (key == "eta_d") cfg.phys.eta_d = as_double();
    else if (key == "dt_record_us") cfg.phys.dt_record = as_double();
    else if (key == "dt_int_us") cfg.phys.dt_int = as_double();
    else if (key == "duration_us") cfg.phys.duration = as_double();
    else if (key == "w_record_sign") cfg.phys.w_record_sign = as_double();
    else if (key == "n_traj") {
        const std::uint64_t n = parse_u64(value, line, key);
        if (n == 0 || n > 0xffffffffull) throw ConfigError(line, "n_traj out of range");
        cfg.n_traj = static_cast<std::uint32_t>(n);
    } else if (key == "master_seed") cfg.master_seed = parse_u64(value, line, key);
    else if (key == "subset") {
        try {
            cfg.subset = subset_from_string(value);
        } catch (const std::exception& e) {
            throw ConfigError(line, e.what());
        }
    } else if (key == "mode") {
        try {
            cfg.mode = mode_from_string(value);
        } catch (const std::exception& e) {
            throw ConfigError(line, e.what());
        }
    } else if (key == "workers") {
        const std::uint64_t wk = parse_u64(value, line, key);
        if (wk == 0 || wk > 1024) throw ConfigError(line, "workers out of range");
        cfg.workers = static_cast<int>(wk);
    } else if (key == "format") {
        if (value != "csv" && value != "ndjson" && value != "bin")
            throw ConfigError(line, "format must be csv, ndjson or bin");
        cfg.format = value;
    } else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "config_id") cfg.config_id = value;
    else if (key == "initial_x" || key == "initial_y" || key == "initial_z") {
        Bloch b = bloch_of(cfg.phys.initial_state);
        const double d = as_double();
        if (key == "initial_x") b.x = d;
        else if (key == "initial_y") b.y = d;
        else b.z = d;
        cfg.phys.initial_state = density_of(b);
    } else if (key == "innovation_mode") {
        if (value == "substep") cfg.innovation_mode = InnovationMode::substep;
        else if (value == "lump") cfg.innovation_mode = InnovationMode::lump;
        else throw ConfigError(line, "innovation_mode must be substep or lump");
    } else if (key == "validation_t_us") cfg.validation_t = as_double();
    else if (key == "validation_bin_width") cfg.validation_bin_width = as_double();
    else if (key == "validation_min_count")
        cfg.validation_min_count = static_cast<std::int64_t>(parse_u64(value, line, key));
    else if (key == "histogram_times_us") cfg.histogram_times = parse_double_list(value, line, key);
    else if (key == "histogram_planes") {
        cfg.histogram_planes.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                cfg.histogram_planes.push_back(plane_from_string(item));
            } catch (const std::exception& e) {
                throw ConfigError(line, e.what());
            }
        }
        if (cfg.histogram_planes.empty()) throw ConfigError(line, "empty histogram_planes");
    } else if (key == "histogram_bins") {
        const std::uint64_t n = parse_u64(value, line, key);
        if (n < 2 || n > 4096) throw ConfigError(line, "histogram_bins out of range");
        cfg.histogram_bins = static_cast<int>(n);
    } else if (key == "overlay_trim_us") cfg.overlay_trim = as_double();
    else if (key == "preset") {
        // handled before this pass
    } else {
        throw ConfigError(line, "unknown key: " + key);
    }
}

}  // namespace

std::string_view to_string(RunMode m) {
    switch (m) {
        case RunMode::generate: return "generate";
        case RunMode::reconstruct: return "reconstruct";
        case RunMode::average: return "average";
        case RunMode::validate: return "validate";
        case RunMode::histogram: return "histogram";
        case RunMode::sweep: return "sweep";
        default: return "grid";
    }
}

RunMode mode_from_string(std::string_view s) {
    if (s == "generate") return RunMode::generate;
    if (s == "reconstruct") return RunMode::reconstruct;
    if (s == "average") return RunMode::average;
    if (s == "validate") return RunMode::validate;
    if (s == "histogram") return RunMode::histogram;
    if (s == "sweep") return RunMode::sweep;
    if (s == "grid") return RunMode::grid;
    throw std::invalid_argument("unknown mode: " + std::string(s));
}

void RunConfig::validate() const {
    try {
        phys.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(0, e.what());
    }
    if (n_traj < 1) throw ConfigError(0, "n_traj must be at least 1");
    if (validation_bin_width <= 0.0 || validation_bin_width > 2.0)
        throw ConfigError(0, "validation_bin_width out of range");
    if (overlay_trim < 0.0) throw ConfigError(0, "overlay_trim_us must be non-negative");
    if (mode == RunMode::histogram) {
        for (const double t : histogram_times) {
            if (t < 0.0 || t > phys.duration + 1e-9)
                throw ConfigError(0, "histogram time outside [0, duration]");
        }
    }
    if (mode == RunMode::validate && validation_t > phys.duration + 1e-9)
        throw ConfigError(0, "validation_t_us beyond duration");
}

RunConfig parse_config(const std::string& text) {
    const auto kv = parse_kv(text);

    for (const auto& [key, val] : kv) {
        if (!known_key(key)) throw ConfigError(val.line, "unknown key: " + key);
    }

    static const char* const kRequired[] = {"mode", "n_traj", "master_seed", "duration_us"};
    std::string missing;
    for (const auto* req : kRequired) {
        if (kv.find(req) == kv.end()) missing += missing.empty() ? req : std::string(", ") + req;
    }
    const bool has_preset = kv.find("preset") != kv.end();
    if (!has_preset) {
        for (const auto* req : {"rabi_per_us", "gamma_d_per_us"}) {
            if (kv.find(req) == kv.end())
                missing += (missing.empty() ? "" : ", ") + std::string(req) + " (or preset)";
        }
    }
    if (!missing.empty()) throw ConfigError(0, "missing required keys: " + missing);

    RunConfig cfg;
    if (has_preset) {
        const auto& pv = kv.at("preset");
        if (!is_known_preset(pv.value))
            throw ConfigError(pv.line, "unknown preset: " + pv.value);
        cfg.preset = pv.value;
        apply_preset(cfg.phys, pv.value);
        if (cfg.config_id.empty()) cfg.config_id = pv.value;
    }
    for (const auto& [key, val] : kv) apply_key(cfg, key, val.value, val.line);
    cfg.validate();
    return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
    for (const auto* key : kKnownKeys) {
        std::string env_name = "QTRAJ_";
        for (const char* c = key; *c != '\0'; ++c)
            env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
        const char* value = std::getenv(env_name.c_str());
        if (value == nullptr) continue;
        if (std::string(key) == "preset") {
            if (!is_known_preset(value)) throw ConfigError(0, std::string("unknown preset: ") + value);
            cfg.preset = value;
            apply_preset(cfg.phys, value);
            continue;
        }
        apply_key(cfg, key, value, 0);
    }
    cfg.validate();
}

GridFile parse_grid_file(const std::string& text) {
    GridFile gf;
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key == "version") {
            gf.version = value;
        } else if (key == "point") {
            std::stringstream ps(value);
            GridPoint gp;
            if (!(ps >> gp.name >> gp.rabi_per_us >> gp.gamma_d))
                throw ConfigError(line, "point needs '<name> <rabi_per_us> <gamma_d_per_us>'");
            std::string rest;
            if (ps >> rest) throw ConfigError(line, "trailing tokens after point");
            gf.points.push_back(std::move(gp));
        } else {
            throw ConfigError(line, "unknown key in grid file: " + key);
        }
    }
    if (gf.points.empty()) throw ConfigError(0, "grid file lists no points");
    return gf;
}

SweepOptions parse_sweep_file(const std::string& text) {
    SweepOptions opt;
    const auto kv = parse_kv(text);
    for (const auto& [key, val] : kv) {
        if (key == "eta_f_min") opt.grid.eta_f_min = parse_double(val.value, val.line, key);
        else if (key == "eta_f_max") opt.grid.eta_f_max = parse_double(val.value, val.line, key);
        else if (key == "eta_f_step") opt.grid.eta_f_step = parse_double(val.value, val.line, key);
        else if (key == "eta_d_min") opt.grid.eta_d_min = parse_double(val.value, val.line, key);
        else if (key == "eta_d_max") opt.grid.eta_d_max = parse_double(val.value, val.line, key);
        else if (key == "eta_d_step") opt.grid.eta_d_step = parse_double(val.value, val.line, key);
        else if (key == "times_us") opt.times = parse_double_list(val.value, val.line, key);
        else if (key == "bin_width") opt.bin_width = parse_double(val.value, val.line, key);
        else if (key == "min_count")
            opt.min_count = static_cast<std::int64_t>(parse_u64(val.value, val.line, key));
        else throw ConfigError(val.line, "unknown key in sweep file: " + key);
    }
    return opt;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace qtraj
