#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qtraj/runner.hpp"

using namespace qtraj;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    const fs::path p = fs::temp_directory_path() / (std::string("qtraj_test_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("parse_config expands presets and validates") {
    const RunConfig cfg = parse_config(
        "mode = average\n"
        "preset = fig2a\n"
        "n_traj = 100\n"
        "master_seed = 7\n"
        "duration_us = 2\n");
    CHECK(cfg.phys.omega / kTwoPi == doctest::Approx(0.5));
    CHECK(cfg.phys.gamma_d == doctest::Approx(0.2));
    CHECK(cfg.phys.gamma1 == doctest::Approx(1.0 / 15.0));
    CHECK(cfg.config_id == "fig2a");
    CHECK(cfg.n_traj == 100);

    // explicit keys override the preset
    const RunConfig cfg2 = parse_config(
        "mode = average\npreset = fig2a\ngamma_d_per_us = 0.5\n"
        "n_traj = 1\nmaster_seed = 1\nduration_us = 1\n");
    CHECK(cfg2.phys.gamma_d == doctest::Approx(0.5));
}

TEST_CASE("parse_config rejects bad input with line numbers") {
    CHECK_THROWS_WITH_AS(parse_config("mode = average\nn_traj = 1\nmaster_seed = 0\n"
                                      "duration_us = 1\nrabi_per_us = 0\ngamma_d_per_us = 0.1\n"
                                      "eta_f = 1.5\n"),
                         doctest::Contains("eta_f"), ConfigError);
    try {
        parse_config("mode = average\nn_traj = 1\nmaster_seed = 0\nduration_us = 1\n"
                     "rabi_per_us = 0\ngamma_d_per_us = 0.1\nbogus_key = 3\n");
        FAIL("expected throw");
    } catch (const ConfigError& e) {
        CHECK(e.line == 7);
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }

    try {
        parse_config("");
        FAIL("expected throw");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("mode") != std::string::npos);
        CHECK(msg.find("n_traj") != std::string::npos);
        CHECK(msg.find("master_seed") != std::string::npos);
        CHECK(msg.find("duration_us") != std::string::npos);
    }

    CHECK_THROWS_AS(parse_config("mode = fly\nn_traj = 1\nmaster_seed = 0\nduration_us = 1\n"
                                 "rabi_per_us = 0\ngamma_d_per_us = 0.1\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("mode = average\nn_traj = zero\nmaster_seed = 0\n"
                                 "duration_us = 1\nrabi_per_us = 0\ngamma_d_per_us = 0.1\n"),
                    ConfigError);
}

TEST_CASE("environment variables override config keys") {
    RunConfig cfg = parse_config(
        "mode = average\nrabi_per_us = 0.1\ngamma_d_per_us = 0.1\n"
        "n_traj = 10\nmaster_seed = 3\nduration_us = 1\n");
    setenv("QTRAJ_ETA_F", "0.25", 1);
    setenv("QTRAJ_N_TRAJ", "44", 1);
    apply_env_overrides(cfg);
    unsetenv("QTRAJ_ETA_F");
    unsetenv("QTRAJ_N_TRAJ");
    CHECK(cfg.phys.eta_f == doctest::Approx(0.25));
    CHECK(cfg.n_traj == 44);
}

TEST_CASE("flat text round trip") {
    RunConfig cfg = parse_config(
        "mode = histogram\npreset = fig1\nn_traj = 12\nmaster_seed = 5\nduration_us = 3\n"
        "subset = w\neta_d = 0.2\n");
    const RunConfig back = parse_config(to_flat_text(cfg));
    CHECK(back.phys.gamma_d == cfg.phys.gamma_d);
    CHECK(back.phys.eta_d == doctest::Approx(0.2));
    CHECK(back.subset == DetectorSubset::w);
    CHECK(back.master_seed == cfg.master_seed);
}

TEST_CASE("binary record files round trip exactly") {
    const fs::path dir = temp_dir("bin");
    PhysicsParams p;
    apply_preset(p, "fig1");
    p.duration = 1.0;
    const ChannelSet omni = omniscient_channels(p);
    std::vector<RecordSet> all;
    for (std::uint32_t i = 0; i < 4; ++i)
        all.push_back(generate(p, omni, 99, i).records);
    const std::string path = (dir / "records.bin").string();
    write_records_bin(path, all);

    RecordFileReader reader(path);
    CHECK(reader.header().n_traj == 4);
    CHECK(reader.header().n_bins == 10);
    CHECK(reader.header().dt_record == p.dt_record);
    for (std::uint32_t i = 0; i < 4; ++i) {
        const RecordSet r = reader.read_records(i);
        for (int c = 0; c < 3; ++c)
            for (int b = 0; b < r.n_bins; ++b)
                CHECK(r.column(c)[static_cast<std::size_t>(b)] ==
                      all[i].column(c)[static_cast<std::size_t>(b)]);
    }
    CHECK_THROWS(reader.read_records(4));
}

TEST_CASE("run generate/reconstruct pipeline with manifests") {
    const fs::path dir = temp_dir("pipeline");
    RunConfig cfg = parse_config(
        "mode = generate\npreset = fig1\nn_traj = 6\nmaster_seed = 11\nduration_us = 2\n"
        "format = bin\n");
    cfg.out_dir = (dir / "gen").string();
    const RunManifest m1 = run(cfg);
    CHECK(m1.valid);
    REQUIRE(m1.outputs.size() == 2);
    CHECK(fs::exists(dir / "gen" / "records.bin"));
    CHECK(fs::exists(dir / "gen" / "trajectories.bin"));
    CHECK(fs::exists(dir / "gen" / "manifest.ndjson"));

    // byte-identical on re-run
    RunConfig cfg_rerun = cfg;
    cfg_rerun.out_dir = (dir / "gen2").string();
    const RunManifest m2 = run(cfg_rerun);
    REQUIRE(m2.outputs.size() == 2);
    CHECK(m1.outputs[0].fnv1a64 == m2.outputs[0].fnv1a64);
    CHECK(m1.outputs[1].fnv1a64 == m2.outputs[1].fnv1a64);

    RunConfig rcfg = cfg;
    rcfg.mode = RunMode::reconstruct;
    rcfg.subset = DetectorSubset::uv;
    rcfg.records_path = (dir / "gen" / "records.bin").string();
    rcfg.out_dir = (dir / "rec").string();
    const RunManifest m3 = run(rcfg);
    CHECK(m3.valid);
    CHECK(fs::exists(dir / "rec" / "trajectories.bin"));

    // the reconstructed trajectory file differs from the generator's
    CHECK(m3.outputs[0].fnv1a64 != m2.outputs[1].fnv1a64);
}

TEST_CASE("csv exports carry the documented headers") {
    const fs::path dir = temp_dir("csv");
    PhysicsParams p;
    apply_preset(p, "fig1");
    p.duration = 1.0;
    const GenResult g = generate(p, omniscient_channels(p), 3, 0);
    write_records_csv((dir / "r.csv").string(), g.records);
    CHECK(slurp(dir / "r.csv").rfind("t_us,u,v,w\n", 0) == 0);

    write_trajectory_csv((dir / "t.csv").string(), g.conditioned);
    CHECK(slurp(dir / "t.csv").rfind("t_us,x,y,z,purity\n", 0) == 0);

    EnsembleSpec spec;
    spec.params = p;
    spec.n_traj = 5;
    spec.master_seed = 3;
    const RawAverageResult avg = raw_average_tomography(spec);
    write_average_csv((dir / "a.csv").string(), avg);
    CHECK(slurp(dir / "a.csv").rfind("t_us,u_tilde,v_tilde,w_tilde,se_u,se_v,se_w,x_me,y_me,z_me\n",
                                     0) == 0);
}

TEST_CASE("grid and sweep auxiliary files parse") {
    const GridFile gf = parse_grid_file(
        "version = grid-v1\npoint = a 0.5 0.2\npoint = b 0 0.0333\n");
    CHECK(gf.version == "grid-v1");
    REQUIRE(gf.points.size() == 2);
    CHECK(gf.points[0].name == "a");
    CHECK(gf.points[0].rabi_per_us == doctest::Approx(0.5));
    CHECK_THROWS_AS(parse_grid_file("point = broken 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_grid_file("version = x\n"), ConfigError);

    const SweepOptions so = parse_sweep_file(
        "eta_f_min = 0.1\neta_f_max = 0.2\neta_f_step = 0.01\n"
        "eta_d_min = 0.3\neta_d_max = 0.4\neta_d_step = 0.01\n"
        "times_us = 2, 4\nbin_width = 0.05\nmin_count = 25\n");
    CHECK(so.grid.nf() == 11);
    CHECK(so.grid.nd() == 11);
    REQUIRE(so.times.size() == 2);
    CHECK(so.times[1] == doctest::Approx(4.0));
    CHECK(so.min_count == 25);
    CHECK_THROWS_AS(parse_sweep_file("eta_f_bogus = 1\n"), ConfigError);
}

TEST_CASE("fnv1a64 matches the reference offset basis behaviour") {
    CHECK(fnv1a64("", 0) == 14695981039346656037ull);
    const char* abc = "abc";
    CHECK(fnv1a64(abc, 3) == 0xe71fa2190541574bull);
}
