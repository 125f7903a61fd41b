#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmtrack/evaluate.hpp"
#include "mmtrack/pipeline.hpp"
#include "mmtrack/radar_math.hpp"
#include "mmtrack/simulator.hpp"

namespace {

mmtrack::PipelineConfig resolveConfig(const std::string& flag) {
    std::string path = flag;
    if (path.empty())
        if (const char* env = std::getenv("MMTRACK_CONFIG")) path = env;
    if (path.empty()) return {};
    mmtrack::PipelineConfig cfg = mmtrack::loadConfig(path);
    mmtrack::validate(cfg);
    return cfg;
}

std::vector<mmtrack::ReplaySource> discoverCaptures(const mmtrack::PipelineConfig& cfg,
                                                    const std::string& dir) {
    std::vector<mmtrack::ReplaySource> sources;
    for (const auto& pose : cfg.radars) {
        const std::string path = dir + "/radar" + std::to_string(pose.id) + ".mmr";
        if (!std::filesystem::exists(path))
            throw mmtrack::IoError("missing capture for radar " + std::to_string(pose.id) +
                                   ": " + path);
        sources.push_back({pose.id, path});
    }
    return sources;
}

int cmdSimulate(const std::string& scenario_path, const std::string& out_dir,
                const std::string& config_flag) {
    const mmtrack::PipelineConfig cfg = resolveConfig(config_flag);
    mmtrack::Simulator sim(mmtrack::loadScenario(scenario_path), cfg);
    const mmtrack::SimulationSummary sum = sim.run(out_dir);
    std::printf("ticks            %lld\n", static_cast<long long>(sum.ticks));
    std::printf("packets written  %llu\n", static_cast<unsigned long long>(sum.packets_written));
    std::printf("points written   %llu\n", static_cast<unsigned long long>(sum.points_written));
    std::printf("packets dropped  %llu\n", static_cast<unsigned long long>(sum.packets_dropped));
    std::printf("packets mangled  %llu\n",
                static_cast<unsigned long long>(sum.packets_corrupted));
    std::printf("truth rows       %llu\n", static_cast<unsigned long long>(sum.truth_rows));
    for (const auto& f : sum.radar_files) std::printf("capture          %s\n", f.c_str());
    return 0;
}

int cmdRun(const std::string& capture_dir, const std::string& out_dir,
           const std::string& config_flag, double speed, bool live) {
    const mmtrack::PipelineConfig cfg = resolveConfig(config_flag);
    mmtrack::PipelineOptions opts;
    opts.out_dir = out_dir;
    opts.live = live;
    mmtrack::Pipeline pipeline(cfg, std::move(opts));
    mmtrack::ReplayOptions ropts;
    ropts.speed = speed;
    const mmtrack::PipelineResult res =
        pipeline.runFromFiles(discoverCaptures(cfg, capture_dir), ropts);

    std::printf("windows          %lld\n", static_cast<long long>(res.windows));
    std::printf("processed ticks  %lld\n", static_cast<long long>(res.processed_ticks));
    std::printf("standby ticks    %lld\n", static_cast<long long>(res.standby_ticks));
    std::printf("points in/kept   %llu / %llu\n",
                static_cast<unsigned long long>(res.points_in),
                static_cast<unsigned long long>(res.points_kept));
    std::printf("tracks spawned   %d (confirmed %d)\n", res.tracks_spawned,
                res.tracks_confirmed);
    std::printf("fall events      %zu\n", res.events.size());
    std::printf("posture reports  %zu\n", res.postures.size());
    std::printf("throughput       %.1f windows/s\n", res.windows_per_second);
    for (const auto& [id, st] : res.decode)
        std::printf("radar %u          %llu packets, %llu rejected\n", id,
                    static_cast<unsigned long long>(st.packets),
                    static_cast<unsigned long long>(st.badTotal()));
    std::printf("outputs          %s\n", out_dir.c_str());
    return 0;
}

int cmdEvaluate(const std::string& truth_path, const std::string& traj_path,
                const std::string& metrics_path) {
    const mmtrack::EvalResult res = mmtrack::evaluateFiles(truth_path, traj_path);
    if (!metrics_path.empty()) mmtrack::writeMetrics(metrics_path, res);
    std::printf("sensitivity      %.4f\n", res.sensitivity);
    std::printf("precision        %.4f\n", res.precision);
    std::printf("status accuracy  %.4f\n", res.status_accuracy);
    std::printf("tp/fn/fp         %lld / %lld / %lld\n",
                static_cast<long long>(res.true_positives),
                static_cast<long long>(res.false_negatives),
                static_cast<long long>(res.false_positives));
    if (!metrics_path.empty()) std::printf("metrics          %s\n", metrics_path.c_str());
    return 0;
}

int cmdInfo(const std::string& config_flag) {
    const mmtrack::PipelineConfig cfg = resolveConfig(config_flag);
    const mmtrack::ChirpParams chirp;
    std::printf("chirp slope          %.0f MHz/us\n", chirp.slope * 1e-12);
    std::printf("chirp bandwidth      %.0f GHz\n", chirp.bandwidth * 1e-9);
    std::printf("range resolution     %.4f m\n", mmtrack::rangeResolution(chirp));
    std::printf("if frequency @ 4 m   %.2f MHz\n",
                mmtrack::ifFrequencyForDistance(chirp, 4.0) * 1e-6);
    std::printf("interference p(n=3)  %.4f  (5.6 MHz of %.0f GHz occupied)\n",
                mmtrack::interferenceProbability(3, chirp.bandwidth, 5.6e6),
                chirp.bandwidth * 1e-9);
    std::printf("merge window         %.0f ms, group of %d\n",
                cfg.sync.window_seconds * 1e3, cfg.sync.group_windows);
    std::printf("frame rates          %d Hz working, %d Hz standby\n", cfg.fps.working,
                cfg.fps.standby);
    for (const auto& pose : cfg.radars) {
        const mmtrack::RigidTransform t = mmtrack::mountingTransform(pose);
        const mmtrack::Vec3 bore = t.local_to_global.apply({0, 1, 0}) -
                                   t.local_to_global.apply({0, 0, 0});
        std::printf("radar %u              at (%.2f, %.2f, %.2f) boresight (%.3f, %.3f, %.3f)\n",
                    pose.id, pose.position[0], pose.position[1], pose.position[2], bore.x,
                    bore.y, bore.z);
    }
    std::printf("room                 x [%.2f, %.2f]  y [%.2f, %.2f]  z [%.2f, %.2f]\n",
                cfg.room.x[0], cfg.room.x[1], cfg.room.y[0], cfg.room.y[1], cfg.room.z[0],
                cfg.room.z[1]);
    return 0;
}

int cmdBench(const std::string& scenario_path, const std::string& out_dir,
             const std::string& config_flag) {
    const mmtrack::PipelineConfig cfg = resolveConfig(config_flag);
    const std::string sim_dir = out_dir + "/capture";
    mmtrack::Simulator sim(mmtrack::loadScenario(scenario_path), cfg);
    sim.run(sim_dir);

    mmtrack::PipelineOptions opts;
    opts.out_dir = out_dir + "/run";
    mmtrack::Pipeline pipeline(cfg, std::move(opts));
    const mmtrack::PipelineResult res =
        pipeline.runFromFiles(discoverCaptures(cfg, sim_dir), {});

    std::printf("windows            %lld\n", static_cast<long long>(res.windows));
    std::printf("wall seconds       %.3f\n", res.wall_seconds);
    std::printf("windows_per_second %.1f\n", res.windows_per_second);
    const auto& st = res.stages;
    const double total_us =
        st.filter_us + st.background_us + st.cluster_us + st.track_us + st.status_us;
    auto share = [&](double v) { return total_us > 0 ? 100.0 * v / total_us : 0.0; };
    std::printf("stage filter       %9.0f us  %5.1f%%\n", st.filter_us, share(st.filter_us));
    std::printf("stage background   %9.0f us  %5.1f%%\n", st.background_us,
                share(st.background_us));
    std::printf("stage cluster      %9.0f us  %5.1f%%\n", st.cluster_us, share(st.cluster_us));
    std::printf("stage track        %9.0f us  %5.1f%%\n", st.track_us, share(st.track_us));
    std::printf("stage status       %9.0f us  %5.1f%%\n", st.status_us, share(st.status_us));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-radar human tracking: simulate, replay, evaluate"};
    app.require_subcommand(1);

    std::string config_flag;
    app.add_option("-c,--config", config_flag,
                   "pipeline config JSON (default: MMTRACK_CONFIG or built-ins)");

    auto* sim = app.add_subcommand("simulate", "render a scenario into radar captures");
    std::string sim_scenario, sim_out = "sim_out";
    sim->add_option("scenario", sim_scenario, "scenario JSON")->required();
    sim->add_option("-o,--out", sim_out, "output directory");

    auto* run = app.add_subcommand("run", "track people in recorded captures");
    std::string run_dir, run_out = "run_out";
    double run_speed = 0.0;
    bool run_live = false;
    run->add_option("captures", run_dir, "directory holding radar<id>.mmr files")->required();
    run->add_option("-o,--out", run_out, "output directory");
    run->add_option("--speed", run_speed,
                    "replay pace in data-seconds per wall-second (0 = unlimited)");
    run->add_flag("--live", run_live, "treat input as live: park radars that stall");

    auto* ev = app.add_subcommand("evaluate", "score trajectories against ground truth");
    std::string ev_truth, ev_traj, ev_metrics = "metrics.json";
    ev->add_option("--truth", ev_truth, "truth.csv from simulate")->required();
    ev->add_option("--trajectories", ev_traj, "trajectories.csv from run")->required();
    ev->add_option("-o,--out", ev_metrics, "metrics JSON path (empty to skip)");

    auto* info = app.add_subcommand("info", "print derived radar constants and mounting");

    auto* bench = app.add_subcommand("bench", "simulate then replay unpaced, report throughput");
    std::string bench_scenario, bench_out = "bench_out";
    bench->add_option("scenario", bench_scenario, "scenario JSON")->required();
    bench->add_option("-o,--out", bench_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(sim)) return cmdSimulate(sim_scenario, sim_out, config_flag);
        if (app.got_subcommand(run))
            return cmdRun(run_dir, run_out, config_flag, run_speed, run_live);
        if (app.got_subcommand(ev)) return cmdEvaluate(ev_truth, ev_traj, ev_metrics);
        if (app.got_subcommand(info)) return cmdInfo(config_flag);
        if (app.got_subcommand(bench)) return cmdBench(bench_scenario, bench_out, config_flag);
    } catch (const mmtrack::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
