// cfcw - experiment driver for the continuous-wave tracking pipeline
//
// Subcommands compose through files in the output directory:
//   simulate  config -> capture.wav, truth_motion.csv
//   track     config + capture.wav -> phases.csv, trajectory.csv
//   recover   trajectory.csv -> ink.svg, ink.csv
//   report    config + capture.wav (+ reference) -> report.csv
//   gen-word  config -> truth_motion.csv, template ink.svg

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "cfcw/config.hpp"
#include "cfcw/io.hpp"
#include "cfcw/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cfcw;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
};

ExperimentConfig load_cfg(const CommonArgs& a) {
    ExperimentConfig cfg = load_experiment(a.config_path);
    if (a.seed) cfg.seed = *a.seed;
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& a, bool need_config = true) {
    auto* opt = cmd->add_option("--config", a.config_path, "experiment config (JSON)");
    if (need_config) opt->required();
    cmd->add_option("--out", a.out_dir, "output directory");
    cmd->add_option("--seed", a.seed, "override the config seed");
}

void write_motion_csv(const std::string& path, const MotionPath& motion,
                      const WordTruth* word) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < motion.positions.size(); ++i) {
        std::vector<double> r{motion.timestamps[i], motion.positions[i].x,
                              motion.positions[i].y, motion.positions[i].z};
        if (word) r.push_back(static_cast<double>(word->labels[i]));
        rows.push_back(std::move(r));
    }
    std::vector<std::string> header{"time_s", "x_m", "y_m", "z_m"};
    if (word) header.push_back("label");
    write_csv(path, header, rows);
}

Trajectory3D read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("invalid-argument", "cannot open: " + path);
    std::string line;
    std::getline(in, line);  // header
    Trajectory3D traj;
    while (std::getline(in, line)) {
        double t, x, y, z, res, valid;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &t, &x, &y, &z, &res,
                        &valid) != 6)
            throw Error("invalid-argument", "bad trajectory row: " + line);
        traj.timestamps.push_back(t);
        traj.points.push_back({x, y, z});
        traj.residuals.push_back(res);
        traj.valid.push_back(valid > 0.5);
    }
    if (traj.points.empty()) throw Error("insufficient-data", "empty trajectory: " + path);
    return traj;
}

int run_simulate(const CommonArgs& a) {
    auto cfg = load_cfg(a);
    auto sim = run_simulation(cfg);
    fs::create_directories(a.out_dir);
    write_wav((fs::path(a.out_dir) / "capture.wav").string(), sim.capture);
    write_motion_csv((fs::path(a.out_dir) / "truth_motion.csv").string(), sim.path,
                     sim.word ? &*sim.word : nullptr);
    std::printf("wrote capture.wav (%zu channels, %.0f Hz) and truth_motion.csv to %s\n",
                sim.capture.channels.size(), sim.capture.sample_rate, a.out_dir.c_str());
    return 0;
}

int run_track(const CommonArgs& a) {
    auto cfg = load_cfg(a);
    auto capture = read_wav((fs::path(a.out_dir) / "capture.wav").string());
    auto schedule = build_schedule(cfg.schedule, cfg.duration);
    auto geometry = echo_array();
    auto res = run_tracking(cfg, capture, schedule, geometry);
    write_phase_csv((fs::path(a.out_dir) / "phases.csv").string(), res.tracks,
                    res.frame_rate);
    write_trajectory_csv((fs::path(a.out_dir) / "trajectory.csv").string(), res.trajectory);
    std::printf("start point (%.4f, %.4f, %.4f) m, residual %.3g; %zu frames tracked\n",
                res.fix.position.x, res.fix.position.y, res.fix.position.z,
                res.fix.residual, res.trajectory.points.size());
    return 0;
}

int run_recover(const CommonArgs& a) {
    auto traj = read_trajectory_csv((fs::path(a.out_dir) / "trajectory.csv").string());
    auto rec = run_recovery(traj);
    write_ink_svg((fs::path(a.out_dir) / "ink.svg").string(), rec.ink);
    std::vector<std::vector<double>> rows;
    for (std::size_t s = 0; s < rec.ink.strokes.size(); ++s)
        for (const auto& p : rec.ink.strokes[s])
            rows.push_back({static_cast<double>(s), p[0] * 1000.0, p[1] * 1000.0});
    write_csv((fs::path(a.out_dir) / "ink.csv").string(), {"stroke", "x_mm", "y_mm"}, rows);
    std::printf("recovered %zu strokes (%zu pen lifts removed), embedding stress %.4f\n",
                rec.ink.strokes.size(),
                static_cast<std::size_t>(std::count_if(
                    rec.segments.begin(), rec.segments.end(),
                    [](const StrokeSegment& s) { return s.pen_lift; })),
                rec.ink.stress);
    return 0;
}

int run_report(const CommonArgs& a, const std::string& reference_wav) {
    auto capture = read_wav((fs::path(a.out_dir) / "capture.wav").string());
    std::optional<RawCapture> ref;
    if (!reference_wav.empty()) ref = read_wav(reference_wav);
    auto rep = band_energy_report(capture, 0, ref ? &*ref : nullptr);
    std::vector<std::vector<double>> rows;
    for (const auto& b : rep.bands)
        rows.push_back({b.band.low_hz, b.band.high_hz, b.power, b.level_db});
    write_csv((fs::path(a.out_dir) / "report.csv").string(),
              {"band_low_hz", "band_high_hz", "power", "level_db"}, rows);
    std::printf("tracking line %.1f dB at %.0f Hz; voice band %.1f dB; leakage %.1f dB\n",
                rep.tracking_line_db, rep.tracking_line_hz,
                rep.find("voice")->level_db, rep.leakage_db);
    if (rep.has_reference)
        std::printf("voice-band delta vs reference: %.2f dB\n", rep.voice_delta_db);
    return 0;
}

int run_gen_word(const CommonArgs& a) {
    auto cfg = load_cfg(a);
    if (cfg.motion.kind != "word")
        throw Error("invalid-configuration", "gen-word needs motion.kind == \"word\"");
    auto word = generate_word(cfg.motion.word);
    fs::create_directories(a.out_dir);
    write_motion_csv((fs::path(a.out_dir) / "truth_motion.csv").string(), word.path, &word);

    // Template ink straight from the ground truth, for visual comparison.
    Ink2D ink;
    double xmin = 1e30, ymin = 1e30, xmax = -1e30, ymax = -1e30;
    for (const auto& [b, e] : word.strokes) {
        std::vector<std::array<double, 2>> poly;
        for (std::size_t i = b; i < e; ++i) {
            const Vec3& p = word.path.positions[i];
            poly.push_back({p.x, p.y});  // pose-independent footprint
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        ink.strokes.push_back(std::move(poly));
    }
    ink.bounding_box = {xmin, ymin, xmax, ymax};
    write_ink_svg((fs::path(a.out_dir) / "truth_ink.svg").string(), ink);
    std::printf("generated \"%s\": %zu samples, %zu strokes, %zu lifts, %zu stops\n",
                cfg.motion.word.word.c_str(), word.path.positions.size(),
                word.strokes.size(), word.lift_count, word.stop_count);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuous-wave acoustic tracking experiments"};
    app.require_subcommand(1);

    CommonArgs sim_a, trk_a, rec_a, rep_a, gen_a;
    std::string reference_wav;

    add_common(app.add_subcommand("simulate", "synthesize a capture from a config"), sim_a);
    add_common(app.add_subcommand("track", "demodulate a capture and track the beacon"),
               trk_a);
    auto* rec = app.add_subcommand("recover", "turn a trajectory into 2D ink");
    add_common(rec, rec_a, false);
    auto* rep = app.add_subcommand("report", "band-energy coexistence report");
    add_common(rep, rep_a, false);
    rep->add_option("--reference", reference_wav, "tones-off capture for the voice delta");
    add_common(app.add_subcommand("gen-word", "emit ground-truth word motion"), gen_a);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("simulate")) return run_simulate(sim_a);
        if (app.got_subcommand("track")) return run_track(trk_a);
        if (app.got_subcommand("recover")) return run_recover(rec_a);
        if (app.got_subcommand("report")) return run_report(rep_a, reference_wav);
        if (app.got_subcommand("gen-word")) return run_gen_word(gen_a);
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.kind().c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 1;
}
