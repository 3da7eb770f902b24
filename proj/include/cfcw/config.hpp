// config.hpp - experiment description loaded from JSON
#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfcw/acoustic_sim.hpp"
#include "cfcw/demod.hpp"
#include "cfcw/signal_core.hpp"
#include "cfcw/tx_design.hpp"
#include "cfcw/words.hpp"

namespace cfcw {

struct ScheduleConfig {
    std::string kind = "cfcw";          // cfcw | direct
    double receive_hz = 7000.0;
    double base_hz = 40000.0;
    double hop_step_hz = 2000.0;
    double hop_period_s = 0.003;
    double hop_ramp_s = 0.0;
    bool hop = true;
    double capture_rate = 16000.0;      // direct mode usually needs more
};

struct MotionConfig {
    std::string kind = "static";        // static | line | ramp | star | word
    Vec3 position{0.0, 0.30, 0.10};     // static / start
    Vec3 end{0.0, 0.10, 0.10};          // line
    Vec3 direction{0.0, -1.0, 0.0};     // ramp
    double peak_speed = 0.5;            // ramp
    double radius = 0.05;               // star
    double edge_duration = 0.5;         // star
    SyntheticWordSpec word;             // word
};

struct SceneConfig {
    double snr_db = 40.0;
    double max_range = 0.70;
    std::vector<Reflector> reflectors;
    bool ambient_voice = false;         // add a speech-band source to the capture
    double ambient_level_db = -10.0;    // re tracking-line RMS
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    double duration = 2.0;
    ScheduleConfig schedule;
    MotionConfig motion;
    SceneConfig scene;
    DemodConfig demod;
    double sim_rate = 192000.0;

    void validate() const {
        if (duration <= 0.0) throw Error("invalid-configuration", "duration must be positive");
        if (schedule.kind != "cfcw" && schedule.kind != "direct")
            throw Error("invalid-configuration", "schedule.kind must be cfcw or direct");
        if (motion.kind != "static" && motion.kind != "line" && motion.kind != "ramp" &&
            motion.kind != "star" && motion.kind != "word")
            throw Error("invalid-configuration", "unknown motion.kind: " + motion.kind);
    }
};

namespace detail {

inline Vec3 vec3_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3)
        throw Error("invalid-configuration", "expected [x, y, z] array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline PlanePose pose_from(const std::string& s) {
    if (s == "flat_above") return PlanePose::flat_above;
    if (s == "flat_beside") return PlanePose::flat_beside;
    if (s == "slant_beside") return PlanePose::slant_beside;
    if (s == "upright_beside") return PlanePose::upright_beside;
    if (s == "cylinder_beside") return PlanePose::cylinder_beside;
    throw Error("invalid-configuration", "unknown pose: " + s);
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const nlohmann::json& j) {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.seed = j.value("seed", c.seed);
    c.duration = j.value("duration", c.duration);
    c.sim_rate = j.value("sim_rate", c.sim_rate);

    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        c.schedule.kind = s.value("kind", c.schedule.kind);
        c.schedule.receive_hz = s.value("receive_hz", c.schedule.receive_hz);
        c.schedule.base_hz = s.value("base_hz", c.schedule.base_hz);
        c.schedule.hop_step_hz = s.value("hop_step_hz", c.schedule.hop_step_hz);
        c.schedule.hop_period_s = s.value("hop_period_s", c.schedule.hop_period_s);
        c.schedule.hop_ramp_s = s.value("hop_ramp_s", c.schedule.hop_ramp_s);
        c.schedule.hop = s.value("hop", c.schedule.hop);
        c.schedule.capture_rate = s.value("capture_rate", c.schedule.capture_rate);
    }
    if (j.contains("motion")) {
        const auto& m = j["motion"];
        c.motion.kind = m.value("kind", c.motion.kind);
        if (m.contains("position")) c.motion.position = detail::vec3_from(m["position"]);
        if (m.contains("end")) c.motion.end = detail::vec3_from(m["end"]);
        if (m.contains("direction")) c.motion.direction = detail::vec3_from(m["direction"]);
        c.motion.peak_speed = m.value("peak_speed", c.motion.peak_speed);
        c.motion.radius = m.value("radius", c.motion.radius);
        c.motion.edge_duration = m.value("edge_duration", c.motion.edge_duration);
        c.motion.word.word = m.value("word", c.motion.word.word);
        c.motion.word.width = m.value("width", c.motion.word.width);
        c.motion.word.max_speed = m.value("max_speed", c.motion.word.max_speed);
        c.motion.word.lift_height = m.value("lift_height", c.motion.word.lift_height);
        if (m.contains("pose")) c.motion.word.pose = detail::pose_from(m["pose"].get<std::string>());
    }
    if (j.contains("scene")) {
        const auto& s = j["scene"];
        c.scene.snr_db = s.value("snr_db", c.scene.snr_db);
        c.scene.max_range = s.value("max_range", c.scene.max_range);
        c.scene.ambient_voice = s.value("ambient_voice", c.scene.ambient_voice);
        c.scene.ambient_level_db = s.value("ambient_level_db", c.scene.ambient_level_db);
        if (s.contains("walls"))
            for (const auto& w : s["walls"]) {
                Reflector r;
                r.normal = detail::vec3_from(w.at("normal"));
                r.offset = w.at("offset").get<double>();
                r.coefficient = w.value("coefficient", 0.5);
                c.scene.reflectors.push_back(r);
            }
    }
    if (j.contains("demod")) {
        const auto& d = j["demod"];
        c.demod.nominal_range = d.value("nominal_range", c.demod.nominal_range);
        c.demod.velocity_aided = d.value("velocity_aided", c.demod.velocity_aided);
        c.demod.win_los = d.value("win_los", c.demod.win_los);
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("invalid-configuration", "cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid-configuration", std::string("bad JSON: ") + e.what());
    }
    return parse_experiment(j);
}

}  // namespace cfcw
