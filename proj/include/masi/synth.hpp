#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "masi/qtc.hpp"
#include "masi/trajectory.hpp"

namespace masi::synth {

enum class Primitive : std::uint8_t {
    HeadOn = 0,      // mirrored approach along a line, halt at a safe gap
    Overtake = 1,    // shared lane, rear agent faster, matches speed at the gap
    PassBy = 2,      // antiparallel motion on laterally offset lanes
    StaticGroup = 3, // standing agents
    Queue = 4,       // stop-and-go lane toward an exit point
    RandomWaypoint = 5
};

std::string primitive_name(Primitive p);

/// Deterministic scene recipe. Every agent moves piecewise at constant
/// velocity with exact stops and full-length steps.
struct ScenarioSpec {
    struct Group {
        Primitive primitive = Primitive::RandomWaypoint;
        int agents = 0;
    };
    std::vector<Group> mix;
    int duration = 1000; // frames
    double rate = 15.0;
    double arena_half = 6.0; // arena is [-arena_half, arena_half]^2 meters
    int static_objects = 0;
    std::uint64_t seed = 1;
    double min_separation = 0.05;
    double min_speed = 0.8, max_speed = 1.5; // waypoint leg speeds, m/s

    int total_agents() const;
    void validate() const;

    static ScenarioSpec waypoint_crowd(int agents, int duration, std::uint64_t seed,
                                       double arena_half = 5.0, int objects = 2);
    static ScenarioSpec mixed(int agents, int duration, std::uint64_t seed,
                              double arena_half = 6.0, int objects = 2);
};

/// Piecewise-constant-velocity tracks with waypoint switching; pairwise
/// separation below min_separation is rejected at the leg level. Throws a
/// generation error (DataError) for infeasible specs.
data::TrajectorySet generate_scenario(const ScenarioSpec& spec);

/// A closed-form two-agent instance with an analytically known symbol stream.
struct ClosedFormPair {
    Primitive primitive = Primitive::HeadOn; // HeadOn | Overtake | PassBy | StaticGroup
    double separation = 10.0;                // initial distance along x, meters
    double lateral = 1.0;                    // PassBy lane offset of agent h
    double speed_r = 1.0, speed_h = 1.0;     // Overtake wants speed_r > speed_h
    double halt_gap = 0.5;                   // HeadOn/Overtake final gap
    double rate = 15.0;
    int frames = 120;

    /// World tracks of r and h (r starts at the origin heading +x).
    std::pair<std::vector<qtc::Vec2>, std::vector<qtc::Vec2>> tracks() const;
};

/// Exact symbol stream from geometry for frames 1..frames-1 of a closed-form
/// pair. Non-closed-form primitives raise UsageError.
std::vector<qtc::QtcVector> analytic_qtc(const ClosedFormPair& pair, qtc::QtcVariant variant);

} // namespace masi::synth
