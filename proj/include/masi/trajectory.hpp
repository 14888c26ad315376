#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "masi/qtc.hpp"

namespace masi::data {

/// Contiguous run of frames for one agent. Velocities are derived from
/// positions: backward difference scaled by the frame rate, forward
/// difference on the first frame.
struct TrackSegment {
    std::int64_t start_frame = 0;
    std::vector<qtc::Vec2> positions;
    std::vector<qtc::Vec2> velocities;

    std::int64_t end_frame() const { return start_frame + static_cast<std::int64_t>(positions.size()); }
    bool covers(std::int64_t frame) const { return frame >= start_frame && frame < end_frame(); }
    qtc::Vec2 position_at(std::int64_t frame) const { return positions[frame - start_frame]; }
    qtc::PointState state_at(std::int64_t frame) const {
        return {positions[frame - start_frame], velocities[frame - start_frame], frame};
    }

    void derive_velocities(double rate);
};

struct AgentTrack {
    std::string id;
    bool is_static = false;
    std::vector<TrackSegment> segments; // ordered, non-overlapping

    const TrackSegment* segment_covering(std::int64_t frame) const;
    bool has_frame(std::int64_t frame) const { return segment_covering(frame) != nullptr; }
};

struct StaticObject {
    std::string id;
    qtc::Vec2 position;
};

/// One scene: dynamic agents (plus zero-velocity pseudo-agents for static
/// objects) at a fixed frame rate.
struct TrajectorySet {
    double rate = 15.0;
    std::vector<AgentTrack> agents;          // sorted by id
    std::vector<StaticObject> static_objects;

    const AgentTrack* find(const std::string& id) const;
    std::int64_t min_frame() const;
    std::int64_t max_frame() const; // exclusive
    void sort_agents();
};

/// Reads the trajectory CSV (header `frame,agent_id,x,y`, optional
/// `#rate=<float>` comment). Gaps in an agent's frames split it into
/// independent track segments.
TrajectorySet load_trajectories(const std::string& path);

/// Reads the static objects CSV (header `object_id,x,y`) and adds each object
/// as a zero-velocity pseudo-agent spanning the scene's frames.
TrajectorySet load_static_objects(const std::string& path, TrajectorySet trajset);

void save_trajectories_csv(const TrajectorySet& ts, const std::string& path);
void save_static_objects_csv(const TrajectorySet& ts, const std::string& path);

} // namespace masi::data
