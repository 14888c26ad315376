#pragma once

// Shared generators for the unit and acceptance suites.

#include <array>
#include <optional>

#include "masi/qtc.hpp"
#include "masi/rng.hpp"

namespace testsup {

struct PairWindow {
    masi::qtc::PointState r_prev, r_cur;
    std::optional<masi::qtc::PointState> r_next;
    masi::qtc::PointState h_prev, h_cur;
    std::optional<masi::qtc::PointState> h_next;
};

/// Random 3-frame pair window over mixed kinematics: cruising, stopping,
/// starting, turning, plus exact-zero constructions (equal speeds, mirrored
/// angles, collinear headings) that exercise the 0-symbol tolerance bands.
inline PairWindow random_pair_window(masi::Rng& rng, double rate = 15.0) {
    using masi::qtc::Vec2;
    const double pi = 3.14159265358979323846;

    auto draw_agent = [&](Vec2 cur) {
        struct Motion {
            Vec2 back, fwd;
            bool has_next;
        } m;
        auto disp = [&]() -> Vec2 {
            if (rng.bernoulli(0.2)) return {0.0, 0.0};
            const double speed = rng.bernoulli(0.2) ? rng.uniform(0.01, 0.2) : rng.uniform(0.2, 2.0);
            const double ang = rng.uniform(0.0, 2 * pi);
            return {speed / rate * std::cos(ang), speed / rate * std::sin(ang)};
        };
        m.back = disp();
        m.fwd = rng.bernoulli(0.6) ? m.back : disp(); // cruise or turn/stop/start
        m.has_next = !rng.bernoulli(0.15);
        (void)cur;
        return m;
    };

    Vec2 r_pos{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    Vec2 h_pos{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    while (masi::qtc::dist(r_pos, h_pos) < 0.05) {
        h_pos = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    }
    auto rm = draw_agent(r_pos);
    auto hm = draw_agent(h_pos);

    if (rng.bernoulli(0.15)) hm.back = rm.back;                  // equal velocities
    if (rng.bernoulli(0.1)) hm.back = {-rm.back.x, -rm.back.y};  // mirrored motion
    if (rng.bernoulli(0.1)) {                                    // collinear forward heading
        const Vec2 line = h_pos - r_pos;
        const double n = masi::qtc::norm(line);
        rm.fwd = {line.x / n * 0.05, line.y / n * 0.05};
    }

    PairWindow w;
    w.r_cur = {r_pos, rm.back * rate, 1};
    w.r_prev = {r_pos - rm.back, rm.back * rate, 0};
    w.h_cur = {h_pos, hm.back * rate, 1};
    w.h_prev = {h_pos - hm.back, hm.back * rate, 0};
    if (rm.has_next) w.r_next = masi::qtc::PointState{r_pos + rm.fwd, rm.fwd * rate, 2};
    if (hm.has_next) w.h_next = masi::qtc::PointState{h_pos + hm.fwd, hm.fwd * rate, 2};
    return w;
}

/// Constant-velocity 3-frame window builder for hand-constructed cases.
inline PairWindow window_from_tracks(std::array<masi::qtc::Vec2, 3> r,
                                     std::array<masi::qtc::Vec2, 3> h, double rate = 1.0) {
    PairWindow w;
    w.r_prev = {r[0], (r[1] - r[0]) * rate, 0};
    w.r_cur = {r[1], (r[1] - r[0]) * rate, 1};
    w.r_next = masi::qtc::PointState{r[2], (r[2] - r[1]) * rate, 2};
    w.h_prev = {h[0], (h[1] - h[0]) * rate, 0};
    w.h_cur = {h[1], (h[1] - h[0]) * rate, 1};
    w.h_next = masi::qtc::PointState{h[2], (h[2] - h[1]) * rate, 2};
    return w;
}

} // namespace testsup
