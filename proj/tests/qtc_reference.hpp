#pragma once

// Straight-line transcription of the QTC_C symbol definitions, kept free of
// any helper shared with the library implementation. Used as the equivalence
// oracle for compute_qtc_c1/compute_qtc_c2.

#include <cmath>
#include <optional>

#include "masi/qtc.hpp"

namespace qtc_ref {

struct P {
    double x, y;
};

inline double d(P a, P b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
}

inline int sym(double value, double eps) {
    if (value > eps) return 1;
    if (value < -eps) return -1;
    return 0;
}

struct Agent {
    P prev;
    P cur;
    std::optional<P> next;
    double vx, vy; // velocity at the current frame
};

// q1 (towards/away) for the first agent against the second.
inline int q_approach(const Agent& a, const Agent& b, const masi::qtc::ToleranceSet& eps) {
    const double before = d(a.prev, b.cur);
    const double now = d(a.cur, b.cur);
    return sym(now - before, eps.distance);
}

// q3 (side) for the first agent: sign of the cross product of the heading
// displacement with the vector toward the other agent, both normalized.
inline int q_side(const Agent& a, const Agent& b, const masi::qtc::ToleranceSet& eps) {
    double hx, hy;
    if (a.next) {
        hx = a.next->x - a.cur.x;
        hy = a.next->y - a.cur.y;
    } else {
        hx = a.cur.x - a.prev.x;
        hy = a.cur.y - a.prev.y;
    }
    const double lx = b.cur.x - a.cur.x;
    const double ly = b.cur.y - a.cur.y;
    const double hn = std::sqrt(hx * hx + hy * hy);
    const double ln = std::sqrt(lx * lx + ly * ly);
    if (hn == 0.0 || ln == 0.0) return 0;
    return sym((hx * ly - hy * lx) / (hn * ln), eps.cross);
}

inline int q_speed(const Agent& a, const Agent& b, const masi::qtc::ToleranceSet& eps) {
    const double va = std::sqrt(a.vx * a.vx + a.vy * a.vy);
    const double vb = std::sqrt(b.vx * b.vx + b.vy * b.vy);
    return sym(va - vb, eps.speed);
}

inline double theta(double vx, double vy, double lx, double ly) {
    if ((vx == 0.0 && vy == 0.0) || (lx == 0.0 && ly == 0.0)) return 0.0;
    const double c = vx * ly - vy * lx;
    const double dd = vx * lx + vy * ly;
    return std::atan2(std::abs(c), dd);
}

inline int q_angle(const Agent& a, const Agent& b, const masi::qtc::ToleranceSet& eps) {
    const double ta = theta(a.vx, a.vy, b.cur.x - a.cur.x, b.cur.y - a.cur.y);
    const double tb = theta(b.vx, b.vy, a.cur.x - b.cur.x, a.cur.y - b.cur.y);
    return sym(ta - tb, eps.angle);
}

inline std::array<int, 6> qtc_c2(const Agent& r, const Agent& h, const masi::qtc::ToleranceSet& eps) {
    return {q_approach(r, h, eps), q_approach(h, r, eps), q_side(r, h, eps),
            q_side(h, r, eps),     q_speed(r, h, eps),    q_angle(r, h, eps)};
}

inline std::array<int, 4> qtc_c1(const Agent& r, const Agent& h, const masi::qtc::ToleranceSet& eps) {
    return {q_approach(r, h, eps), q_approach(h, r, eps), q_side(r, h, eps), q_side(h, r, eps)};
}

} // namespace qtc_ref
