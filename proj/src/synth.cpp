#include "masi/synth.hpp"

#include <algorithm>
#include <cmath>

#include "masi/errors.hpp"
#include "masi/rng.hpp"

namespace masi::synth {

using qtc::Vec2;

std::string primitive_name(Primitive p) {
    switch (p) {
    case Primitive::HeadOn: return "head_on";
    case Primitive::Overtake: return "overtake";
    case Primitive::PassBy: return "pass_by";
    case Primitive::StaticGroup: return "static_group";
    case Primitive::Queue: return "queue";
    case Primitive::RandomWaypoint: return "random_waypoint";
    }
    return "?";
}

int ScenarioSpec::total_agents() const {
    int n = 0;
    for (const auto& g : mix) n += g.agents;
    return n;
}

void ScenarioSpec::validate() const {
    if (mix.empty() || total_agents() <= 0) throw UsageError("scenario needs agents");
    for (const auto& g : mix) {
        if (g.agents < 0) throw UsageError("negative agent count");
    }
    if (duration < 2) throw UsageError("duration must be at least 2 frames");
    if (rate <= 0) throw UsageError("rate must be positive");
    if (arena_half <= 1.0) throw UsageError("arena too small");
    if (!(min_speed > 0) || max_speed < min_speed) throw UsageError("bad speed band");
    if (static_objects < 0) throw UsageError("negative object count");
}

ScenarioSpec ScenarioSpec::waypoint_crowd(int agents, int duration, std::uint64_t seed,
                                          double arena_half, int objects) {
    ScenarioSpec s;
    s.mix = {{Primitive::RandomWaypoint, agents}};
    s.duration = duration;
    s.seed = seed;
    s.arena_half = arena_half;
    s.static_objects = objects;
    return s;
}

ScenarioSpec ScenarioSpec::mixed(int agents, int duration, std::uint64_t seed, double arena_half,
                                 int objects) {
    ScenarioSpec s;
    int rest = agents;
    auto take = [&rest](int n) {
        n = std::min(n, rest);
        rest -= n;
        return n;
    };
    s.mix = {{Primitive::StaticGroup, take(3)}, {Primitive::Queue, take(4)},
             {Primitive::HeadOn, take(2)},      {Primitive::Overtake, take(2)},
             {Primitive::PassBy, take(2)},      {Primitive::RandomWaypoint, take(rest)}};
    s.duration = duration;
    s.seed = seed;
    s.arena_half = arena_half;
    s.static_objects = objects;
    return s;
}

namespace {

struct Builder {
    const ScenarioSpec& spec;
    Rng rng;
    int frames;
    double step_of(double speed) const { return speed / spec.rate; }

    std::vector<std::vector<Vec2>> tracks; // [agent][frame]
    std::vector<Vec2> objects;
    double next_strip_top;

    explicit Builder(const ScenarioSpec& s)
        : spec(s), rng(s.seed), frames(s.duration), next_strip_top(s.arena_half - 0.3) {}

    /// Reserved horizontal band for one structured group.
    double claim_strip() {
        const double y = next_strip_top - 0.6;
        next_strip_top -= 1.5;
        if (y < -spec.arena_half + 0.3) {
            throw DataError("scenario infeasible: arena too small for the structured groups");
        }
        return y;
    }

    bool clear_of_objects(Vec2 p, double margin) const {
        for (const auto& o : objects) {
            if (qtc::dist(p, o) < margin) return false;
        }
        return true;
    }

    /// Minimum distance from p to any already-built agent at this frame.
    double clearance(Vec2 p, int frame, std::size_t skip_agent) const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < tracks.size(); ++a) {
            if (a == skip_agent) continue;
            best = std::min(best, qtc::dist(p, tracks[a][frame]));
        }
        for (const auto& o : objects) best = std::min(best, qtc::dist(p, o));
        return best;
    }

    void place_objects() {
        for (int i = 0; i < spec.static_objects; ++i) {
            Vec2 p;
            int tries = 0;
            do {
                p = {rng.uniform(-spec.arena_half + 0.5, spec.arena_half - 0.5),
                     rng.uniform(-spec.arena_half + 0.5, -0.2)};
                if (++tries > 200) throw DataError("cannot place static objects");
            } while (!clear_of_objects(p, 0.8));
            objects.push_back(p);
        }
    }

    std::vector<Vec2> constant_track(Vec2 p) const { return std::vector<Vec2>(frames, p); }

    void add_static_group(int agents) {
        if (agents <= 0) return;
        const double y = claim_strip();
        const double r = std::max(0.5, 0.17 * agents);
        const double pi = std::acos(-1.0);
        for (int i = 0; i < agents; ++i) {
            const double a = 2 * pi * i / agents;
            tracks.push_back(constant_track({r * std::cos(a), y + r * std::sin(a) * 0.4}));
        }
    }

    void add_head_on(int agents) {
        const double pi = std::acos(-1.0);
        for (int p = 0; p + 1 < agents; p += 2) {
            const double y = claim_strip();
            const double span = spec.arena_half - 1.0;
            const double speed = rng.uniform(spec.min_speed, std::min(1.4, spec.max_speed));
            const double u = step_of(speed);
            const int dwell = static_cast<int>(spec.rate);

            std::vector<Vec2> a(frames), b(frames);
            double xa = -span, xb = span;
            int phase = 0; // 0 approach, 1 dwell, 2 retreat, 3 dwell
            int wait = 0;
            a[0] = {xa, y};
            b[0] = {xb, y};
            for (int t = 1; t < frames; ++t) {
                switch (phase) {
                case 0:
                    if (xb - xa - 2 * u < 0.5) {
                        phase = 1;
                        wait = dwell;
                    } else {
                        xa += u;
                        xb -= u;
                    }
                    break;
                case 2:
                    if (xa - u < -span || xb + u > span) {
                        phase = 3;
                        wait = dwell;
                    } else {
                        xa -= u;
                        xb += u;
                    }
                    break;
                default:
                    if (--wait <= 0) phase = (phase == 1) ? 2 : 0;
                    break;
                }
                a[t] = {xa, y};
                b[t] = {xb, y};
            }
            (void)pi;
            tracks.push_back(std::move(a));
            tracks.push_back(std::move(b));
        }
        if (agents % 2 == 1) add_static_group(1);
    }

    void add_overtake(int agents) {
        for (int p = 0; p + 1 < agents; p += 2) {
            const double y = claim_strip();
            const double span = spec.arena_half - 1.0;
            const double fast = rng.uniform(1.2, std::max(1.2, spec.max_speed));
            const double slow = rng.uniform(spec.min_speed, 1.0);

            std::vector<Vec2> a(frames), b(frames); // a rear (fast), b lead (slow)
            double xa = -span, xb = -span + 2.5;
            int dir = 1;
            bool convoy = false;
            a[0] = {xa, y};
            b[0] = {xb, y};
            double va = fast, vb = slow;
            for (int t = 1; t < frames; ++t) {
                double nxa = xa + dir * step_of(va);
                double nxb = xb + dir * step_of(vb);
                if (!convoy && std::abs(nxb - nxa) < 0.5) {
                    convoy = true;
                    if (va > vb) {
                        va = vb;
                        nxa = xa + dir * step_of(va);
                    } else {
                        vb = va;
                        nxb = xb + dir * step_of(vb);
                    }
                }
                const double edge = dir > 0 ? std::max(nxa, nxb) : std::min(nxa, nxb);
                if (std::abs(edge) > span) {
                    dir = -dir; // patrol back; the new rear agent takes the fast role
                    const bool a_rear = (dir > 0) ? (xa < xb) : (xa > xb);
                    va = a_rear ? fast : slow;
                    vb = a_rear ? slow : fast;
                    convoy = false;
                } else {
                    xa = nxa;
                    xb = nxb;
                }
                a[t] = {xa, y};
                b[t] = {xb, y};
            }
            tracks.push_back(std::move(a));
            tracks.push_back(std::move(b));
        }
        if (agents % 2 == 1) add_static_group(1);
    }

    void add_pass_by(int agents) {
        for (int p = 0; p + 1 < agents; p += 2) {
            const double y = claim_strip();
            const double span = spec.arena_half - 1.0;
            const double sa = rng.uniform(spec.min_speed, spec.max_speed);
            const double sb = rng.uniform(spec.min_speed, spec.max_speed);

            std::vector<Vec2> a(frames), b(frames);
            double xa = -span, xb = span;
            int da = 1, db = -1;
            a[0] = {xa, y - 0.35};
            b[0] = {xb, y + 0.35};
            for (int t = 1; t < frames; ++t) {
                if (std::abs(xa + da * step_of(sa)) > span) da = -da;
                if (std::abs(xb + db * step_of(sb)) > span) db = -db;
                xa += da * step_of(sa);
                xb += db * step_of(sb);
                a[t] = {xa, y - 0.35};
                b[t] = {xb, y + 0.35};
            }
            tracks.push_back(std::move(a));
            tracks.push_back(std::move(b));
        }
        if (agents % 2 == 1) add_static_group(1);
    }

    void add_queue(int agents) {
        if (agents <= 0) return;
        const double y = claim_strip();
        claim_strip(); // exit lane and parking row live below the queue line
        const double service_x = spec.arena_half - 1.2;
        const double walk_y = y - 0.7;
        const double park_y = y - 1.25;
        const double speed = 0.8;
        const double u = step_of(speed);
        const int service_frames = static_cast<int>(2 * spec.rate);

        // 0 queued, 1 served, 2 descend (slot stays locked), 3 walk, 4 drop, 5 parked
        struct Q {
            int state = 0;
            int wait = 0;
            double ex = 0;
        };
        std::vector<Q> qs(agents);
        std::vector<std::vector<Vec2>> local(agents, std::vector<Vec2>(frames));
        std::vector<Vec2> cur(agents);
        for (int i = 0; i < agents; ++i) {
            cur[i] = {service_x - 0.9 * (i + 1), y};
            local[i][0] = cur[i];
        }

        int serving = -1;
        for (int t = 1; t < frames; ++t) {
            for (int i = 0; i < agents; ++i) {
                auto& q = qs[i];
                switch (q.state) {
                case 0: {
                    const bool ahead_gone = i == 0 || qs[i - 1].state >= 2;
                    const double target =
                        ahead_gone ? service_x - 0.05 : cur[i - 1].x - 0.9;
                    if (ahead_gone && serving < 0 && cur[i].x + u > service_x - 0.05) {
                        q.state = 1;
                        q.wait = service_frames;
                        serving = i;
                    } else if (cur[i].x + u <= target) {
                        cur[i].x += u;
                    }
                    break;
                }
                case 1:
                    if (--q.wait <= 0) {
                        q.state = 2;
                        q.ex = -spec.arena_half + 1.0 + 0.6 * i;
                    }
                    break;
                case 2:
                    if (cur[i].y - u >= walk_y) {
                        cur[i].y -= u;
                    } else {
                        q.state = 3;
                        serving = -1;
                    }
                    break;
                case 3:
                    if (cur[i].x - u >= q.ex) {
                        cur[i].x -= u;
                    } else {
                        q.state = 4;
                    }
                    break;
                case 4:
                    if (cur[i].y - u >= park_y) {
                        cur[i].y -= u;
                    } else {
                        q.state = 5;
                    }
                    break;
                default: break;
                }
                local[i][t] = cur[i];
            }
        }
        for (auto& trk : local) tracks.push_back(std::move(trk));
    }

    void add_waypoint_agents(int agents) {
        const double margin = 0.3;
        const double lo = -spec.arena_half + margin, hi = spec.arena_half - margin;
        const double area = (hi - lo) * (hi - lo);
        if (agents > static_cast<int>(area / 0.8)) {
            throw DataError("scenario infeasible: too many waypoint agents for the arena");
        }

        for (int i = 0; i < agents; ++i) {
            const std::size_t self = tracks.size();
            std::vector<Vec2> trk(frames);
            Vec2 pos;
            int tries = 0;
            do {
                pos = {rng.uniform(lo, hi), rng.uniform(lo, hi)};
                if (++tries > 200) throw DataError("cannot place waypoint agent " + std::to_string(i));
            } while ([&] {
                for (std::size_t a = 0; a < tracks.size(); ++a) {
                    if (qtc::dist(pos, tracks[a][0]) < 0.6) return true;
                }
                return !clear_of_objects(pos, 0.6);
            }());
            trk[0] = pos;
            tracks.push_back(std::move(trk));

            int t = 1;
            while (t < frames) {
                bool committed = false;
                for (int attempt = 0; attempt < 40 && !committed; ++attempt) {
                    const Vec2 wp{rng.uniform(lo, hi), rng.uniform(lo, hi)};
                    const double speed = rng.uniform(spec.min_speed, spec.max_speed);
                    const double u = step_of(speed);
                    const double d = qtc::dist(pos, wp);
                    const int steps = static_cast<int>(d / u);
                    if (steps < 3) continue;
                    const Vec2 dir = (wp - pos) * (1.0 / d);
                    int dwell = 0;
                    if (rng.bernoulli(0.3)) {
                        dwell = static_cast<int>(rng.uniform(0.5, 2.0) * spec.rate);
                    }

                    // Leg rejection: every frame of the leg and its dwell must
                    // keep the minimum separation from everyone already built.
                    bool ok = true;
                    Vec2 probe = pos;
                    const int leg_end = std::min(frames, t + steps + dwell);
                    for (int f = t; f < leg_end && ok; ++f) {
                        if (f - t < steps) probe = probe + dir * u;
                        ok = clearance(probe, f, self) >= spec.min_separation;
                    }
                    if (!ok) continue;

                    probe = pos;
                    for (int f = t; f < leg_end; ++f) {
                        if (f - t < steps) probe = probe + dir * u;
                        tracks[self][f] = probe;
                    }
                    pos = probe;
                    t = leg_end;
                    committed = true;
                }
                if (!committed) {
                    // Stand still for a second rather than fail the scene.
                    const int hold = std::min(frames, t + static_cast<int>(spec.rate));
                    bool ok = true;
                    for (int f = t; f < hold && ok; ++f) {
                        ok = clearance(pos, f, self) >= spec.min_separation;
                    }
                    if (!ok) throw DataError("scenario infeasible: waypoint agent is boxed in");
                    for (int f = t; f < hold; ++f) tracks[self][f] = pos;
                    t = hold;
                }
            }
        }
    }
};

} // namespace

data::TrajectorySet generate_scenario(const ScenarioSpec& spec) {
    spec.validate();
    Builder b(spec);
    b.place_objects();
    for (const auto& g : spec.mix) {
        switch (g.primitive) {
        case Primitive::StaticGroup: b.add_static_group(g.agents); break;
        case Primitive::HeadOn: b.add_head_on(g.agents); break;
        case Primitive::Overtake: b.add_overtake(g.agents); break;
        case Primitive::PassBy: b.add_pass_by(g.agents); break;
        case Primitive::Queue: b.add_queue(g.agents); break;
        case Primitive::RandomWaypoint: break; // placed last
        }
    }
    for (const auto& g : spec.mix) {
        if (g.primitive == Primitive::RandomWaypoint) b.add_waypoint_agents(g.agents);
    }

    data::TrajectorySet ts;
    ts.rate = spec.rate;
    for (std::size_t i = 0; i < b.tracks.size(); ++i) {
        data::AgentTrack track;
        track.id = "a" + std::string(i < 10 ? "0" : "") + std::to_string(i);
        data::TrackSegment seg;
        seg.start_frame = 0;
        seg.positions = std::move(b.tracks[i]);
        seg.derive_velocities(spec.rate);
        track.segments.push_back(std::move(seg));
        ts.agents.push_back(std::move(track));
    }
    for (std::size_t i = 0; i < b.objects.size(); ++i) {
        const std::string id = "obj" + std::to_string(i);
        data::AgentTrack pseudo;
        pseudo.id = id;
        pseudo.is_static = true;
        data::TrackSegment seg;
        seg.start_frame = 0;
        seg.positions.assign(spec.duration, b.objects[i]);
        seg.velocities.assign(spec.duration, Vec2{0, 0});
        pseudo.segments.push_back(std::move(seg));
        ts.agents.push_back(std::move(pseudo));
        ts.static_objects.push_back({id, b.objects[i]});
    }
    ts.sort_agents();
    return ts;
}

std::pair<std::vector<Vec2>, std::vector<Vec2>> ClosedFormPair::tracks() const {
    std::vector<Vec2> r(frames), h(frames);
    const double ur = speed_r / rate, uh = speed_h / rate;
    switch (primitive) {
    case Primitive::StaticGroup:
        for (int t = 0; t < frames; ++t) {
            r[t] = {0, 0};
            h[t] = {separation, 0};
        }
        break;
    case Primitive::HeadOn: {
        double xr = 0, xh = separation;
        bool halted = false;
        r[0] = {xr, 0};
        h[0] = {xh, 0};
        for (int t = 1; t < frames; ++t) {
            if (!halted && (xh - uh) - (xr + ur) < halt_gap) halted = true;
            if (!halted) {
                xr += ur;
                xh -= uh;
            }
            r[t] = {xr, 0};
            h[t] = {xh, 0};
        }
        break;
    }
    case Primitive::Overtake: {
        double xr = 0, xh = separation;
        double vr = ur;
        r[0] = {xr, 0};
        h[0] = {xh, 0};
        for (int t = 1; t < frames; ++t) {
            if ((xh + uh) - (xr + vr) < halt_gap) vr = uh; // convoy
            xr += vr;
            xh += uh;
            r[t] = {xr, 0};
            h[t] = {xh, 0};
        }
        break;
    }
    case Primitive::PassBy: {
        r[0] = {0, 0};
        h[0] = {separation, lateral};
        for (int t = 1; t < frames; ++t) {
            r[t] = {ur * t, 0};
            h[t] = {separation - uh * t, lateral};
        }
        break;
    }
    default:
        throw UsageError("primitive has no closed form: " + primitive_name(primitive));
    }
    return {std::move(r), std::move(h)};
}

std::vector<qtc::QtcVector> analytic_qtc(const ClosedFormPair& pair, qtc::QtcVariant variant) {
    const double ur = pair.speed_r / pair.rate, uh = pair.speed_h / pair.rate;
    const bool c2 = variant == qtc::QtcVariant::C2;

    auto make = [&](int q1, int q2, int q3, int q4, int q5, int q6) {
        std::vector<qtc::QtcSymbol> s{
            qtc::symbol_from_encoding(q1), qtc::symbol_from_encoding(q2),
            qtc::symbol_from_encoding(q3), qtc::symbol_from_encoding(q4)};
        if (c2) {
            s.push_back(qtc::symbol_from_encoding(q5));
            s.push_back(qtc::symbol_from_encoding(q6));
        }
        return qtc::QtcVector(variant, s);
    };
    auto sgn = [](double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); };

    std::vector<qtc::QtcVector> out;
    switch (pair.primitive) {
    case Primitive::StaticGroup:
        out.assign(pair.frames - 1, make(0, 0, 0, 0, 0, 0));
        break;
    case Primitive::HeadOn: {
        double xr = 0, xh = pair.separation;
        bool halted = false;
        const int q5 = sgn(pair.speed_r - pair.speed_h);
        for (int t = 1; t < pair.frames; ++t) {
            const bool was_halted = halted;
            if (!halted && (xh - uh) - (xr + ur) < pair.halt_gap) halted = true;
            if (!halted) {
                xr += ur;
                xh -= uh;
            }
            // Backward velocity is still nonzero on the first halted frame.
            out.push_back(was_halted ? make(0, 0, 0, 0, 0, 0) : make(-1, -1, 0, 0, q5, 0));
        }
        break;
    }
    case Primitive::Overtake: {
        double xr = 0, xh = pair.separation;
        double vr = ur;
        for (int t = 1; t < pair.frames; ++t) {
            const double prev_vr = vr;
            if ((xh + uh) - (xr + vr) < pair.halt_gap) vr = uh;
            xr += vr;
            xh += uh;
            const int q5 = sgn(prev_vr - uh); // + while closing, 0 in convoy
            out.push_back(make(-1, 1, 0, 0, q5, -1));
        }
        break;
    }
    case Primitive::PassBy: {
        const int side = sgn(pair.lateral);
        const int q5 = sgn(pair.speed_r - pair.speed_h);
        for (int t = 1; t < pair.frames; ++t) {
            const double gap_x = pair.separation - (ur + uh) * t;
            const int q1 = -sgn(2 * gap_x + ur); // towards while the distance shrinks
            const int q2 = -sgn(2 * gap_x + uh);
            out.push_back(make(q1, q2, side, side, q5, 0));
        }
        break;
    }
    default:
        throw UsageError("primitive has no closed form: " + primitive_name(pair.primitive));
    }
    return out;
}

} // namespace masi::synth
