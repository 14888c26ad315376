#include "masi/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "masi/errors.hpp"

namespace masi::cluster {

using qtc::Vec2;

void ClusterConfig::validate() const {
    if (!(radius > 0)) throw UsageError("cluster radius must be positive");
    if (t_history < 2) throw UsageError("t_history must be at least 2");
    if (t_future < 1) throw UsageError("t_future must be at least 1");
    if (stride < 1) throw UsageError("stride must be at least 1");
    eps.validate();
}

std::string variant_name(SampleVariant v) {
    switch (v) {
    case SampleVariant::FQtc4: return "qtc4";
    case SampleVariant::FQtc6: return "qtc6";
    case SampleVariant::Fts: return "ts";
    }
    return "?";
}

bool is_symbolic(SampleVariant v) { return v != SampleVariant::Fts; }

qtc::QtcVariant qtc_variant_of(SampleVariant v) {
    return v == SampleVariant::FQtc4 ? qtc::QtcVariant::C1 : qtc::QtcVariant::C2;
}

Memberships build_clusters(const data::TrajectorySet& trajectories, const ClusterConfig& config) {
    config.validate();
    if (trajectories.agents.empty()) throw UsageError("empty trajectory set");

    Memberships out;
    out.config = config;
    const int window = config.window_frames();

    for (const auto& center : trajectories.agents) {
        if (center.is_static) continue; // objects participate as members only
        for (const auto& segment : center.segments) {
            if (static_cast<int>(segment.positions.size()) < window) continue;
            const std::int64_t last_start = segment.end_frame() - window;

            // Per-frame membership over the segment, then window unions.
            const std::int64_t seg_start = segment.start_frame;
            const std::size_t seg_len = segment.positions.size();
            std::vector<std::vector<const data::AgentTrack*>> members_at(seg_len);
            for (const auto& other : trajectories.agents) {
                if (other.id == center.id) continue;
                for (const auto& oseg : other.segments) {
                    const std::int64_t lo = std::max(seg_start, oseg.start_frame);
                    const std::int64_t hi = std::min(segment.end_frame(), oseg.end_frame());
                    for (std::int64_t f = lo; f < hi; ++f) {
                        const double d =
                            qtc::dist(segment.position_at(f), oseg.position_at(f));
                        if (d <= config.radius) {
                            members_at[f - seg_start].push_back(&other);
                        }
                    }
                }
            }

            for (std::int64_t w = seg_start; w <= last_start; w += config.stride) {
                std::map<std::string, const data::AgentTrack*> in_window;
                for (int t = 0; t < window; ++t) {
                    for (const auto* track : members_at[w - seg_start + t]) {
                        in_window.emplace(track->id, track);
                    }
                }
                WindowMembership wm;
                wm.center_id = center.id;
                wm.window_start = w;

                // Slot order: distance to the center at the first window
                // frame (absent members last), ties by id.
                std::vector<std::pair<double, std::string>> order;
                for (const auto& [id, track] : in_window) {
                    const auto* seg0 = track->segment_covering(w);
                    const double d = seg0 ? qtc::dist(segment.position_at(w), seg0->position_at(w))
                                          : std::numeric_limits<double>::infinity();
                    order.emplace_back(d, id);
                }
                std::sort(order.begin(), order.end());
                for (auto& [d, id] : order) wm.members.push_back(std::move(id));
                out.windows.push_back(std::move(wm));
            }
        }
    }
    return out;
}

int compute_n_star(const Memberships& memberships) {
    if (memberships.windows.empty()) throw UsageError("no cluster windows to size");
    std::size_t n = 0;
    for (const auto& w : memberships.windows) n = std::max(n, w.members.size());
    return static_cast<int>(n);
}

namespace {

/// World-frame positions over one window, with per-step existence.
struct WindowPath {
    std::vector<Vec2> pos;
    std::vector<std::uint8_t> exists;
};

WindowPath window_path(const data::AgentTrack& track, std::int64_t window_start, int window) {
    WindowPath p;
    p.pos.assign(window, Vec2{0, 0});
    p.exists.assign(window, 0);
    for (int t = 0; t < window; ++t) {
        if (const auto* seg = track.segment_covering(window_start + t)) {
            p.pos[t] = seg->position_at(window_start + t);
            p.exists[t] = 1;
        }
    }
    return p;
}

} // namespace

qtc::QtcVector qtc_from_window_paths(std::span<const Vec2> center, std::span<const Vec2> member,
                                     std::span<const std::uint8_t> member_exists, std::size_t step,
                                     double rate, qtc::QtcVariant variant,
                                     const qtc::ToleranceSet& eps) {
    const std::size_t T = center.size();
    auto state = [&](std::span<const Vec2> path, std::span<const std::uint8_t> exists,
                     std::size_t t) {
        const Vec2 cur = path[t];
        const bool has_prev = t > 0 && (exists.empty() || exists[t - 1]);
        const bool has_next = t + 1 < T && (exists.empty() || exists[t + 1]);
        const Vec2 prev = has_prev ? path[t - 1] : cur;
        Vec2 vel{0, 0};
        if (has_prev) {
            vel = (cur - prev) * rate;
        } else if (has_next) {
            vel = (path[t + 1] - cur) * rate; // forward difference at a segment start
        }
        struct Triple {
            qtc::PointState prev, cur;
            std::optional<qtc::PointState> next;
        } s;
        s.cur = {cur, vel, static_cast<std::int64_t>(t)};
        s.prev = {prev, vel, static_cast<std::int64_t>(t) - 1};
        if (has_next) {
            const Vec2 nxt = path[t + 1];
            s.next = qtc::PointState{nxt, (nxt - cur) * rate, static_cast<std::int64_t>(t) + 1};
        }
        return s;
    };

    const auto rs = state(center, {}, step);
    const auto hs = state(member, member_exists, step);
    return variant == qtc::QtcVariant::C1
               ? compute_qtc_c1(rs.prev, rs.cur, rs.next, hs.prev, hs.cur, hs.next, eps)
               : compute_qtc_c2(rs.prev, rs.cur, rs.next, hs.prev, hs.cur, hs.next, eps);
}

namespace {

/// Label-step class index: impossible when the member is absent or outside
/// the radius, else the dictionary index of the window-local QTC vector.
std::uint32_t label_index(const WindowPath& center, const WindowPath& member, std::size_t t,
                          double rate, double radius, const qtc::Dictionary& dict,
                          const qtc::ToleranceSet& eps, bool snap_nearest) {
    if (!member.exists[t]) return dict.impossible_index();
    if (qtc::dist(center.pos[t], member.pos[t]) > radius) return dict.impossible_index();
    const auto v = qtc_from_window_paths(center.pos, member.pos, member.exists, t, rate,
                                         dict.variant(), eps);
    return snap_nearest ? dict.nearest_index(v) : dict.index_of(v);
}

/// Track-global QTC index for history steps (context may reach before the
/// window; the heading uses the next frame when the track has one).
std::uint32_t history_index(const data::TrackSegment& cseg, const data::AgentTrack& member,
                            std::int64_t frame, double radius, const qtc::Dictionary& dict,
                            const qtc::ToleranceSet& eps) {
    const auto* mseg = member.segment_covering(frame);
    if (!mseg) return dict.impossible_index();
    if (qtc::dist(cseg.position_at(frame), mseg->position_at(frame)) > radius) {
        return dict.impossible_index();
    }
    auto triple = [&](const data::TrackSegment& seg) {
        struct Triple {
            qtc::PointState prev, cur;
            std::optional<qtc::PointState> next;
        } s;
        s.cur = seg.state_at(frame);
        s.prev = seg.covers(frame - 1) ? seg.state_at(frame - 1) : s.cur;
        if (seg.covers(frame + 1)) s.next = seg.state_at(frame + 1);
        return s;
    };
    const auto rs = triple(cseg);
    const auto hs = triple(*mseg);
    const auto v = dict.variant() == qtc::QtcVariant::C1
                       ? compute_qtc_c1(rs.prev, rs.cur, rs.next, hs.prev, hs.cur, hs.next, eps)
                       : compute_qtc_c2(rs.prev, rs.cur, rs.next, hs.prev, hs.cur, hs.next, eps);
    return dict.index_of(v);
}

} // namespace

std::vector<ClusterSample> assemble_samples(const Memberships& memberships,
                                            const data::TrajectorySet& trajectories,
                                            const DictionaryRefs& dicts, SampleVariant variant,
                                            const ClusterConfig& config, int n_star) {
    config.validate();
    if (n_star < 0) throw UsageError("n_star must be non-negative");
    if (is_symbolic(variant)) {
        const auto* dict = dicts.for_variant(variant);
        if (!dict) throw UsageError("symbolic variants need their dictionary");
        if (dict->variant() != qtc_variant_of(variant)) {
            throw UsageError("dictionary variant does not match the sample variant");
        }
    } else if (!dicts.c1 || !dicts.c2) {
        throw UsageError("the metric variant needs both dictionaries for label freezing");
    }

    const int T_h = config.t_history;
    const int T_f = config.t_future;
    const int T = config.window_frames();
    const double rate = trajectories.rate;

    std::vector<ClusterSample> samples;
    for (const auto& wm : memberships.windows) {
        if (wm.members.empty()) continue; // nothing to predict
        if (static_cast<int>(wm.members.size()) > n_star) {
            throw UsageError("window exceeds n_star: " + std::to_string(wm.members.size()));
        }
        const auto* center = trajectories.find(wm.center_id);
        const auto* cseg = center ? center->segment_covering(wm.window_start) : nullptr;
        if (!cseg || !cseg->covers(wm.window_start + T - 1)) {
            throw UsageError("window not covered by the center track: " + wm.center_id);
        }

        ClusterSample s;
        s.center_id = wm.center_id;
        s.window_start = wm.window_start;
        s.n_real = static_cast<std::uint32_t>(wm.members.size());
        s.member_ids = wm.members;

        const Vec2 origin = cseg->position_at(wm.window_start + T_h - 1);
        s.origin_x = origin.x;
        s.origin_y = origin.y;

        if (is_symbolic(variant)) {
            const auto& dict = *dicts.for_variant(variant);
            s.slot_count = static_cast<std::uint32_t>(n_star);
            s.hist_idx.assign(s.slot_count * T_h, dict.impossible_index());
            s.label_idx.assign(s.slot_count * T_f, dict.impossible_index());
            s.hist_mask.assign(s.slot_count * T_h, 0);
            s.label_mask.assign(s.slot_count * T_f, 0);

            WindowPath cpath = window_path(*center, wm.window_start, T);
            for (std::size_t k = 0; k < wm.members.size(); ++k) {
                const auto* member = trajectories.find(wm.members[k]);
                WindowPath mpath = window_path(*member, wm.window_start, T);
                for (int t = 0; t < T_h; ++t) {
                    const auto idx = history_index(*cseg, *member, wm.window_start + t,
                                                   config.radius, dict, config.eps);
                    s.hist_idx[k * T_h + t] = idx;
                    s.hist_mask[k * T_h + t] = idx != dict.impossible_index();
                }
                for (int t = 0; t < T_f; ++t) {
                    const auto idx = label_index(cpath, mpath, T_h + t, rate, config.radius, dict,
                                                 config.eps, /*snap_nearest=*/false);
                    s.label_idx[k * T_f + t] = idx;
                    s.label_mask[k * T_f + t] = idx != dict.impossible_index();
                }
            }
        } else {
            // Metric: slot 0 carries the center's own series; members follow.
            s.slot_count = static_cast<std::uint32_t>(n_star + 1);
            s.hist_xy.assign(s.slot_count * T_h * 2, 0.0);
            s.label_xy.assign(s.slot_count * T_f * 2, 0.0);
            s.hist_mask.assign(s.slot_count * T_h, 0);
            s.label_mask.assign(s.slot_count * T_f, 0);
            s.qtc_label_c1.assign(static_cast<std::size_t>(n_star) * T_f,
                                  dicts.c1->impossible_index());
            s.qtc_label_c2.assign(static_cast<std::size_t>(n_star) * T_f,
                                  dicts.c2->impossible_index());

            // Egocentric translation, then the exact world positions the
            // extraction side will reconstruct (ego + origin).
            auto ego = [&](Vec2 world) { return world - origin; };

            WindowPath cpath = window_path(*center, wm.window_start, T);
            for (int t = 0; t < T; ++t) cpath.pos[t] = ego(cpath.pos[t]) + origin;
            for (int t = 0; t < T_h; ++t) {
                const Vec2 e = ego(cseg->position_at(wm.window_start + t));
                s.hist_xy[(0 * T_h + t) * 2] = e.x;
                s.hist_xy[(0 * T_h + t) * 2 + 1] = e.y;
                s.hist_mask[0 * T_h + t] = 1;
            }
            for (int t = 0; t < T_f; ++t) {
                const Vec2 e = ego(cseg->position_at(wm.window_start + T_h + t));
                s.label_xy[(0 * T_f + t) * 2] = e.x;
                s.label_xy[(0 * T_f + t) * 2 + 1] = e.y;
                s.label_mask[0 * T_f + t] = 1;
            }

            for (std::size_t k = 0; k < wm.members.size(); ++k) {
                const std::uint32_t slot = static_cast<std::uint32_t>(k + 1);
                const auto* member = trajectories.find(wm.members[k]);
                WindowPath mpath = window_path(*member, wm.window_start, T);
                for (int t = 0; t < T; ++t) {
                    if (mpath.exists[t]) mpath.pos[t] = ego(mpath.pos[t]) + origin;
                }
                for (int t = 0; t < T; ++t) {
                    const bool exists = mpath.exists[t];
                    const bool in_radius =
                        exists && qtc::dist(cpath.pos[t], mpath.pos[t]) <= config.radius;
                    const Vec2 e = exists ? ego(mpath.pos[t]) : Vec2{0, 0};
                    if (t < T_h) {
                        s.hist_xy[(slot * T_h + t) * 2] = e.x;
                        s.hist_xy[(slot * T_h + t) * 2 + 1] = e.y;
                        s.hist_mask[slot * T_h + t] = in_radius;
                    } else {
                        s.label_xy[(slot * T_f + (t - T_h)) * 2] = e.x;
                        s.label_xy[(slot * T_f + (t - T_h)) * 2 + 1] = e.y;
                        s.label_mask[slot * T_f + (t - T_h)] = in_radius;
                    }
                }
                for (int t = 0; t < T_f; ++t) {
                    s.qtc_label_c1[k * T_f + t] =
                        label_index(cpath, mpath, T_h + t, rate, config.radius, *dicts.c1,
                                    config.eps, /*snap_nearest=*/false);
                    s.qtc_label_c2[k * T_f + t] =
                        label_index(cpath, mpath, T_h + t, rate, config.radius, *dicts.c2,
                                    config.eps, /*snap_nearest=*/false);
                }
            }
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace masi::cluster
