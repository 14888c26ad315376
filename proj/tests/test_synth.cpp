#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "masi/errors.hpp"
#include "masi/synth.hpp"

using namespace masi;
using namespace masi::synth;
using qtc::QtcVariant;

namespace {

/// compute_qtc_c* over a closed-form pair's generated tracks.
std::vector<qtc::QtcVector> computed_stream(const ClosedFormPair& pair, QtcVariant variant) {
    auto [r, h] = pair.tracks();
    std::vector<qtc::QtcVector> out;
    const qtc::ToleranceSet eps;
    for (int t = 1; t < pair.frames; ++t) {
        auto state = [&](const std::vector<qtc::Vec2>& p) {
            struct S {
                qtc::PointState prev, cur;
                std::optional<qtc::PointState> next;
            } s;
            const qtc::Vec2 vel = (p[t] - p[t - 1]) * pair.rate;
            s.cur = {p[t], vel, t};
            s.prev = {p[t - 1], vel, t - 1};
            if (t + 1 < pair.frames) {
                s.next = qtc::PointState{p[t + 1], (p[t + 1] - p[t]) * pair.rate, t + 1};
            }
            return s;
        };
        const auto rs = state(r);
        const auto hs = state(h);
        out.push_back(variant == QtcVariant::C1
                          ? compute_qtc_c1(rs.prev, rs.cur, rs.next, hs.prev, hs.cur, hs.next, eps)
                          : compute_qtc_c2(rs.prev, rs.cur, rs.next, hs.prev, hs.cur, hs.next, eps));
    }
    return out;
}

/// Frames whose symbols may disagree: one frame around any analytic change.
std::set<std::size_t> transition_fuzz(const std::vector<qtc::QtcVector>& analytic) {
    std::set<std::size_t> fuzz;
    for (std::size_t i = 1; i < analytic.size(); ++i) {
        if (!(analytic[i] == analytic[i - 1])) {
            fuzz.insert(i - 1);
            fuzz.insert(i);
            if (i + 1 < analytic.size()) fuzz.insert(i + 1);
        }
    }
    return fuzz;
}

void check_stream(const ClosedFormPair& pair, QtcVariant variant) {
    const auto expect = analytic_qtc(pair, variant);
    const auto got = computed_stream(pair, variant);
    REQUIRE(expect.size() == got.size());
    const auto fuzz = transition_fuzz(expect);
    for (std::size_t i = 0; i < got.size(); ++i) {
        if (fuzz.count(i)) continue;
        CAPTURE(i);
        CAPTURE(expect[i].to_string());
        CAPTURE(got[i].to_string());
        CHECK(expect[i] == got[i]);
    }
}

} // namespace

TEST_CASE("head-on analytic stream matches the computed symbols") {
    ClosedFormPair pair;
    pair.primitive = Primitive::HeadOn;
    pair.separation = 8.0;
    pair.speed_r = 1.2;
    pair.speed_h = 1.2;
    pair.frames = 120;
    check_stream(pair, QtcVariant::C1);
    check_stream(pair, QtcVariant::C2);
    // pre-crossing symbols are a pure approach
    const auto s = analytic_qtc(pair, QtcVariant::C1);
    CHECK(s.front().to_string() == "(-,-,0,0)");
}

TEST_CASE("unequal-speed head-on carries the q5 sign") {
    ClosedFormPair pair;
    pair.primitive = Primitive::HeadOn;
    pair.speed_r = 1.4;
    pair.speed_h = 0.9;
    pair.frames = 100;
    check_stream(pair, QtcVariant::C2);
    CHECK(analytic_qtc(pair, QtcVariant::C2).front()[4] == qtc::QtcSymbol::Plus);
}

TEST_CASE("overtake closes with q1 minus, q2 plus and q5 plus") {
    ClosedFormPair pair;
    pair.primitive = Primitive::Overtake;
    pair.separation = 5.0;
    pair.speed_r = 1.5;
    pair.speed_h = 0.8;
    pair.frames = 150;
    check_stream(pair, QtcVariant::C1);
    check_stream(pair, QtcVariant::C2);
    const auto s = analytic_qtc(pair, QtcVariant::C2);
    CHECK(s.front().to_string() == "(-,+,0,0,+,-)");
    CHECK(s.back().to_string() == "(-,+,0,0,0,-)"); // convoy
}

TEST_CASE("pass-by flips towards/away at the closest approach") {
    ClosedFormPair pair;
    pair.primitive = Primitive::PassBy;
    pair.separation = 10.0;
    pair.lateral = 1.0;
    pair.speed_r = 1.0;
    pair.speed_h = 1.0;
    pair.frames = 200;
    check_stream(pair, QtcVariant::C1);
    check_stream(pair, QtcVariant::C2);
    const auto s = analytic_qtc(pair, QtcVariant::C2);
    CHECK(s.front().to_string() == "(-,-,+,+,0,0)");
    CHECK(s.back().to_string() == "(+,+,+,+,0,0)");
    // mirrored lane gives the mirrored side symbols
    ClosedFormPair mirrored = pair;
    mirrored.lateral = -1.0;
    check_stream(mirrored, QtcVariant::C1);
    CHECK(analytic_qtc(mirrored, QtcVariant::C1).front().to_string() == "(-,-,-,-)");
}

TEST_CASE("static pair is all zeros") {
    ClosedFormPair pair;
    pair.primitive = Primitive::StaticGroup;
    pair.frames = 30;
    check_stream(pair, QtcVariant::C2);
    for (const auto& v : analytic_qtc(pair, QtcVariant::C2)) {
        CHECK(v.to_string() == "(0,0,0,0,0,0)");
    }
}

TEST_CASE("non-closed-form primitives are unsupported") {
    ClosedFormPair pair;
    pair.primitive = Primitive::RandomWaypoint;
    CHECK_THROWS_AS(analytic_qtc(pair, QtcVariant::C1), UsageError);
    CHECK_THROWS_AS(pair.tracks(), UsageError);
}

TEST_CASE("scenario generation is deterministic") {
    const auto spec = ScenarioSpec::waypoint_crowd(6, 300, 99);
    const auto a = generate_scenario(spec);
    const auto b = generate_scenario(spec);
    REQUIRE(a.agents.size() == b.agents.size());
    for (std::size_t i = 0; i < a.agents.size(); ++i) {
        REQUIRE(a.agents[i].segments.size() == 1);
        CHECK(a.agents[i].segments[0].positions == b.agents[i].segments[0].positions);
    }
}

TEST_CASE("scenario respects track shape, bounds and separation") {
    auto spec = ScenarioSpec::mixed(20, 500, 7, 7.0, 2);
    const auto ts = generate_scenario(spec);
    int dynamic = 0;
    for (const auto& agent : ts.agents) {
        if (agent.is_static) continue;
        ++dynamic;
        REQUIRE(agent.segments.size() == 1);
        CHECK(agent.segments[0].positions.size() == 500);
        for (const auto& p : agent.segments[0].positions) {
            CHECK(std::isfinite(p.x));
            CHECK(std::abs(p.x) <= 7.0);
            CHECK(std::abs(p.y) <= 7.0);
        }
    }
    CHECK(dynamic == 20);
    CHECK(ts.static_objects.size() == 2);

    // pairwise separation (exact coincidence is rejected by construction)
    double min_d = 1e9;
    for (std::size_t i = 0; i < ts.agents.size(); ++i) {
        for (std::size_t j = i + 1; j < ts.agents.size(); ++j) {
            const auto& a = ts.agents[i].segments[0];
            const auto& b = ts.agents[j].segments[0];
            for (std::size_t t = 0; t < 500; ++t) {
                min_d = std::min(min_d, qtc::dist(a.positions[t], b.positions[t]));
            }
        }
    }
    CHECK(min_d >= 0.05);
}

TEST_CASE("infeasible scenarios raise a generation error") {
    auto spec = ScenarioSpec::waypoint_crowd(500, 50, 3, 2.0);
    CHECK_THROWS_AS(generate_scenario(spec), DataError);
    ScenarioSpec bad;
    CHECK_THROWS_AS(generate_scenario(bad), UsageError);
}

TEST_CASE("primitive mix covers every symbol value of every relation") {
    // closed-form streams plus a waypoint crowd jointly hit {-,0,+} for q1..q6
    std::map<int, std::set<int>> seen;
    auto absorb = [&](const std::vector<qtc::QtcVector>& stream) {
        for (const auto& v : stream) {
            for (std::size_t i = 0; i < v.size(); ++i) seen[static_cast<int>(i)].insert(encode(v[i]));
            // swapping the agents covers the mirrored relation too
            seen[0].insert(encode(v[1]));
            seen[1].insert(encode(v[0]));
            seen[2].insert(encode(v[3]));
            seen[3].insert(encode(v[2]));
            seen[4].insert(-encode(v[4]));
            seen[5].insert(-encode(v[5]));
        }
    };
    ClosedFormPair head;
    head.primitive = Primitive::HeadOn;
    head.speed_r = 1.4;
    head.speed_h = 0.9;
    absorb(computed_stream(head, QtcVariant::C2));
    ClosedFormPair take;
    take.primitive = Primitive::Overtake;
    take.separation = 5.0;
    take.speed_r = 1.5;
    take.speed_h = 0.8;
    absorb(computed_stream(take, QtcVariant::C2));
    ClosedFormPair swap = take; // mirrored roles flip q5/q6
    std::swap(swap.speed_r, swap.speed_h);
    swap.primitive = Primitive::PassBy;
    swap.lateral = 1.0;
    absorb(computed_stream(swap, QtcVariant::C2));
    ClosedFormPair pass = swap;
    pass.lateral = -1.0;
    pass.speed_r = 1.3;
    absorb(computed_stream(pass, QtcVariant::C2));
    ClosedFormPair stat;
    stat.primitive = Primitive::StaticGroup;
    absorb(computed_stream(stat, QtcVariant::C2));

    for (int q = 0; q < 6; ++q) {
        CAPTURE(q);
        CHECK(seen[q].count(-1));
        CHECK(seen[q].count(0));
        CHECK(seen[q].count(1));
    }
}
