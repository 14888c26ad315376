#include <doctest.h>

#include <vector>

#include "masi/errors.hpp"
#include "masi/qtc.hpp"
#include "masi/rng.hpp"
#include "qtc_reference.hpp"
#include "support.hpp"

using namespace masi;
using namespace masi::qtc;

namespace {

QtcVector vec(QtcVariant variant, std::initializer_list<int> encodings) {
    std::vector<QtcSymbol> s;
    for (int e : encodings) s.push_back(symbol_from_encoding(e));
    return QtcVector(variant, s);
}

QtcVector c1(const testsup::PairWindow& w, const ToleranceSet& eps = {}) {
    return compute_qtc_c1(w.r_prev, w.r_cur, w.r_next, w.h_prev, w.h_cur, w.h_next, eps);
}

QtcVector c2(const testsup::PairWindow& w, const ToleranceSet& eps = {}) {
    return compute_qtc_c2(w.r_prev, w.r_cur, w.r_next, w.h_prev, w.h_cur, w.h_next, eps);
}

} // namespace

TEST_CASE("qtc vector construction rejects mixed impossible forms") {
    std::vector<QtcSymbol> mixed{QtcSymbol::Minus, QtcSymbol::Impossible, QtcSymbol::Zero,
                                 QtcSymbol::Plus};
    CHECK_THROWS_AS(QtcVector(QtcVariant::C1, mixed), UsageError);
    std::vector<QtcSymbol> wrong_len{QtcSymbol::Minus, QtcSymbol::Zero};
    CHECK_THROWS_AS(QtcVector(QtcVariant::C1, wrong_len), UsageError);
    CHECK(QtcVector::impossible(QtcVariant::C2).is_impossible());
    CHECK(encode(QtcSymbol::Impossible) == 10);
}

TEST_CASE("collinear head-on approach gives (-,-,0,0)") {
    auto w = testsup::window_from_tracks({{{0, 0}, {1, 0}, {2, 0}}}, {{{10, 0}, {9, 0}, {8, 0}}});
    CHECK(c1(w) == vec(QtcVariant::C1, {-1, -1, 0, 0}));
}

TEST_CASE("mutually stationary pair gives all zeros") {
    auto w = testsup::window_from_tracks({{{0, 0}, {0, 0}, {0, 0}}}, {{{5, 0}, {5, 0}, {5, 0}}});
    CHECK(c1(w) == vec(QtcVariant::C1, {0, 0, 0, 0}));
    CHECK(c2(w) == vec(QtcVariant::C2, {0, 0, 0, 0, 0, 0}));
}

TEST_CASE("parallel offset approach pins the side convention") {
    // Point-symmetric configuration: a half-turn maps r's kinematics onto
    // h's, so q3 and q4 must agree; the sign convention makes them '+'.
    auto w = testsup::window_from_tracks({{{0, 0}, {1, 0}, {2, 0}}}, {{{10, 1}, {9, 1}, {8, 1}}});
    CHECK(c1(w) == vec(QtcVariant::C1, {-1, -1, 1, 1}));
    // Equal speeds and mirror-equal angles by construction: q5 = q6 = 0.
    CHECK(c2(w) == vec(QtcVariant::C2, {-1, -1, 1, 1, 0, 0}));
}

TEST_CASE("faster agent gets q5 plus") {
    auto w = testsup::window_from_tracks({{{0, 0}, {2, 0}, {4, 0}}}, {{{10, 0}, {9, 0}, {8, 0}}});
    auto v = c2(w);
    CHECK(v[4] == QtcSymbol::Plus);
}

TEST_CASE("identical mirrored motion zeroes q5 and q6") {
    auto w = testsup::window_from_tracks({{{0, 1}, {1, 1}, {2, 1}}}, {{{7, -1}, {6, -1}, {5, -1}}});
    auto v = c2(w);
    CHECK(v[4] == QtcSymbol::Zero);
    CHECK(v[5] == QtcSymbol::Zero);
}

TEST_CASE("missing next states fall back to the backward heading") {
    auto w = testsup::window_from_tracks({{{0, 0}, {1, 0}, {2, 0}}}, {{{10, 1}, {9, 1}, {8, 1}}});
    w.r_next.reset();
    w.h_next.reset();
    CHECK(c1(w) == vec(QtcVariant::C1, {-1, -1, 1, 1}));
}

TEST_CASE("coincident positions raise a degenerate pair error") {
    auto w = testsup::window_from_tracks({{{0, 0}, {1, 0}, {2, 0}}}, {{{2, 0}, {1, 0}, {0, 0}}});
    CHECK_THROWS_AS(c1(w), DegeneratePairError);
    CHECK_THROWS_AS(c2(w), DegeneratePairError);
}

TEST_CASE("tolerances must be strictly positive") {
    ToleranceSet eps;
    eps.speed = 0.0;
    auto w = testsup::window_from_tracks({{{0, 0}, {1, 0}, {2, 0}}}, {{{10, 0}, {9, 0}, {8, 0}}});
    CHECK_THROWS_AS(c2(w, eps), UsageError);
}

TEST_CASE("conceptual distance matches the per-symbol encoding") {
    CHECK(conceptual_distance(vec(QtcVariant::C1, {-1, -1, 0, 0}),
                              vec(QtcVariant::C1, {-1, -1, 0, 0})) == 0);
    CHECK(conceptual_distance(vec(QtcVariant::C1, {-1, -1, 0, 0}),
                              vec(QtcVariant::C1, {1, 1, 0, 0})) == 4);
    CHECK(conceptual_distance(vec(QtcVariant::C1, {0, 0, 0, 0}),
                              QtcVector::impossible(QtcVariant::C1)) == 40);
    CHECK(conceptual_distance(vec(QtcVariant::C2, {0, 0, 0, 0, 0, 0}),
                              QtcVector::impossible(QtcVariant::C2)) == 60);
    CHECK_THROWS_AS(conceptual_distance(vec(QtcVariant::C1, {0, 0, 0, 0}),
                                        vec(QtcVariant::C2, {0, 0, 0, 0, 0, 0})),
                    UsageError);
}

TEST_CASE("conceptual distance satisfies the metric axioms") {
    Rng rng(41);
    auto random_vec = [&](QtcVariant variant) {
        std::vector<QtcSymbol> s;
        for (std::size_t i = 0; i < symbol_count(variant); ++i) {
            s.push_back(symbol_from_encoding(static_cast<int>(rng.next_below(3)) - 1));
        }
        if (rng.bernoulli(0.05)) return QtcVector::impossible(variant);
        return QtcVector(variant, s);
    };
    for (QtcVariant variant : {QtcVariant::C1, QtcVariant::C2}) {
        int max_in_domain = 0;
        for (int i = 0; i < 1000; ++i) {
            const auto a = random_vec(variant);
            const auto b = random_vec(variant);
            const auto c = random_vec(variant);
            const int dab = conceptual_distance(a, b);
            CHECK(dab >= 0);
            CHECK((dab == 0) == (a == b));
            CHECK(dab == conceptual_distance(b, a));
            CHECK(conceptual_distance(a, c) <= dab + conceptual_distance(b, c));
            if (!a.is_impossible() && !b.is_impossible()) max_in_domain = std::max(max_in_domain, dab);
        }
        CHECK(max_in_domain <= (variant == QtcVariant::C1 ? 8 : 12));
    }
    // The in-domain extremes are attained.
    CHECK(conceptual_distance(vec(QtcVariant::C1, {-1, -1, -1, -1}),
                              vec(QtcVariant::C1, {1, 1, 1, 1})) == 8);
    CHECK(conceptual_distance(vec(QtcVariant::C2, {-1, -1, -1, -1, -1, -1}),
                              vec(QtcVariant::C2, {1, 1, 1, 1, 1, 1})) == 12);
}

TEST_CASE("swapping the agents swaps q1/q2 and q3/q4 and flips q5/q6") {
    Rng rng(1977);
    for (int i = 0; i < 3000; ++i) {
        const auto w = testsup::random_pair_window(rng);
        const auto ab = c2(w);
        testsup::PairWindow s;
        s.r_prev = w.h_prev;
        s.r_cur = w.h_cur;
        s.r_next = w.h_next;
        s.h_prev = w.r_prev;
        s.h_cur = w.r_cur;
        s.h_next = w.r_next;
        const auto ba = c2(s);
        CHECK(ab[0] == ba[1]);
        CHECK(ab[1] == ba[0]);
        CHECK(ab[2] == ba[3]);
        CHECK(ab[3] == ba[2]);
        CHECK(encode(ab[4]) == -encode(ba[4]));
        CHECK(encode(ab[5]) == -encode(ba[5]));
    }
}

TEST_CASE("oracle equivalence against the straight-line transcription") {
    Rng rng(20260811);
    const ToleranceSet eps;
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto w = testsup::random_pair_window(rng);
        qtc_ref::Agent r{{w.r_prev.position.x, w.r_prev.position.y},
                         {w.r_cur.position.x, w.r_cur.position.y},
                         std::nullopt,
                         w.r_cur.velocity.x,
                         w.r_cur.velocity.y};
        if (w.r_next) r.next = qtc_ref::P{w.r_next->position.x, w.r_next->position.y};
        qtc_ref::Agent h{{w.h_prev.position.x, w.h_prev.position.y},
                         {w.h_cur.position.x, w.h_cur.position.y},
                         std::nullopt,
                         w.h_cur.velocity.x,
                         w.h_cur.velocity.y};
        if (w.h_next) h.next = qtc_ref::P{w.h_next->position.x, w.h_next->position.y};

        const auto expect4 = qtc_ref::qtc_c1(r, h, eps);
        const auto expect6 = qtc_ref::qtc_c2(r, h, eps);
        const auto got4 = c1(w, eps);
        const auto got6 = c2(w, eps);
        for (int k = 0; k < 4; ++k) CHECK(encode(got4[k]) == expect4[k]);
        for (int k = 0; k < 6; ++k) CHECK(encode(got6[k]) == expect6[k]);
        ++checked;
    }
    CHECK(checked == 10000);
}
