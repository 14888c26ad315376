#include <doctest.h>

#include <sstream>

#include "masi/errors.hpp"
#include "masi/qtc.hpp"

using namespace masi;
using namespace masi::qtc;

namespace {

/// Dictionaries are expensive to enumerate; share one per variant.
const Dictionary& shared_dict(QtcVariant variant) {
    static const auto c1 = [] {
        SamplingConfig cfg;
        cfg.stability_check = false;
        return build_dictionary(QtcVariant::C1, cfg);
    }();
    static const auto c2 = [] {
        SamplingConfig cfg;
        cfg.stability_check = false;
        return build_dictionary(QtcVariant::C2, cfg);
    }();
    return variant == QtcVariant::C1 ? c1.first : c2.first;
}

} // namespace

const Dictionary& test_dictionary(QtcVariant variant) { return shared_dict(variant); }

TEST_CASE("c1 dictionary has exactly 82 canonical entries") {
    const auto& dict = shared_dict(QtcVariant::C1);
    CHECK(dict.size() == 82);
    CHECK(dict.vector_at(dict.impossible_index()).is_impossible());
    // canonical order: strictly increasing keys, impossible last
    for (std::size_t i = 0; i + 1 < dict.size(); ++i) {
        CHECK(dict.entries()[i].key() < dict.entries()[i + 1].key());
    }
}

TEST_CASE("collinear-only sampling yields at most 10 c1 entries") {
    SamplingConfig cfg;
    cfg.collinear_only = true;
    cfg.stability_check = false;
    cfg.random_samples = 20000;
    auto [dict, report] = build_dictionary(QtcVariant::C1, cfg);
    CHECK(dict.size() <= 10);
    for (const auto& e : dict.entries()) {
        if (e.is_impossible()) continue;
        CHECK(e[2] == QtcSymbol::Zero);
        CHECK(e[3] == QtcSymbol::Zero);
    }
}

TEST_CASE("c2 dictionary enumeration is deterministic and reports against the target") {
    SamplingConfig cfg;
    cfg.stability_check = false;
    auto [a, ra] = build_dictionary(QtcVariant::C2, cfg);
    auto [b, rb] = build_dictionary(QtcVariant::C2, cfg);
    CHECK(a.size() == b.size());
    CHECK(a.digest() == b.digest());
    CHECK(ra.target_entries == 444);
    CHECK(ra.entries == ra.realizable + 1);
    if (!ra.matches_target()) {
        std::ostringstream out;
        ra.write_deviation_report(out);
        CHECK(out.str().find("deviation") != std::string::npos);
        CHECK(ra.witnesses.size() == ra.realizable);
    }
}

TEST_CASE("dictionary lookups round-trip and fail loudly") {
    const auto& dict = shared_dict(QtcVariant::C1);
    CHECK(dict.index_of(QtcVector::impossible(QtcVariant::C1)) == dict.size() - 1);
    const auto& first = dict.vector_at(0);
    CHECK(dict.index_of(first) == 0);
    for (std::uint32_t i = 0; i < dict.size(); ++i) {
        CHECK(dict.index_of(dict.vector_at(i)) == i);
    }
    CHECK_THROWS_AS(dict.vector_at(static_cast<std::uint32_t>(dict.size())), LookupError);

    // a C2 combo outside the realizable set must fail index_of and snap to a
    // nearest entry instead
    const auto& d2 = shared_dict(QtcVariant::C2);
    bool found_missing = false;
    std::vector<QtcSymbol> s(6, QtcSymbol::Zero);
    for (int a = -1; a <= 1 && !found_missing; ++a) {
        for (int b = -1; b <= 1 && !found_missing; ++b) {
            for (int c = -1; c <= 1 && !found_missing; ++c) {
                s[0] = symbol_from_encoding(a);
                s[1] = symbol_from_encoding(b);
                s[4] = symbol_from_encoding(c);
                s[5] = symbol_from_encoding(1);
                QtcVector v(QtcVariant::C2, s);
                if (!d2.try_index(v)) {
                    found_missing = true;
                    CHECK_THROWS_AS(d2.index_of(v), LookupError);
                    const auto snapped = d2.nearest_index(v);
                    CHECK(snapped < d2.size());
                    CHECK(conceptual_distance(d2.vector_at(snapped), v) > 0);
                }
            }
        }
    }
    CHECK(found_missing); // 108 in-domain combos are unrealizable
}

TEST_CASE("nearest_index prefers the lower index on ties") {
    const auto& dict = shared_dict(QtcVariant::C1);
    // any in-dictionary vector snaps to itself
    CHECK(dict.nearest_index(dict.vector_at(5)) == 5);
}

TEST_CASE("sampling config validation") {
    SamplingConfig cfg;
    cfg.ranges.clear();
    CHECK_THROWS_AS(build_dictionary(QtcVariant::C1, cfg), UsageError);
    SamplingConfig neg;
    neg.speeds = {-1.0};
    CHECK_THROWS_AS(build_dictionary(QtcVariant::C1, neg), UsageError);
}
