#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace masi::qtc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

double norm(Vec2 v);
double dist(Vec2 a, Vec2 b);
double dot(Vec2 a, Vec2 b);
double cross(Vec2 a, Vec2 b);
/// Absolute angle between two non-zero vectors, in [0, pi].
double angle_between(Vec2 a, Vec2 b);

/// One agent at one frame: position, velocity, and the frame index.
struct PointState {
    Vec2 position;
    Vec2 velocity;
    std::int64_t timestamp_index = 0;
};

enum class QtcSymbol : std::int8_t { Minus = -1, Zero = 0, Plus = 1, Impossible = 10 };

/// Numeric encoding used by the conceptual distance: -1, 0, +1, 10.
inline int encode(QtcSymbol s) { return static_cast<int>(s); }
QtcSymbol symbol_from_encoding(int value);
char symbol_char(QtcSymbol s);

enum class QtcVariant : std::uint8_t { C1 = 0, C2 = 1 };

inline std::size_t symbol_count(QtcVariant v) { return v == QtcVariant::C1 ? 4 : 6; }
std::string variant_name(QtcVariant v);

/// An ordered tuple of 4 (C1) or 6 (C2) QTC symbols. Either all symbols lie
/// in {-,0,+} or all are Impossible; mixed forms are rejected.
class QtcVector {
public:
    QtcVector(QtcVariant variant, std::span<const QtcSymbol> symbols);
    static QtcVector impossible(QtcVariant variant);

    QtcVariant variant() const { return variant_; }
    std::size_t size() const { return symbol_count(variant_); }
    QtcSymbol operator[](std::size_t i) const { return symbols_[i]; }
    bool is_impossible() const { return symbols_[0] == QtcSymbol::Impossible; }

    /// Packed key whose integer order equals lexicographic order by numeric
    /// symbol encoding (dictionary canonical order).
    std::uint64_t key() const;

    std::string to_string() const;

    friend bool operator==(const QtcVector& a, const QtcVector& b) {
        return a.variant_ == b.variant_ && a.symbols_ == b.symbols_;
    }

private:
    QtcVariant variant_;
    std::array<QtcSymbol, 6> symbols_{};
};

/// Comparison tolerances below which a relation collapses to the 0 symbol.
/// All fields must be strictly positive.
struct ToleranceSet {
    double distance = 1e-3; // meters, change-of-distance comparisons
    double cross = 1e-3;    // cross product of normalized vectors
    double speed = 1e-3;    // meters/second
    double angle = 1e-3;    // radians

    void validate() const;
};

/// QTC_C1 relation (q1..q4) between agents r and h at the frame of *_cur.
/// Missing next-states fall back to the previous displacement for the heading.
/// Throws DegeneratePairError when the current positions coincide within
/// eps.distance (the reference line is undefined).
QtcVector compute_qtc_c1(const PointState& r_prev, const PointState& r_cur,
                         const std::optional<PointState>& r_next,
                         const PointState& h_prev, const PointState& h_cur,
                         const std::optional<PointState>& h_next,
                         const ToleranceSet& eps);

/// QTC_C2 relation (q1..q6): q1..q4 as C1, q5 compares speed magnitudes,
/// q6 compares the absolute angles between each velocity and the line to the
/// other agent. A zero-velocity agent has its angle defined as 0.
QtcVector compute_qtc_c2(const PointState& r_prev, const PointState& r_cur,
                         const std::optional<PointState>& r_next,
                         const PointState& h_prev, const PointState& h_cur,
                         const std::optional<PointState>& h_next,
                         const ToleranceSet& eps);

/// L1 distance between same-variant vectors under the numeric encoding:
/// 0 vs +/- is 1, + vs - is 2, Impossible vs {-,0,+} is {11,10,9}.
int conceptual_distance(const QtcVector& a, const QtcVector& b);

/// Kinematic sampling density for dictionary enumeration. The family covers
/// piecewise-constant-velocity motion including stops, starts and turns:
/// each agent gets independent backward and forward frame displacements.
struct SamplingConfig {
    std::vector<double> ranges{0.3, 0.8, 1.2, 2.0, 3.0, 3.6}; // pair separations, m
    std::vector<double> speeds{0.15, 0.4, 0.75, 1.5};         // nonzero speeds, m/s
    int angle_divisions = 8;                                  // grid over [0, 2pi)
    std::size_t random_samples = 400000;                      // seeded refinement draws
    std::uint64_t seed = 0x6d617369u;
    double rate = 15.0; // frames/second
    bool collinear_only = false;
    bool stability_check = true; // re-enumerate at doubled density
    ToleranceSet eps{};

    void validate() const;
    SamplingConfig doubled() const;
};

/// Outcome of a dictionary enumeration: counts, the stability flag, and one
/// kinematic witness per realized vector so disputed entries can be audited.
struct DictionaryReport {
    struct Witness {
        double range = 0;
        double r_back_speed = 0, r_back_angle = 0, r_fwd_speed = 0, r_fwd_angle = 0;
        double h_back_speed = 0, h_back_angle = 0, h_fwd_speed = 0, h_fwd_angle = 0;
    };

    std::size_t realizable = 0;
    std::size_t entries = 0;        // realizable + impossible
    std::size_t target_entries = 0; // 82 for C1, 444 for C2
    bool stable = true;
    std::vector<std::pair<QtcVector, Witness>> witnesses; // canonical order
    std::vector<QtcVector> unrealized;                    // in-domain combos never produced

    bool matches_target() const { return entries == target_entries; }
    /// Full audit listing for builds whose entry count misses the target.
    void write_deviation_report(std::ostream& out) const;
};

/// Bijection between realizable QtcVectors (plus the impossible vector, which
/// always occupies the last index) and integer class indices.
class Dictionary {
public:
    Dictionary(QtcVariant variant, std::vector<QtcVector> realizable_sorted);

    QtcVariant variant() const { return variant_; }
    std::size_t size() const { return entries_.size(); }
    std::uint32_t impossible_index() const { return static_cast<std::uint32_t>(entries_.size() - 1); }

    /// Throws LookupError for an out-of-range index.
    const QtcVector& vector_at(std::uint32_t index) const;
    /// Throws LookupError for a vector outside the dictionary.
    std::uint32_t index_of(const QtcVector& v) const;
    std::optional<std::uint32_t> try_index(const QtcVector& v) const;
    /// Closest entry by conceptual distance; ties resolve to the lower index.
    std::uint32_t nearest_index(const QtcVector& v) const;

    std::span<const QtcVector> entries() const { return entries_; }
    std::uint64_t digest() const;

private:
    QtcVariant variant_;
    std::vector<QtcVector> entries_;
    std::unordered_map<std::uint64_t, std::uint32_t> index_;
};

/// Enumerates realizable vectors by dense deterministic sampling of kinematic
/// pair configurations, deduplicates, sorts canonically and appends the
/// impossible vector. Degenerate samples are skipped.
std::pair<Dictionary, DictionaryReport> build_dictionary(QtcVariant variant,
                                                         const SamplingConfig& sampling);

} // namespace masi::qtc
