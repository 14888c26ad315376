#include "masi/qtc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "masi/errors.hpp"
#include "masi/rng.hpp"

namespace masi::qtc {

double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
double dist(Vec2 a, Vec2 b) { return norm(a - b); }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

double angle_between(Vec2 a, Vec2 b) {
    return std::atan2(std::abs(cross(a, b)), dot(a, b));
}

QtcSymbol symbol_from_encoding(int value) {
    switch (value) {
    case -1: return QtcSymbol::Minus;
    case 0: return QtcSymbol::Zero;
    case 1: return QtcSymbol::Plus;
    case 10: return QtcSymbol::Impossible;
    default: throw UsageError("invalid QTC symbol encoding: " + std::to_string(value));
    }
}

char symbol_char(QtcSymbol s) {
    switch (s) {
    case QtcSymbol::Minus: return '-';
    case QtcSymbol::Zero: return '0';
    case QtcSymbol::Plus: return '+';
    case QtcSymbol::Impossible: return 'X';
    }
    return '?';
}

std::string variant_name(QtcVariant v) { return v == QtcVariant::C1 ? "C1" : "C2"; }

QtcVector::QtcVector(QtcVariant variant, std::span<const QtcSymbol> symbols) : variant_(variant) {
    const std::size_t m = symbol_count(variant);
    if (symbols.size() != m) {
        throw UsageError("QtcVector " + variant_name(variant) + " needs " + std::to_string(m) +
                         " symbols, got " + std::to_string(symbols.size()));
    }
    bool any_impossible = false;
    bool all_impossible = true;
    for (std::size_t i = 0; i < m; ++i) {
        symbols_[i] = symbols[i];
        if (symbols[i] == QtcSymbol::Impossible) {
            any_impossible = true;
        } else {
            all_impossible = false;
        }
    }
    if (any_impossible && !all_impossible) {
        throw UsageError("mixed impossible/in-domain QTC symbols are rejected");
    }
}

QtcVector QtcVector::impossible(QtcVariant variant) {
    std::array<QtcSymbol, 6> s{};
    s.fill(QtcSymbol::Impossible);
    return QtcVector(variant, std::span<const QtcSymbol>(s.data(), symbol_count(variant)));
}

std::uint64_t QtcVector::key() const {
    // Byte per symbol, offset so Minus < Zero < Plus < Impossible, packed
    // big-endian: integer order equals lexicographic order by encoding.
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        k = (k << 8) | static_cast<std::uint8_t>(encode(symbols_[i]) + 1);
    }
    return k;
}

std::string QtcVector::to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < size(); ++i) {
        if (i) s += ',';
        s += symbol_char(symbols_[i]);
    }
    s += ')';
    return s;
}

void ToleranceSet::validate() const {
    if (!(distance > 0) || !(cross > 0) || !(speed > 0) || !(angle > 0)) {
        throw UsageError("ToleranceSet fields must be strictly positive");
    }
}

namespace {

QtcSymbol sign_symbol(double value, double eps) {
    if (value > eps) return QtcSymbol::Plus;
    if (value < -eps) return QtcSymbol::Minus;
    return QtcSymbol::Zero;
}

Vec2 heading_of(const PointState& prev, const PointState& cur, const std::optional<PointState>& next) {
    if (next.has_value()) return next->position - cur.position;
    return cur.position - prev.position;
}

/// Side symbol for one agent: + when the heading points to the right of the
/// line toward the other agent (positive normalized cross product).
QtcSymbol side_symbol(Vec2 heading, Vec2 to_other, const ToleranceSet& eps) {
    const double hn = norm(heading);
    const double ln = norm(to_other);
    if (hn == 0.0 || ln == 0.0) return QtcSymbol::Zero;
    const double c = cross(heading, to_other) / (hn * ln);
    return sign_symbol(c, eps.cross);
}

/// Towards/away symbol: minus when the backward step brought the agent closer
/// to the other agent's current position.
QtcSymbol approach_symbol(Vec2 own_prev, Vec2 own_cur, Vec2 other_cur, const ToleranceSet& eps) {
    const double d_prev = dist(own_prev, other_cur);
    const double d_cur = dist(own_cur, other_cur);
    return sign_symbol(d_cur - d_prev, eps.distance); // d shrinking -> Minus
}

double line_angle(Vec2 velocity, Vec2 to_other) {
    if (velocity.x == 0.0 && velocity.y == 0.0) return 0.0;
    if (to_other.x == 0.0 && to_other.y == 0.0) return 0.0;
    return angle_between(velocity, to_other);
}

void check_pair(const PointState& r_cur, const PointState& h_cur, const ToleranceSet& eps) {
    eps.validate();
    if (dist(r_cur.position, h_cur.position) < eps.distance) {
        throw DegeneratePairError("coincident agent positions at frame " +
                                  std::to_string(r_cur.timestamp_index) +
                                  ": the reference line is undefined");
    }
}

std::array<QtcSymbol, 4> qtc_c1_symbols(const PointState& r_prev, const PointState& r_cur,
                                        const std::optional<PointState>& r_next,
                                        const PointState& h_prev, const PointState& h_cur,
                                        const std::optional<PointState>& h_next,
                                        const ToleranceSet& eps) {
    const Vec2 r_to_h = h_cur.position - r_cur.position;
    const Vec2 h_to_r = r_cur.position - h_cur.position;
    return {
        approach_symbol(r_prev.position, r_cur.position, h_cur.position, eps),
        approach_symbol(h_prev.position, h_cur.position, r_cur.position, eps),
        side_symbol(heading_of(r_prev, r_cur, r_next), r_to_h, eps),
        side_symbol(heading_of(h_prev, h_cur, h_next), h_to_r, eps),
    };
}

} // namespace

QtcVector compute_qtc_c1(const PointState& r_prev, const PointState& r_cur,
                         const std::optional<PointState>& r_next,
                         const PointState& h_prev, const PointState& h_cur,
                         const std::optional<PointState>& h_next,
                         const ToleranceSet& eps) {
    check_pair(r_cur, h_cur, eps);
    const auto q = qtc_c1_symbols(r_prev, r_cur, r_next, h_prev, h_cur, h_next, eps);
    return QtcVector(QtcVariant::C1, q);
}

QtcVector compute_qtc_c2(const PointState& r_prev, const PointState& r_cur,
                         const std::optional<PointState>& r_next,
                         const PointState& h_prev, const PointState& h_cur,
                         const std::optional<PointState>& h_next,
                         const ToleranceSet& eps) {
    check_pair(r_cur, h_cur, eps);
    const auto q14 = qtc_c1_symbols(r_prev, r_cur, r_next, h_prev, h_cur, h_next, eps);

    const QtcSymbol q5 = sign_symbol(norm(r_cur.velocity) - norm(h_cur.velocity), eps.speed);

    const double theta_r = line_angle(r_cur.velocity, h_cur.position - r_cur.position);
    const double theta_h = line_angle(h_cur.velocity, r_cur.position - h_cur.position);
    const QtcSymbol q6 = sign_symbol(theta_r - theta_h, eps.angle);

    const std::array<QtcSymbol, 6> q{q14[0], q14[1], q14[2], q14[3], q5, q6};
    return QtcVector(QtcVariant::C2, q);
}

int conceptual_distance(const QtcVector& a, const QtcVector& b) {
    if (a.variant() != b.variant()) {
        throw UsageError("conceptual_distance requires same-variant vectors");
    }
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += std::abs(encode(a[i]) - encode(b[i]));
    }
    return d;
}

void SamplingConfig::validate() const {
    eps.validate();
    if (ranges.empty() || speeds.empty() || angle_divisions <= 0 || rate <= 0) {
        throw UsageError("SamplingConfig density parameters must be positive");
    }
    for (double r : ranges) {
        if (r <= 0) throw UsageError("SamplingConfig ranges must be positive");
    }
    for (double s : speeds) {
        if (s <= 0) throw UsageError("SamplingConfig speeds must be positive");
    }
}

SamplingConfig SamplingConfig::doubled() const {
    SamplingConfig d = *this;
    d.angle_divisions = angle_divisions * 2;
    auto densify = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.push_back(v[i]);
            if (i + 1 < v.size()) out.push_back(0.5 * (v[i] + v[i + 1]));
        }
        return out;
    };
    d.ranges = densify(ranges);
    d.speeds = densify(speeds);
    d.random_samples = random_samples * 2;
    d.seed = seed + 1;
    d.stability_check = false;
    return d;
}

namespace {

/// One agent's motion over a 3-frame window: independent backward and forward
/// frame displacements (speed 0 encodes a stationary phase).
struct AgentMotion {
    double back_speed = 0, back_angle = 0;
    double fwd_speed = 0, fwd_angle = 0;
};

PointState state_at(Vec2 cur, const AgentMotion& m, double rate) {
    const Vec2 back_disp{m.back_speed / rate * std::cos(m.back_angle),
                         m.back_speed / rate * std::sin(m.back_angle)};
    PointState s;
    s.position = cur;
    s.velocity = back_disp * rate;
    s.timestamp_index = 1;
    return s;
}

struct Window {
    PointState prev, cur;
    std::optional<PointState> next;
};

Window make_window(Vec2 cur, const AgentMotion& m, double rate) {
    const Vec2 back_disp{m.back_speed / rate * std::cos(m.back_angle),
                         m.back_speed / rate * std::sin(m.back_angle)};
    const Vec2 fwd_disp{m.fwd_speed / rate * std::cos(m.fwd_angle),
                        m.fwd_speed / rate * std::sin(m.fwd_angle)};
    Window w;
    w.cur = state_at(cur, m, rate);
    w.prev = PointState{cur - back_disp, w.cur.velocity, 0};
    w.next = PointState{cur + fwd_disp, fwd_disp * rate, 2};
    return w;
}

class Enumerator {
public:
    Enumerator(QtcVariant variant, const SamplingConfig& cfg) : variant_(variant), cfg_(cfg) {}

    void visit(double range, const AgentMotion& r, const AgentMotion& h) {
        const Vec2 r_pos{0, 0};
        const Vec2 h_pos{range, 0};
        const Window wr = make_window(r_pos, r, cfg_.rate);
        const Window wh = make_window(h_pos, h, cfg_.rate);
        QtcVector v = variant_ == QtcVariant::C1
                          ? compute_qtc_c1(wr.prev, wr.cur, wr.next, wh.prev, wh.cur, wh.next, cfg_.eps)
                          : compute_qtc_c2(wr.prev, wr.cur, wr.next, wh.prev, wh.cur, wh.next, cfg_.eps);
        auto [it, inserted] = seen_.emplace(v.key(), v);
        if (inserted) {
            DictionaryReport::Witness w{range,
                                        r.back_speed, r.back_angle, r.fwd_speed, r.fwd_angle,
                                        h.back_speed, h.back_angle, h.fwd_speed, h.fwd_angle};
            witnesses_.emplace(v.key(), w);
        }
    }

    void run() {
        grid_pass();
        critical_sweep();
        random_pass();
    }

    std::vector<QtcVector> sorted_vectors() const {
        std::vector<QtcVector> out;
        out.reserve(seen_.size());
        for (const auto& [k, v] : seen_) out.push_back(v);
        return out; // std::map iterates in key order = canonical order
    }

    const std::map<std::uint64_t, DictionaryReport::Witness>& witnesses() const { return witnesses_; }

private:
    /// Angle of the backward step that keeps the distance to the other agent
    /// exactly unchanged (equidistance chord), measured from the line.
    static double chord_angle(double step, double range) {
        const double half = std::min(1.0, step / (2.0 * range));
        return std::acos(-1.0) / 2.0 + std::asin(half);
    }

    /// Unsigned angles from the line toward the other agent, in [0, pi].
    std::vector<double> theta_grid(double step, double range) const {
        const double pi = std::acos(-1.0);
        if (cfg_.collinear_only) return {0.0, pi};
        std::vector<double> t;
        for (int i = 0; i <= cfg_.angle_divisions; ++i) {
            t.push_back(pi * i / cfg_.angle_divisions);
        }
        if (step > 0) t.push_back(chord_angle(step, range));
        return t;
    }

    /// Backward states for one agent whose line toward the other lies at
    /// `line_angle`: stationary plus signed theta sweeps per speed, with the
    /// exact equidistance chord included so the 0 symbol is hit with motion.
    std::vector<std::pair<double, double>> backward_states(double line_angle, double range) const {
        std::vector<std::pair<double, double>> states{{0.0, 0.0}};
        for (double s : cfg_.speeds) {
            for (double theta : theta_grid(s / cfg_.rate, range)) {
                states.emplace_back(s, line_angle + theta);
                if (theta > 0 && theta < std::acos(-1.0)) states.emplace_back(s, line_angle - theta);
            }
        }
        return states;
    }

    /// Forward displacement matters only through its side of the line:
    /// stationary, along the line, or either side.
    std::vector<std::pair<double, double>> forward_states(double line_angle) const {
        const double pi = std::acos(-1.0);
        std::vector<std::pair<double, double>> states{{0.0, 0.0}, {0.75, line_angle}, {0.75, line_angle + pi}};
        if (!cfg_.collinear_only) {
            states.emplace_back(0.75, line_angle + pi / 2.0);
            states.emplace_back(0.75, line_angle - pi / 2.0);
        }
        return states;
    }

    void grid_pass() {
        const double pi = std::acos(-1.0);
        for (double range : cfg_.ranges) {
            std::vector<AgentMotion> r_motions, h_motions;
            for (auto [bs, ba] : backward_states(0.0, range)) {
                for (auto [fs, fa] : forward_states(0.0)) {
                    r_motions.push_back(AgentMotion{bs, ba, fs, fa});
                }
            }
            for (auto [bs, ba] : backward_states(pi, range)) {
                for (auto [fs, fa] : forward_states(pi)) {
                    h_motions.push_back(AgentMotion{bs, ba, fs, fa});
                }
            }
            for (const AgentMotion& r : r_motions) {
                for (const AgentMotion& h : h_motions) {
                    visit(range, r, h);
                }
            }
        }
    }

    /// The backward step's side of the line affects no symbol, and the
    /// forward step only contributes a side class, so joint realizability is
    /// decided entirely by (theta_r, theta_h, speed_r, speed_h, range).
    /// This pass sweeps those coordinates over their critical values: the
    /// equidistance chord angle with offsets at fractions of its tolerance
    /// band, equal-speed offsets around eps.speed, and relative angle offsets
    /// around eps.angle.
    void critical_sweep() {
        if (cfg_.collinear_only) return;
        const double pi = std::acos(-1.0);

        std::vector<double> sweep_ranges = cfg_.ranges;
        for (double extra : {0.15, 0.5, 1.9, 3.8}) sweep_ranges.push_back(extra);

        std::vector<double> speeds_r{0.0, 0.1, 1.6};
        speeds_r.insert(speeds_r.end(), cfg_.speeds.begin(), cfg_.speeds.end());

        const std::vector<std::pair<double, double>> fwd_r = forward_states(0.0);
        const std::vector<std::pair<double, double>> fwd_h = forward_states(pi);

        auto theta_set = [&](double speed, double range) {
            std::vector<double> t{0.0, 0.3, pi / 2 - 0.3, pi / 2, pi - 0.3, pi};
            if (speed > 0) {
                const double u = speed / cfg_.rate;
                const double star = chord_angle(u, range);
                const double w = cfg_.eps.distance / u;
                for (double f : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
                    t.push_back(std::clamp(star + f * w, 0.0, pi));
                }
            }
            const int extra = cfg_.angle_divisions - 8; // densified under doubling
            for (int i = 1; i <= extra; ++i) t.push_back(pi * i / (extra + 1));
            return t;
        };

        auto band_edges = [&](double speed, double range) {
            std::vector<double> e;
            if (speed > 0) {
                const double u = speed / cfg_.rate;
                const double star = chord_angle(u, range);
                const double w = cfg_.eps.distance / u;
                e = {star - w, star + w};
            }
            return e;
        };

        for (double range : sweep_ranges) {
            for (double sr : speeds_r) {
                std::vector<double> speeds_h = speeds_r;
                if (sr > 0) {
                    for (double off : {-1.5e-3, -1.05e-3, -0.95e-3, -0.5e-3, 0.0,
                                       0.5e-3, 0.95e-3, 1.05e-3, 1.5e-3}) {
                        if (sr + off > 0) speeds_h.push_back(sr + off);
                    }
                }
                for (double sh : speeds_h) {
                    std::vector<double> thetas_r = theta_set(sr, range);
                    // Midpoints of the slivers between the two agents' band
                    // edges: the only angles where one agent sits inside its
                    // equidistance band while the other does not, at equal
                    // angles. Their width is O(eps), far below the grid pitch.
                    for (double er : band_edges(sr, range)) {
                        for (double eh : band_edges(sh, range)) {
                            thetas_r.push_back(std::clamp(0.5 * (er + eh), 0.0, pi));
                        }
                    }
                    for (double theta_r : thetas_r) {
                        std::vector<double> thetas_h = theta_set(sh, range);
                        if (variant_ == QtcVariant::C2 && sr > 0 && sh > 0) {
                            for (double off : {-1.3e-3, -1.05e-3, -9.5e-4, -6e-4, -3e-4, -1e-4, 0.0,
                                               1e-4, 3e-4, 6e-4, 9.5e-4, 1.05e-3, 1.3e-3}) {
                                thetas_h.push_back(std::clamp(theta_r + off, 0.0, pi));
                            }
                        }
                        for (double theta_h : thetas_h) {
                            for (auto [rfs, rfa] : fwd_r) {
                                for (auto [hfs, hfa] : fwd_h) {
                                    AgentMotion r{sr, theta_r, rfs, rfa};
                                    AgentMotion h{sh, pi + theta_h, hfs, hfa};
                                    visit(range, r, h);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Seeded random guard pass: draws around the same critical structures
    /// with continuous parameters, catching anything the sweeps idealize away.
    void random_pass() {
        const double pi = std::acos(-1.0);
        Rng rng(cfg_.seed);
        for (std::size_t n = 0; n < cfg_.random_samples; ++n) {
            const double range = rng.uniform(0.15, 3.8);
            AgentMotion r, h;
            double theta_r = rng.uniform(0.0, pi);
            double theta_h = rng.uniform(0.0, pi);
            if (!rng.bernoulli(0.12)) r.back_speed = rng.uniform(0.08, 1.65);
            if (!rng.bernoulli(0.12)) h.back_speed = rng.uniform(0.08, 1.65);
            if (rng.bernoulli(0.3) && r.back_speed > 0) {
                h.back_speed = std::max(0.01, r.back_speed + rng.uniform(-2e-3, 2e-3));
            }
            if (rng.bernoulli(0.4) && r.back_speed > 0) {
                const double u = r.back_speed / cfg_.rate;
                theta_r = std::clamp(chord_angle(u, range) +
                                         rng.uniform(-2.0, 2.0) * cfg_.eps.distance / u,
                                     0.0, pi);
            }
            if (rng.bernoulli(0.4) && h.back_speed > 0) {
                const double u = h.back_speed / cfg_.rate;
                theta_h = std::clamp(chord_angle(u, range) +
                                         rng.uniform(-2.0, 2.0) * cfg_.eps.distance / u,
                                     0.0, pi);
            }
            if (rng.bernoulli(0.3)) theta_h = std::clamp(theta_r + rng.uniform(-2e-3, 2e-3), 0.0, pi);
            if (!rng.bernoulli(0.15)) {
                r.fwd_speed = 0.75;
                r.fwd_angle = rng.bernoulli(0.3) ? (rng.bernoulli(0.5) ? 0.0 : pi) + rng.uniform(-2e-3, 2e-3)
                                                 : rng.uniform(0.0, 2 * pi);
            }
            if (!rng.bernoulli(0.15)) {
                h.fwd_speed = 0.75;
                h.fwd_angle = rng.bernoulli(0.3) ? (rng.bernoulli(0.5) ? 0.0 : pi) + rng.uniform(-2e-3, 2e-3)
                                                 : rng.uniform(0.0, 2 * pi);
            }
            if (cfg_.collinear_only) {
                theta_r = rng.bernoulli(0.5) ? 0.0 : pi;
                theta_h = rng.bernoulli(0.5) ? 0.0 : pi;
                if (r.fwd_speed > 0) r.fwd_angle = rng.bernoulli(0.5) ? 0.0 : pi;
                if (h.fwd_speed > 0) h.fwd_angle = rng.bernoulli(0.5) ? 0.0 : pi;
            }
            r.back_angle = (rng.bernoulli(0.5) ? 1.0 : -1.0) * theta_r;
            h.back_angle = pi + (rng.bernoulli(0.5) ? 1.0 : -1.0) * theta_h;
            visit(range, r, h);
        }
    }

    QtcVariant variant_;
    SamplingConfig cfg_;
    std::map<std::uint64_t, QtcVector> seen_;
    std::map<std::uint64_t, DictionaryReport::Witness> witnesses_;
};

std::vector<QtcVector> all_in_domain(QtcVariant variant) {
    const std::size_t m = symbol_count(variant);
    std::vector<QtcVector> out;
    std::vector<QtcSymbol> symbols(m, QtcSymbol::Minus);
    const QtcSymbol domain[3] = {QtcSymbol::Minus, QtcSymbol::Zero, QtcSymbol::Plus};
    std::size_t total = 1;
    for (std::size_t i = 0; i < m; ++i) total *= 3;
    for (std::size_t n = 0; n < total; ++n) {
        std::size_t x = n;
        for (std::size_t i = 0; i < m; ++i) {
            symbols[m - 1 - i] = domain[x % 3];
            x /= 3;
        }
        out.emplace_back(variant, std::span<const QtcSymbol>(symbols));
    }
    return out;
}

} // namespace

void DictionaryReport::write_deviation_report(std::ostream& out) const {
    out << "dictionary deviation report\n";
    out << "enumerated_entries=" << entries << " target_entries=" << target_entries
        << " stable=" << (stable ? "yes" : "no") << "\n";
    out << "each realized vector carries the kinematic configuration that produced it\n";
    out << "(range m; per agent: backward speed m/s, backward angle rad, forward speed, forward angle)\n\n";
    out << "realized (" << witnesses.size() << "):\n";
    for (const auto& [v, w] : witnesses) {
        out << "  " << v.to_string() << "  range=" << w.range << " r=(" << w.r_back_speed << ","
            << w.r_back_angle << "," << w.r_fwd_speed << "," << w.r_fwd_angle << ") h=("
            << w.h_back_speed << "," << w.h_back_angle << "," << w.h_fwd_speed << ","
            << w.h_fwd_angle << ")\n";
    }
    out << "\nnot realized (" << unrealized.size() << "):\n";
    for (const auto& v : unrealized) {
        out << "  " << v.to_string() << "\n";
    }
}

Dictionary::Dictionary(QtcVariant variant, std::vector<QtcVector> realizable_sorted)
    : variant_(variant), entries_(std::move(realizable_sorted)) {
    for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
        if (entries_[i].key() >= entries_[i + 1].key()) {
            throw UsageError("dictionary entries must be strictly sorted by canonical key");
        }
    }
    for (const auto& e : entries_) {
        if (e.variant() != variant_ || e.is_impossible()) {
            throw UsageError("dictionary realizable entries must be in-domain vectors of one variant");
        }
    }
    entries_.push_back(QtcVector::impossible(variant_));
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        index_.emplace(entries_[i].key(), static_cast<std::uint32_t>(i));
    }
}

const QtcVector& Dictionary::vector_at(std::uint32_t index) const {
    if (index >= entries_.size()) {
        throw LookupError("dictionary index out of range: " + std::to_string(index) + " (size " +
                          std::to_string(entries_.size()) + ")");
    }
    return entries_[index];
}

std::uint32_t Dictionary::index_of(const QtcVector& v) const {
    auto idx = try_index(v);
    if (!idx) {
        throw LookupError("QTC vector not in dictionary: " + v.to_string());
    }
    return *idx;
}

std::optional<std::uint32_t> Dictionary::try_index(const QtcVector& v) const {
    if (v.variant() != variant_) {
        throw UsageError("dictionary lookup with mismatched variant");
    }
    auto it = index_.find(v.key());
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t Dictionary::nearest_index(const QtcVector& v) const {
    if (auto idx = try_index(v)) return *idx;
    std::uint32_t best = 0;
    int best_d = conceptual_distance(entries_[0], v);
    for (std::uint32_t i = 1; i < entries_.size(); ++i) {
        const int d = conceptual_distance(entries_[i], v);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::uint64_t Dictionary::digest() const {
    // FNV-1a over variant byte plus per-entry encodings.
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](std::uint8_t byte) {
        h ^= byte;
        h *= 1099511628211ULL;
    };
    mix(static_cast<std::uint8_t>(variant_));
    for (const auto& e : entries_) {
        for (std::size_t i = 0; i < e.size(); ++i) {
            mix(static_cast<std::uint8_t>(static_cast<std::int8_t>(encode(e[i]))));
        }
    }
    return h;
}

std::pair<Dictionary, DictionaryReport> build_dictionary(QtcVariant variant,
                                                         const SamplingConfig& sampling) {
    sampling.validate();

    Enumerator base(variant, sampling);
    base.run();
    auto vectors = base.sorted_vectors();

    DictionaryReport report;
    report.realizable = vectors.size();
    report.entries = vectors.size() + 1;
    report.target_entries = variant == QtcVariant::C1 ? 82 : 444;

    if (sampling.stability_check) {
        Enumerator dense(variant, sampling.doubled());
        dense.run();
        report.stable = dense.sorted_vectors().size() == vectors.size();
    }

    for (const auto& [k, w] : base.witnesses()) {
        // keys iterate in canonical order; rebuild the vector from the sorted list
        auto it = std::lower_bound(vectors.begin(), vectors.end(), k,
                                   [](const QtcVector& v, std::uint64_t key) { return v.key() < key; });
        report.witnesses.emplace_back(*it, w);
    }
    std::set<std::uint64_t> realized_keys;
    for (const auto& v : vectors) realized_keys.insert(v.key());
    for (const auto& v : all_in_domain(variant)) {
        if (!realized_keys.count(v.key())) report.unrealized.push_back(v);
    }

    return {Dictionary(variant, std::move(vectors)), std::move(report)};
}

} // namespace masi::qtc
