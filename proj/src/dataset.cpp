#include "masi/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "masi/errors.hpp"
#include "masi/io.hpp"

namespace masi::data {

using qtc::Vec2;

void TrackSegment::derive_velocities(double rate) {
    velocities.assign(positions.size(), Vec2{0, 0});
    if (positions.size() >= 2) {
        velocities[0] = (positions[1] - positions[0]) * rate;
        for (std::size_t i = 1; i < positions.size(); ++i) {
            velocities[i] = (positions[i] - positions[i - 1]) * rate;
        }
    }
}

const TrackSegment* AgentTrack::segment_covering(std::int64_t frame) const {
    for (const auto& s : segments) {
        if (s.covers(frame)) return &s;
    }
    return nullptr;
}

const AgentTrack* TrajectorySet::find(const std::string& id) const {
    auto it = std::lower_bound(agents.begin(), agents.end(), id,
                               [](const AgentTrack& a, const std::string& key) { return a.id < key; });
    if (it != agents.end() && it->id == id) return &*it;
    return nullptr;
}

std::int64_t TrajectorySet::min_frame() const {
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    for (const auto& a : agents) {
        if (!a.segments.empty()) lo = std::min(lo, a.segments.front().start_frame);
    }
    return lo == std::numeric_limits<std::int64_t>::max() ? 0 : lo;
}

std::int64_t TrajectorySet::max_frame() const {
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    for (const auto& a : agents) {
        if (!a.segments.empty()) hi = std::max(hi, a.segments.back().end_frame());
    }
    return hi == std::numeric_limits<std::int64_t>::min() ? 0 : hi;
}

void TrajectorySet::sort_agents() {
    std::sort(agents.begin(), agents.end(),
              [](const AgentTrack& a, const AgentTrack& b) { return a.id < b.id; });
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, int line_no, const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
    }
}

std::int64_t parse_frame(const std::string& s, int line_no, const std::string& path) {
    std::int64_t v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        throw DataError(path + ":" + std::to_string(line_no) + ": bad frame '" + s + "'");
    }
    return v;
}

} // namespace

TrajectorySet load_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trajectory file: " + path);

    TrajectorySet ts;
    bool header_seen = false;
    std::string line;
    int line_no = 0;
    struct Row {
        std::int64_t frame;
        Vec2 pos;
    };
    std::map<std::string, std::vector<Row>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "#rate=";
            if (line.rfind(key, 0) == 0) {
                ts.rate = parse_double(line.substr(key.size()), line_no, path);
                if (!(ts.rate > 0)) throw DataError(path + ": rate must be positive");
            }
            continue;
        }
        if (!header_seen) {
            if (split_csv_line(line) != std::vector<std::string>{"frame", "agent_id", "x", "y"}) {
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": expected header frame,agent_id,x,y");
            }
            header_seen = true;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 4) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 4 fields, got " +
                            std::to_string(f.size()));
        }
        Row row{parse_frame(f[0], line_no, path),
                {parse_double(f[2], line_no, path), parse_double(f[3], line_no, path)}};
        rows[f[1]].push_back(row);
    }
    if (!header_seen) throw DataError(path + ": empty trajectory file");

    for (auto& [id, agent_rows] : rows) {
        AgentTrack track;
        track.id = id;
        for (std::size_t i = 0; i < agent_rows.size(); ++i) {
            if (i > 0 && agent_rows[i].frame <= agent_rows[i - 1].frame) {
                throw DataError(path + ": non-monotonic frames for agent " + id + " at frame " +
                                std::to_string(agent_rows[i].frame));
            }
            if (i == 0 || agent_rows[i].frame != agent_rows[i - 1].frame + 1) {
                track.segments.emplace_back();
                track.segments.back().start_frame = agent_rows[i].frame;
            }
            track.segments.back().positions.push_back(agent_rows[i].pos);
        }
        for (auto& seg : track.segments) seg.derive_velocities(ts.rate);
        ts.agents.push_back(std::move(track));
    }
    ts.sort_agents();
    return ts;
}

TrajectorySet load_static_objects(const std::string& path, TrajectorySet trajset) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open static objects file: " + path);

    const std::int64_t lo = trajset.min_frame();
    const std::int64_t hi = std::max(trajset.max_frame(), lo + 1);

    bool header_seen = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (split_csv_line(line) != std::vector<std::string>{"object_id", "x", "y"}) {
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": expected header object_id,x,y");
            }
            header_seen = true;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 3) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 fields");
        }
        if (trajset.find(f[0]) != nullptr) {
            throw DataError(path + ": object id collides with an agent id: " + f[0]);
        }
        StaticObject obj{f[0],
                         {parse_double(f[1], line_no, path), parse_double(f[2], line_no, path)}};

        AgentTrack pseudo;
        pseudo.id = obj.id;
        pseudo.is_static = true;
        TrackSegment seg;
        seg.start_frame = lo;
        seg.positions.assign(static_cast<std::size_t>(hi - lo), obj.position);
        seg.velocities.assign(seg.positions.size(), Vec2{0, 0});
        pseudo.segments.push_back(std::move(seg));
        trajset.agents.push_back(std::move(pseudo));
        trajset.static_objects.push_back(std::move(obj));
    }
    if (!header_seen) throw DataError(path + ": empty static objects file");
    trajset.sort_agents();
    return trajset;
}

void save_trajectories_csv(const TrajectorySet& ts, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "#rate=" << ts.rate << "\n";
    out << "frame,agent_id,x,y\n";
    out.precision(17);
    for (const auto& agent : ts.agents) {
        if (agent.is_static) continue;
        for (const auto& seg : agent.segments) {
            for (std::size_t i = 0; i < seg.positions.size(); ++i) {
                out << (seg.start_frame + static_cast<std::int64_t>(i)) << ',' << agent.id << ','
                    << seg.positions[i].x << ',' << seg.positions[i].y << "\n";
            }
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

void save_static_objects_csv(const TrajectorySet& ts, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "object_id,x,y\n";
    out.precision(17);
    for (const auto& obj : ts.static_objects) {
        out << obj.id << ',' << obj.position.x << ',' << obj.position.y << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

bool DatasetMeta::operator==(const DatasetMeta& o) const {
    return variant == o.variant && config.radius == o.config.radius &&
           config.t_history == o.config.t_history && config.t_future == o.config.t_future &&
           config.stride == o.config.stride && rate == o.rate && n_star == o.n_star &&
           dict_digest_c1 == o.dict_digest_c1 && dict_digest_c2 == o.dict_digest_c2 &&
           split_seed == o.split_seed;
}

const qtc::Dictionary& DatasetSplits::dictionary(qtc::QtcVariant v) const {
    const auto& d = v == qtc::QtcVariant::C1 ? dict_c1 : dict_c2;
    if (!d) throw UsageError("dataset does not carry a " + qtc::variant_name(v) + " dictionary");
    return *d;
}

DatasetSplits make_dataset(const TrajectorySet& trajset, cluster::SampleVariant variant,
                           const cluster::ClusterConfig& cluster_config,
                           const cluster::DictionaryRefs& dicts, std::uint64_t split_seed) {
    const auto memberships = cluster::build_clusters(trajset, cluster_config);
    const int n_star = compute_n_star(memberships);
    auto samples =
        cluster::assemble_samples(memberships, trajset, dicts, variant, cluster_config, n_star);
    if (samples.size() < 10) {
        throw UsageError("dataset needs at least 10 samples, got " + std::to_string(samples.size()));
    }

    std::stable_sort(samples.begin(), samples.end(),
                     [](const cluster::ClusterSample& a, const cluster::ClusterSample& b) {
                         if (a.window_start != b.window_start) return a.window_start < b.window_start;
                         return a.center_id < b.center_id;
                     });

    const std::size_t n = samples.size();
    const std::size_t val_n = n / 10;
    const std::size_t test_n = n / 10;
    std::size_t b1 = n - val_n - test_n;
    std::size_t b2 = n - test_n;
    // Window-start groups stay whole so the chronological boundary is strict.
    auto align = [&](std::size_t b) {
        while (b > 0 && b < n && samples[b].window_start == samples[b - 1].window_start) ++b;
        return std::min(b, n);
    };
    b1 = align(b1);
    b2 = align(std::max(b1, b2));

    DatasetSplits ds;
    ds.meta.variant = variant;
    ds.meta.config = cluster_config;
    ds.meta.rate = trajset.rate;
    ds.meta.n_star = static_cast<std::uint32_t>(n_star);
    ds.meta.split_seed = split_seed;
    if (dicts.c1) {
        ds.dict_c1 = *dicts.c1;
        ds.meta.dict_digest_c1 = dicts.c1->digest();
    }
    if (dicts.c2) {
        ds.dict_c2 = *dicts.c2;
        ds.meta.dict_digest_c2 = dicts.c2->digest();
    }
    ds.train.assign(samples.begin(), samples.begin() + b1);
    ds.validation.assign(samples.begin() + b1, samples.begin() + b2);
    ds.test.assign(samples.begin() + b2, samples.end());
    return ds;
}

namespace {

void write_dictionary(io::Writer& w, const qtc::Dictionary& dict) {
    w.u8(static_cast<std::uint8_t>(dict.variant()));
    w.u32(static_cast<std::uint32_t>(dict.size()));
    for (const auto& e : dict.entries()) {
        for (std::size_t i = 0; i < e.size(); ++i) {
            w.u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(qtc::encode(e[i]))));
        }
    }
}

qtc::Dictionary read_dictionary(io::Reader& r) {
    const auto variant = static_cast<qtc::QtcVariant>(r.u8());
    if (variant != qtc::QtcVariant::C1 && variant != qtc::QtcVariant::C2) {
        throw CorruptionError("bad dictionary variant byte");
    }
    const std::uint32_t count = r.u32();
    if (count == 0) throw CorruptionError("empty dictionary");
    std::vector<qtc::QtcVector> entries;
    const std::size_t m = qtc::symbol_count(variant);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::vector<qtc::QtcSymbol> symbols;
        for (std::size_t k = 0; k < m; ++k) {
            symbols.push_back(qtc::symbol_from_encoding(static_cast<std::int8_t>(r.u8())));
        }
        if (i + 1 < count) {
            entries.emplace_back(variant, symbols);
        }
        // the trailing impossible entry is re-appended by the constructor
    }
    return qtc::Dictionary(variant, std::move(entries));
}

void write_sample(io::Writer& w, const cluster::ClusterSample& s) {
    w.str(s.center_id);
    w.i64(s.window_start);
    w.u32(s.slot_count);
    w.u32(s.n_real);
    for (const auto& id : s.member_ids) w.str(id);
    auto dump_u32 = [&](const std::vector<std::uint32_t>& v) {
        w.u64(v.size());
        for (auto x : v) w.u32(x);
    };
    auto dump_f64 = [&](const std::vector<double>& v) {
        w.u64(v.size());
        for (auto x : v) w.f64(x);
    };
    auto dump_u8 = [&](const std::vector<std::uint8_t>& v) {
        w.u64(v.size());
        for (auto x : v) w.u8(x);
    };
    dump_u32(s.hist_idx);
    dump_u32(s.label_idx);
    dump_f64(s.hist_xy);
    dump_f64(s.label_xy);
    dump_u8(s.hist_mask);
    dump_u8(s.label_mask);
    dump_u32(s.qtc_label_c1);
    dump_u32(s.qtc_label_c2);
    w.f64(s.origin_x);
    w.f64(s.origin_y);
}

cluster::ClusterSample read_sample(io::Reader& r) {
    cluster::ClusterSample s;
    s.center_id = r.str();
    s.window_start = r.i64();
    s.slot_count = r.u32();
    s.n_real = r.u32();
    for (std::uint32_t i = 0; i < s.n_real; ++i) s.member_ids.push_back(r.str());
    auto load_u32 = [&](std::vector<std::uint32_t>& v) {
        v.resize(r.u64());
        for (auto& x : v) x = r.u32();
    };
    auto load_f64 = [&](std::vector<double>& v) {
        v.resize(r.u64());
        for (auto& x : v) x = r.f64();
    };
    auto load_u8 = [&](std::vector<std::uint8_t>& v) {
        v.resize(r.u64());
        for (auto& x : v) x = r.u8();
    };
    load_u32(s.hist_idx);
    load_u32(s.label_idx);
    load_f64(s.hist_xy);
    load_f64(s.label_xy);
    load_u8(s.hist_mask);
    load_u8(s.label_mask);
    load_u32(s.qtc_label_c1);
    load_u32(s.qtc_label_c2);
    s.origin_x = r.f64();
    s.origin_y = r.f64();
    return s;
}

std::vector<std::uint8_t> meta_payload(const DatasetMeta& m) {
    io::Writer w;
    w.u8(static_cast<std::uint8_t>(m.variant));
    w.f64(m.config.radius);
    w.u32(static_cast<std::uint32_t>(m.config.t_history));
    w.u32(static_cast<std::uint32_t>(m.config.t_future));
    w.u32(static_cast<std::uint32_t>(m.config.stride));
    w.f64(m.config.eps.distance);
    w.f64(m.config.eps.cross);
    w.f64(m.config.eps.speed);
    w.f64(m.config.eps.angle);
    w.f64(m.rate);
    w.u32(m.n_star);
    w.u64(m.dict_digest_c1);
    w.u64(m.dict_digest_c2);
    w.u64(m.split_seed);
    return w.take();
}

DatasetMeta parse_meta(io::Reader& r) {
    DatasetMeta m;
    m.variant = static_cast<cluster::SampleVariant>(r.u8());
    m.config.radius = r.f64();
    m.config.t_history = static_cast<int>(r.u32());
    m.config.t_future = static_cast<int>(r.u32());
    m.config.stride = static_cast<int>(r.u32());
    m.config.eps.distance = r.f64();
    m.config.eps.cross = r.f64();
    m.config.eps.speed = r.f64();
    m.config.eps.angle = r.f64();
    m.rate = r.f64();
    m.n_star = r.u32();
    m.dict_digest_c1 = r.u64();
    m.dict_digest_c2 = r.u64();
    m.split_seed = r.u64();
    return m;
}

std::vector<std::uint8_t> samples_payload(const std::vector<cluster::ClusterSample>& samples) {
    io::Writer w;
    w.u64(samples.size());
    for (const auto& s : samples) write_sample(w, s);
    return w.take();
}

std::vector<cluster::ClusterSample> parse_samples(io::Reader& r) {
    std::vector<cluster::ClusterSample> out;
    const std::uint64_t n = r.u64();
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(read_sample(r));
    return out;
}

} // namespace

void save_dataset(const DatasetSplits& ds, const std::string& path) {
    io::Sections sections;
    sections.emplace_back("meta", meta_payload(ds.meta));
    if (ds.dict_c1) {
        io::Writer w;
        write_dictionary(w, *ds.dict_c1);
        sections.emplace_back("dict_c1", w.take());
    }
    if (ds.dict_c2) {
        io::Writer w;
        write_dictionary(w, *ds.dict_c2);
        sections.emplace_back("dict_c2", w.take());
    }
    sections.emplace_back("train", samples_payload(ds.train));
    sections.emplace_back("validation", samples_payload(ds.validation));
    sections.emplace_back("test", samples_payload(ds.test));
    io::write_sections(path, io::FileKind::Dataset, sections);
}

DatasetSplits load_dataset(const std::string& path) {
    auto sections = io::read_sections(path, io::FileKind::Dataset);
    auto need = [&](const std::string& name) -> std::vector<std::uint8_t>& {
        auto it = sections.find(name);
        if (it == sections.end()) throw CorruptionError(path + ": missing section " + name);
        return it->second;
    };
    DatasetSplits ds;
    {
        io::Reader r(need("meta"));
        ds.meta = parse_meta(r);
    }
    if (sections.count("dict_c1")) {
        io::Reader r(sections["dict_c1"]);
        ds.dict_c1 = read_dictionary(r);
        if (ds.dict_c1->digest() != ds.meta.dict_digest_c1) {
            throw CorruptionError(path + ": dictionary digest mismatch (c1)");
        }
    }
    if (sections.count("dict_c2")) {
        io::Reader r(sections["dict_c2"]);
        ds.dict_c2 = read_dictionary(r);
        if (ds.dict_c2->digest() != ds.meta.dict_digest_c2) {
            throw CorruptionError(path + ": dictionary digest mismatch (c2)");
        }
    }
    {
        io::Reader r(need("train"));
        ds.train = parse_samples(r);
    }
    {
        io::Reader r(need("validation"));
        ds.validation = parse_samples(r);
    }
    {
        io::Reader r(need("test"));
        ds.test = parse_samples(r);
    }
    return ds;
}

void save_dictionary(const qtc::Dictionary& dict, const std::string& path) {
    io::Writer w;
    write_dictionary(w, dict);
    io::Sections sections;
    sections.emplace_back("dictionary", w.take());
    io::write_sections(path, io::FileKind::Dictionary, sections);
}

qtc::Dictionary load_dictionary(const std::string& path) {
    auto sections = io::read_sections(path, io::FileKind::Dictionary);
    auto it = sections.find("dictionary");
    if (it == sections.end()) throw CorruptionError(path + ": missing dictionary section");
    io::Reader r(it->second);
    return read_dictionary(r);
}

} // namespace masi::data
