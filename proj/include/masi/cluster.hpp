#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "masi/qtc.hpp"
#include "masi/trajectory.hpp"

namespace masi::cluster {

/// Radial clustering and windowing parameters.
struct ClusterConfig {
    double radius = 1.2; // meters; proxemics long phase is 3.7
    int t_history = 10;  // T_h
    int t_future = 48;   // T_f
    int stride = 1;
    qtc::ToleranceSet eps{};

    int window_frames() const { return t_history + t_future; }
    void validate() const;
};

/// Prediction frameworks: symbol-driven over QTC_C1 or QTC_C2 dictionaries,
/// or coordinate-driven time series with QTC post-processing.
enum class SampleVariant : std::uint8_t { FQtc4 = 0, FQtc6 = 1, Fts = 2 };

std::string variant_name(SampleVariant v);
bool is_symbolic(SampleVariant v);
qtc::QtcVariant qtc_variant_of(SampleVariant v); // FQtc4 -> C1, FQtc6 -> C2

/// Agents that enter one center agent's radial cluster during one window.
struct WindowMembership {
    std::string center_id;
    std::int64_t window_start = 0;
    std::vector<std::string> members; // sorted by distance at the first frame, ties by id
};

struct Memberships {
    ClusterConfig config;
    std::vector<WindowMembership> windows; // ordered by (center, window_start)
};

/// One training/eval example: slot-major series over T_h history and T_f
/// label steps, centered on one agent. Symbolic variants store dictionary
/// indices for the n* member slots; the metric variant stores egocentric
/// coordinates with the center's own series in slot 0 plus frozen QTC label
/// indices of both variants for post-processing evaluation.
struct ClusterSample {
    std::string center_id;
    std::int64_t window_start = 0;
    std::uint32_t slot_count = 0;
    std::uint32_t n_real = 0; // real member slots (excludes the center slot)
    std::vector<std::string> member_ids;

    std::vector<std::uint32_t> hist_idx, label_idx; // symbolic: [slot][step]
    std::vector<double> hist_xy, label_xy;          // metric: [slot][step][2]
    std::vector<std::uint8_t> hist_mask, label_mask;
    std::vector<std::uint32_t> qtc_label_c1, qtc_label_c2; // metric: [member][step]
    double origin_x = 0, origin_y = 0; // world position of the center at the last history step

    bool operator==(const ClusterSample&) const = default;
};

/// Per-center sliding-window membership sets: agent j belongs to agent i's
/// cluster at frame t iff their distance is within the radius; a window's
/// member set is every agent that enters during the window. Static objects
/// are members but never centers. Windows with no members are kept here and
/// skipped by sample assembly.
Memberships build_clusters(const data::TrajectorySet& trajectories, const ClusterConfig& config);

/// Maximum member count over all clusters and windows.
int compute_n_star(const Memberships& memberships);

struct DictionaryRefs {
    const qtc::Dictionary* c1 = nullptr;
    const qtc::Dictionary* c2 = nullptr;

    const qtc::Dictionary* for_variant(SampleVariant v) const {
        return v == SampleVariant::FQtc4 ? c1 : c2;
    }
};

/// Windowed sample assembly with fake-slot padding up to n_star. A member
/// outside the radius (or absent) at a step carries the impossible index
/// (symbolic) or a false mask (metric); a QTC vector missing from the
/// dictionary is a hard error naming the vector.
std::vector<ClusterSample> assemble_samples(const Memberships& memberships,
                                            const data::TrajectorySet& trajectories,
                                            const DictionaryRefs& dicts, SampleVariant variant,
                                            const ClusterConfig& config, int n_star);

} // namespace masi::cluster
