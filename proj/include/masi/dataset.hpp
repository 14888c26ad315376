#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "masi/cluster.hpp"
#include "masi/qtc.hpp"
#include "masi/trajectory.hpp"

namespace masi::data {

struct DatasetMeta {
    cluster::SampleVariant variant = cluster::SampleVariant::FQtc4;
    cluster::ClusterConfig config{};
    double rate = 15.0;
    std::uint32_t n_star = 0;
    std::uint64_t dict_digest_c1 = 0; // 0 when unused by the variant
    std::uint64_t dict_digest_c2 = 0;
    std::uint64_t split_seed = 0;

    bool operator==(const DatasetMeta&) const;
};

/// Chronologically split samples plus the dictionaries they were built with.
struct DatasetSplits {
    DatasetMeta meta;
    std::vector<cluster::ClusterSample> train, validation, test;
    std::optional<qtc::Dictionary> dict_c1, dict_c2;

    const qtc::Dictionary& dictionary(qtc::QtcVariant v) const;
    std::size_t sample_count() const { return train.size() + validation.size() + test.size(); }
    /// Model slot count: n* member series, plus the center series for F^ts.
    std::uint32_t slot_count() const {
        return meta.variant == cluster::SampleVariant::Fts ? meta.n_star + 1 : meta.n_star;
    }
};

/// Full pipeline: cluster, assemble, then split chronologically by window
/// start into contiguous 80/10/10 blocks (window-start groups stay whole).
DatasetSplits make_dataset(const TrajectorySet& trajset, cluster::SampleVariant variant,
                           const cluster::ClusterConfig& cluster_config,
                           const cluster::DictionaryRefs& dicts, std::uint64_t split_seed);

void save_dataset(const DatasetSplits& ds, const std::string& path);
DatasetSplits load_dataset(const std::string& path);

void save_dictionary(const qtc::Dictionary& dict, const std::string& path);
qtc::Dictionary load_dictionary(const std::string& path);

} // namespace masi::data
