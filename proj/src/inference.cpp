/*
 * Copyright 2026 The disparity-trial authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "disparity/inference.hpp"

#include "disparity/errors.hpp"
#include "disparity/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace disparity {

namespace {

const char* kModule = "inference";

} // namespace

std::uint64_t replicate_seed(std::uint64_t master, std::size_t b)
{
    return hash_combine(master, 0x626f6f74ULL, static_cast<std::uint64_t>(b));
}

std::vector<std::size_t> draw_clusters(std::size_t clusters, ResampleMode mode, std::uint64_t seed,
                                       std::optional<std::size_t> subsample)
{
    Stream rng(seed);
    std::vector<std::size_t> out;
    if (mode == ResampleMode::WithReplacement) {
        out.reserve(clusters);
        for (std::size_t k = 0; k < clusters; ++k) {
            out.push_back(static_cast<std::size_t>(rng.below(clusters)));
        }
        return out;
    }
    std::size_t m = subsample.value_or(clusters / 2);
    if (m < 1 || m > clusters) {
        throw Error(ErrorCode::ConfigError, kModule,
                    "subsample size " + std::to_string(m) + " outside [1, " + std::to_string(clusters) + "]");
    }
    std::vector<std::size_t> idx(clusters);
    for (std::size_t k = 0; k < clusters; ++k) {
        idx[k] = k;
    }
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < m; ++k) {
        std::size_t j = k + static_cast<std::size_t>(rng.below(clusters - k));
        std::swap(idx[k], idx[j]);
    }
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    return idx;
}

ObservationTable resample_clusters(const ObservationTable& table, ResampleMode mode, std::uint64_t seed,
                                   std::optional<std::size_t> subsample)
{
    std::map<std::string, std::vector<std::size_t>> by_cluster;
    for (std::size_t i = 0; i < table.size(); ++i) {
        by_cluster[table.records[i].cluster_id].push_back(i);
    }
    std::vector<const std::vector<std::size_t>*> clusters;
    for (const auto& [id, rows] : by_cluster) {
        clusters.push_back(&rows);
    }
    auto picks = draw_clusters(clusters.size(), mode, seed, subsample);

    ObservationTable out;
    out.columns = table.columns;
    out.outcome_kind = table.outcome_kind;
    out.has_eligibility = table.has_eligibility;
    out.has_standard = table.has_standard;
    std::vector<std::size_t> copies(clusters.size(), 0);
    for (auto c : picks) {
        std::size_t copy = copies[c]++;
        for (auto i : *clusters[c]) {
            Record rec = table.records[i];
            if (copy > 0) {
                std::string tag = "~" + std::to_string(copy);
                rec.cluster_id += tag;
                rec.person_id += tag;
            }
            out.records.push_back(std::move(rec));
        }
    }
    return out;
}

double percentile(std::vector<double> values, double p)
{
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    double h = (static_cast<double>(values.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapResult cluster_bootstrap(const ObservationTable& table, const InferenceConfig& config, const ReplicateFn& estimator,
                                  std::optional<double> point)
{
    if (config.replicates < 1) {
        throw Error(ErrorCode::ConfigError, kModule, "replicates must be at least 1");
    }
    if (!(config.level > 0.0 && config.level < 1.0)) {
        throw Error(ErrorCode::ConfigError, kModule, "level must lie in (0, 1)");
    }
    std::size_t clusters = 0;
    {
        std::vector<std::string> ids;
        for (const auto& rec : table.records) {
            ids.push_back(rec.cluster_id);
        }
        std::sort(ids.begin(), ids.end());
        clusters = static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
    }
    if (clusters < 2) {
        throw Error(ErrorCode::TooFewClusters, kModule, "cluster bootstrap needs at least 2 clusters, found " + std::to_string(clusters));
    }

    BootstrapResult res;
    res.point = point ? *point : estimator(table, config.seed);
    const auto B = static_cast<std::size_t>(config.replicates);
    res.replicates.assign(B, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> errors(B);

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= B) {
                return;
            }
            std::uint64_t s = replicate_seed(config.seed, b);
            try {
                auto sample = resample_clusters(table, config.mode, s, config.subsample);
                res.replicates[b] = estimator(sample, hash_combine(s, 1));
            }
            catch (const std::exception& e) {
                errors[b] = e.what();
            }
        }
    };
    const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(B)));
    if (workers == 1) {
        work();
    }
    else {
        std::vector<std::thread> pool;
        for (int k = 0; k < workers; ++k) {
            pool.emplace_back(work);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    std::vector<double> ok;
    for (std::size_t b = 0; b < B; ++b) {
        if (std::isnan(res.replicates[b])) {
            ++res.failures;
        }
        else {
            ok.push_back(res.replicates[b]);
        }
    }
    if (static_cast<double>(res.failures) > 0.10 * static_cast<double>(B)) {
        std::string first;
        for (const auto& e : errors) {
            if (!e.empty()) {
                first = e;
                break;
            }
        }
        throw Error(ErrorCode::ReplicateFailure, kModule,
                    std::to_string(res.failures) + " of " + std::to_string(B) + " replicates failed; first: " + first);
    }
    if (res.failures > 0) {
        res.warnings.push_back(std::to_string(res.failures) + " bootstrap replicates failed and were excluded");
    }
    if (ok.size() == 1) {
        res.warnings.push_back("a single bootstrap replicate gives a degenerate interval");
    }
    if (config.mode == ResampleMode::WithoutReplacement) {
        res.warnings.push_back("without_replacement resampling is an experimental m-out-of-n cluster subsample; intervals are not rescaled");
    }
    const double alpha = 1.0 - config.level;
    res.lower = percentile(ok, alpha / 2.0);
    res.upper = percentile(ok, 1.0 - alpha / 2.0);
    return res;
}

void write_replicates(std::ostream& out, const std::vector<double>& replicates)
{
    out << "replicate,estimate\n";
    for (std::size_t b = 0; b < replicates.size(); ++b) {
        out << (b + 1) << ',';
        if (std::isnan(replicates[b])) {
            out << "NA";
        }
        else {
            out << format_number(replicates[b]);
        }
        out << '\n';
    }
}

} // namespace disparity
