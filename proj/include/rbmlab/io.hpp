#pragma once

#include <string>
#include <vector>

#include "rbmlab/meanfield.hpp"
#include "rbmlab/metrics.hpp"
#include "rbmlab/sweep.hpp"

namespace rbm {

struct ParticleEnsemble;

/// Shortest round-trip decimal form of v (%.17g); keeps CSV output
/// byte-stable across runs.
std::string format_double(double v);

void ensure_directory(const std::string& dir);
std::string join_path(const std::string& dir, const std::string& name);

/// Header: time,metric,value,replica
void write_metrics_csv(const std::string& path, const MetricsRecord& record);

/// Header: axis,axis_value,mean,std_error,replicas_done,replicas_aborted
void write_sweep_csv(const std::string& path, const SweepResult& result);

/// Header: x,rho
void write_density_csv(const std::string& path, const DensityField1D& rho);

struct LawSample {
    double time;
    double mean;
    double variance;
};

/// Header: time,mean,variance
void write_law_csv(const std::string& path, const std::vector<LawSample>& samples);

/// Appending writer for trajectory snapshots.
/// Header: replica,step,time,particle,x_0..x_{d-1}
class TrajectoryWriter {
public:
    TrajectoryWriter(std::string path, int dim);
    void append(const ParticleEnsemble& ens, int replica);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    int dim_;
    bool header_written_ = false;
};

struct RunManifest {
    std::string tool_version;
    std::string command;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string started_at;  // ISO 8601 UTC
    std::string finished_at; // ISO 8601 UTC
    std::vector<std::string> outputs;
    std::vector<std::pair<std::string, std::string>> extra; // free-form summary fields
};

std::string iso8601_utc_now();

void write_manifest(const std::string& path, const RunManifest& manifest);

} // namespace rbm
