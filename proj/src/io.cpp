#include "rbmlab/io.hpp"

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rbmlab/ensemble.hpp"
#include "rbmlab/errors.hpp"

namespace rbm {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    return out;
}

} // namespace

void write_metrics_csv(const std::string& path, const MetricsRecord& record) {
    std::ofstream out = open_out(path);
    out << "time,metric,value,replica\n";
    for (const MetricsRecord::Entry& e : record.entries)
        out << format_double(e.time) << ',' << e.metric << ',' << format_double(e.value) << ','
            << e.replica << '\n';
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
    std::ofstream out = open_out(path);
    out << "axis,axis_value,mean,std_error,replicas_done,replicas_aborted\n";
    for (const SweepPoint& pt : result.points)
        out << to_string(result.axis) << ',' << format_double(pt.axis_value) << ','
            << format_double(pt.mean) << ',' << format_double(pt.std_error) << ','
            << pt.replicas_done << ',' << pt.replicas_aborted << '\n';
}

void write_density_csv(const std::string& path, const DensityField1D& rho) {
    std::ofstream out = open_out(path);
    out << "x,rho\n";
    for (int j = 0; j < rho.n_cells; ++j)
        out << format_double(rho.center(j)) << ',' << format_double(rho.values[j]) << '\n';
}

void write_law_csv(const std::string& path, const std::vector<LawSample>& samples) {
    std::ofstream out = open_out(path);
    out << "time,mean,variance\n";
    for (const LawSample& s : samples)
        out << format_double(s.time) << ',' << format_double(s.mean) << ','
            << format_double(s.variance) << '\n';
}

TrajectoryWriter::TrajectoryWriter(std::string path, int dim)
    : path_(std::move(path)), dim_(dim) {
    std::ofstream out = open_out(path_); // truncate any previous run
    out << "replica,step,time,particle";
    for (int k = 0; k < dim_; ++k) out << ",x_" << k;
    out << '\n';
    header_written_ = true;
}

void TrajectoryWriter::append(const ParticleEnsemble& ens, int replica) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to trajectory file '" + path_ + "'");
    for (int i = 0; i < ens.n_particles; ++i) {
        out << replica << ',' << ens.step << ',' << format_double(ens.time) << ',' << i;
        const double* x = ens.at(i);
        for (int k = 0; k < dim_; ++k) out << ',' << format_double(x[k]);
        out << '\n';
    }
}

std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return std::string(buf);
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json doc;
    doc["tool_version"] = manifest.tool_version;
    doc["command"] = manifest.command;
    doc["config_digest"] = manifest.config_digest;
    doc["seed"] = manifest.seed;
    doc["started_at"] = manifest.started_at;
    doc["finished_at"] = manifest.finished_at;
    doc["outputs"] = manifest.outputs;
    nlohmann::json extra = nlohmann::json::object();
    for (const auto& [key, value] : manifest.extra) extra[key] = value;
    doc["summary"] = std::move(extra);

    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
}

} // namespace rbm
