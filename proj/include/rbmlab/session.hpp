#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "rbmlab/config.hpp"
#include "rbmlab/integrator.hpp"
#include "rbmlab/sweep.hpp"

namespace rbm {

extern const char* const kToolVersion;

/// One configured invocation: config + overrides in, command out. The C API
/// wraps this 1:1; the CLI drives it through the C API only.
class Session {
public:
    void load_config_file(const std::string& path);
    void load_config_text(const std::string& text, const std::string& origin);
    void apply_override(const std::string& assignment);
    void set_seed(std::uint64_t seed);
    void set_threads(int n_threads);
    void set_output_dir(const std::string& dir);
    void set_force(bool force);

    /// command in {simulate, sweep, check, reference, bench}; returns the
    /// process exit code contract (0 ok, 2 config, 3 numeric, 4 partial,
    /// 5 assumption) and never throws.
    int run_command(const std::string& command);

    const std::string& report() const { return report_; }
    const std::string& error() const { return error_; }

private:
    ConfigFile config_;
    std::optional<std::uint64_t> seed_override_;
    int threads_ = 0; // 0 = machine parallelism
    std::optional<std::string> out_override_;
    bool force_ = false;
    std::string report_;
    std::string error_;

    int cmd_simulate();
    int cmd_sweep(bool bench);
    int cmd_check();
    int cmd_reference();

    std::shared_ptr<const ModelSpec> build_model() const;
    InitialDist build_init() const;
    SimConfig build_sim(std::shared_ptr<const ModelSpec> model) const;
    SweepPlan build_sweep_plan(bool bench) const;
    std::string output_dir() const;
    std::uint64_t effective_seed() const;
    int effective_threads() const;
};

} // namespace rbm
