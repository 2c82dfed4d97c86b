#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msiph/linalg_pipeline.hpp"
#include "msiph/mimo_bench.hpp"
#include "msiph/mvm_engine.hpp"
#include "msiph/perf_model.hpp"
#include "msiph/wdm_planner.hpp"

namespace msiph {

inline constexpr const char* kToolName = "msiph";
inline constexpr const char* kToolVersion = "1.0.0";

/// Flat "section.key = value" settings. Only known keys are accepted.
class ExperimentConfig {
public:
    ExperimentConfig();

    static const std::map<std::string, std::string>& defaults();

    void load_file(const std::string& path);
    void load_text(const std::string& text, const std::string& origin = "<text>");
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;

    std::uint64_t seed() const { return get_u64("seed"); }
    std::string resolved() const;

    PlannerConfig planner() const;
    DeviceChain devices(int M, int L) const;
    EngineConfig engine(int M, int L) const;
    NeumannConfig neumann() const;
    SweepConfig mimo_sweep() const;
    BlockBudget budget() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace msiph
