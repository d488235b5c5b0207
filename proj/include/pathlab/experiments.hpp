#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pathlab {

struct ExperimentConfig {
    std::string experiment;
    double T = 1.0;
    double dt = 1.0 / 256.0;
    std::int64_t n_samples = 200000;
    std::int64_t n_inner = 512;
    std::uint64_t base_seed = 12345;
    double z_threshold = 4.0;
    std::string out_dir;
    std::string format = "csv";

    // strict flat key=value file; unknown keys are errors
    static ExperimentConfig from_file(const std::string& path);
    void validate() const;
};

struct HeadlineNumber {
    std::string name;
    double value = 0.0;
};

struct ExperimentResult {
    std::string experiment;
    bool pass = false;
    std::vector<HeadlineNumber> headline;
    std::string payload_json; // detailed reports as a JSON object
    std::vector<std::pair<std::string, std::string>> tables; // csv name -> content
    double wall_clock_ms = 0.0;
    ExperimentConfig config;

    std::string to_json() const;
    double headline_value(const std::string& name) const;
};

struct ExperimentInfo {
    std::string id;
    std::string title;
    std::string description;
    std::vector<std::string> tags;
    std::vector<std::string> operations; // module.operation exercised by the entry
};

const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo* find_experiment(const std::string& id);

// operations per module; registry entries must reference these
const std::map<std::string, std::vector<std::string>>& operation_table();

// dispatches to the registry entry; throws on unknown experiment
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// writes summary.json plus the experiment's CSV tables when format == "csv";
// returns the list of files written
std::vector<std::string> emit(const ExperimentResult& result, const std::string& out_dir,
                              const std::string& format);

// registry listing, plain table or JSON array, optionally filtered by tag
std::string list_experiments(bool as_json, const std::string& tag_filter = "");

} // namespace pathlab
