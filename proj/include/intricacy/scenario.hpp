#pragma once

// Scenario configuration, dispatch to the science modules, and result files.
// Configurations are JSON documents; unknown keys are rejected.

#include "intricacy/collapse.hpp"
#include "intricacy/detector_model.hpp"
#include "intricacy/kinetics.hpp"
#include "intricacy/predecoherence.hpp"
#include "intricacy/sectors.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace intricacy::scenario {

using nlohmann::json;

enum class Kind { estimate, wavefront, field, sectors, predecoherence, collapse };

std::string to_string(Kind k);
Kind kind_from_string(const std::string& s);
const std::vector<std::string>& kind_names();

struct EstimateBlock {
    /// Active front width in mean free paths; empty uses the traveling-wave rise width.
    std::optional<double> front_width_mfp;
    double p1 = 0.5;
};

struct WavefrontBlock {
    kinetics::WaveOptions wave;
    bool run_fronts = true;
    kinetics::FrontRunOptions front; ///< shared by both modes; mode is set per run
};

struct FieldBlock {
    int dimension = 1;
    std::size_t points = 200;
    double spacing = 0.5;
    double t_end = 20.0;
    double dt = 0.05;
    double diffusion = kinetics::kReducedDiffusion;
    double tau = 1.0;
    /// Initial f1 = seed_value inside the seed region: 1D [0, seed_width);
    /// 3D a line along the first axis through the centre of the other two.
    double seed_width = 2.0;
    double seed_value = 1.0;
    double source_rate = 0.0;
    double source_duration = 0.0;
    double snapshot_interval = 1.0;
};

struct SectorsBlock {
    sectors::ModelSpec model;
    sectors::SectorEvolveOptions evolve;
    sectors::Region region;
};

struct PredecoherenceBlock {
    predecoherence::DisorderSpec disorder;
    std::size_t samples = 50;
};

struct CollapseBlock {
    std::vector<double> p{0.3, 0.7};
    std::vector<bool> mute{false, true};
    collapse::ScheduleKind schedule = collapse::ScheduleKind::constant;
    /// Summed intricacy per channel at t = 0, spread over cells.
    std::vector<double> intricacy{10.0, 0.0};
    double schedule_tau = 1.0;
    double cascade_rate = 1.0;
    /// from-field: the kinetics run feeding channel `field_channel`.
    FieldBlock field;
    std::size_t field_channel = 0;
    std::string profile = "interpolation"; ///< interpolation | sine | power
    double profile_exponent = 1.0;
    double prefactor = collapse::FluctuationModel{}.prefactor;
    double tau = 1.0;
    collapse::StepPolicy policy;
    std::size_t trials = 10'000;
    std::size_t max_steps = 10'000'000;
    std::size_t threads = 1;
};

struct ScenarioConfig {
    Kind kind = Kind::estimate;
    std::uint64_t seed = 1;
    std::string output_dir;
    bool write_csv = true;
    bool write_json = true;
    detector::DetectorParams detector;
    EstimateBlock estimate;
    WavefrontBlock wavefront;
    FieldBlock field;
    SectorsBlock sectors;
    PredecoherenceBlock predecoherence;
    CollapseBlock collapse;

    /// Fully resolved configuration (defaults filled), as written to the manifest.
    json echo() const;
};

/// Strict parse. Throws ConfigError listing every offending path.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig parse_config(const char* text);
ScenarioConfig parse_config(const json& document);

struct OutputFile {
    std::string name;
    std::string checksum; ///< FNV-1a 64, hex
    std::size_t bytes = 0;
};

struct RunManifest {
    json config;
    std::string version;
    double wall_time = 0.0; ///< seconds
    std::vector<OutputFile> outputs;
    json summary;

    json to_json() const;
};

/// Runs the scenario, writes its outputs plus manifest.json into
/// config.output_dir (nothing is written when it is empty).
RunManifest run_scenario(const ScenarioConfig& config);

/// Library version string.
const char* version();

} // namespace intricacy::scenario
