#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfd/field.hpp"
#include "qfd/manybody.hpp"
#include "qfd/potential.hpp"
#include "qfd/propagator.hpp"
#include "qfd/qfdft.hpp"
#include "qfd/trajectories.hpp"

namespace qfd::app {

/// Malformed TOML (exit 2).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed file that violates the schema or a range (exit 3).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { single, twobody_full, twobody_hartree, reduced, qfdft, check };

std::string_view to_string(Mode m);

struct TrajectorySpec {
    bool enabled = false;
    std::size_t n = 0;
    traj::Sampling sampling = traj::Sampling::inverse_cdf;
    traj::IntegrateOptions integrate{};
};

/// A validated scenario with every physics object already constructed.
struct Scenario {
    Mode mode = Mode::single;
    std::filesystem::path config_path;
    std::filesystem::path output;
    std::optional<std::uint64_t> seed;

    Grid grid;  ///< the simulation grid (per-particle axis for two-body modes)
    PotentialSpec potential;
    PropagatorConfig propagator;
    std::size_t snapshot_stride = 1;
    bool write_hydro = true;

    ComplexField psi0;                      ///< single
    std::array<ComplexField, 2> particles;  ///< two-body and reduced
    mb::Symmetry symmetry = mb::Symmetry::none;
    mb::Interaction interaction{};
    bool predictor_corrector = false;

    ks::OrbitalSet orbitals;  ///< qfdft (empty when started from the stationary limit)
    ks::FunctionalConfig functional;
    std::size_t stationary_orbitals = 0;  ///< > 0: start from stationary_limit with this many
    ks::StationaryOptions stationary{};

    TrajectorySpec trajectories;
    std::string suite;  ///< check mode

    std::string normalized_toml;        ///< the config as understood, file paths absolute
    std::string normalized_json;
    std::vector<std::string> defaults;  ///< numerical defaults that were applied
};

/// Parses and validates; file references and a relative output directory
/// are resolved against the config file's directory. `output_override`
/// replaces the configured output directory.
Scenario load_scenario(const std::filesystem::path& config,
                       const std::optional<std::filesystem::path>& output_override = std::nullopt);
Scenario parse_scenario(const std::string& toml_text, const std::filesystem::path& base_dir,
                        const std::optional<std::filesystem::path>& output_override = std::nullopt);

struct RunResult {
    std::vector<std::filesystem::path> files;  ///< numeric outputs, relative to the output directory
    bool checks_passed = true;                 ///< check mode only
};

/// Executes the scenario's pipeline and writes its outputs (not the manifest).
RunResult run_scenario(const Scenario& s);

}  // namespace qfd::app
