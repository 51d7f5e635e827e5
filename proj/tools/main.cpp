#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "manifest.hpp"
#include "qfd/checks.hpp"
#include "qfd/error.hpp"
#include "qfd/field_io.hpp"
#include "qfd/parallel.hpp"
#include "scenario.hpp"

namespace fs = std::filesystem;
using namespace qfd;

namespace {

enum Exit { ok = 0, failed = 1, parse_error = 2, validation_error = 3, numerical_error = 4 };

std::string command_line(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
}

void print_verdicts(const fs::path& verdicts_csv) {
    std::ifstream in(verdicts_csv);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string suite, criterion, measured, rel, threshold, pass;
        std::getline(ss, suite, ',');
        std::getline(ss, criterion, ',');
        std::getline(ss, measured, ',');
        std::getline(ss, rel, ',');
        std::getline(ss, threshold, ',');
        std::getline(ss, pass, ',');
        std::cout << (pass == "true" ? "PASS " : "FAIL ") << suite << '/' << criterion << "  " << measured << ' ' << rel
                  << ' ' << threshold << '\n';
    }
}

int execute(const app::Scenario& sc, const std::string& command) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = app::run_scenario(sc);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    app::write_manifest(sc, result, command, wall);

    for (const auto& d : sc.defaults) std::cout << "default applied: " << d << '\n';
    if (sc.mode == app::Mode::check) print_verdicts(sc.output / "verdicts.csv");
    std::cout << "wrote " << result.files.size() << " files and manifest.json to " << sc.output.string() << " ("
              << wall << " s, " << thread_count() << " threads)\n";
    return result.checks_passed ? ok : failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Grid-based quantum hydrodynamics"};
    cli.require_subcommand(1);

    std::string config, output, suite, info_dir;
    auto* run = cli.add_subcommand("run", "Run a scenario described by a TOML file");
    run->add_option("config", config, "Scenario file")->required();
    run->add_option("-o,--output", output, "Override the output directory");

    auto* check = cli.add_subcommand("check", "Run a verification suite");
    check->add_option("suite", suite, "Suite name or 'all'")->required();
    check->add_option("-o,--output", output, "Artifact directory (default: check_<suite>)");

    auto* info = cli.add_subcommand("info", "Summarize an artifact directory and verify its checksums");
    info->add_option("dir", info_dir, "Artifact directory")->required();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.exit(e);
        return parse_error;
    }

    const std::string command = command_line(argc, argv);
    try {
        if (*run) {
            const auto sc = app::load_scenario(config, output.empty() ? std::nullopt : std::optional<fs::path>(output));
            return execute(sc, command);
        }
        if (*check) {
            if (!checks::is_suite(suite)) {
                std::string names;
                for (const auto& n : checks::suite_names()) names += n + ", ";
                throw app::ValidationError("unknown check suite '" + suite + "' (" + names + "all)");
            }
            const fs::path dir = output.empty() ? fs::path("check_" + suite) : fs::path(output);
            std::ostringstream toml;
            toml << "mode = \"check\"\nsuite = \"" << suite << "\"\noutput = \"" << fs::absolute(dir).generic_string()
                 << "\"\n";
            return execute(app::parse_scenario(toml.str(), fs::current_path()), command);
        }
        return app::describe_artifacts(info_dir, std::cout) ? ok : failed;
    } catch (const app::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return parse_error;
    } catch (const app::ValidationError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return validation_error;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return validation_error;
    } catch (const GridMismatch& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return validation_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return numerical_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failed;
    }
}
