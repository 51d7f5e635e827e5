#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Verification suites run at pinned desk-scale parameters. Failures are
// verdicts, not exceptions.
namespace qfd::checks {

enum class Relation { at_most, at_least, greater_than };

std::string_view to_string(Relation r);

struct Verdict {
    std::string suite;
    std::string criterion;
    double measured = 0.0;
    Relation relation = Relation::at_most;
    double threshold = 0.0;
    bool pass = false;
};

struct SuiteResult {
    std::string name;
    std::vector<Verdict> verdicts;
    double seconds = 0.0;  ///< wall clock; kept out of the verdict CSV

    [[nodiscard]] bool passed() const;
};

/// Individual suites in the order `all` runs them.
const std::vector<std::string>& suite_names();
/// True for a suite name or "all".
bool is_suite(std::string_view name);

/// Runs one suite (or every suite for "all"). When `artifacts` is non-empty
/// each suite writes its data files under artifacts/<suite>/.
std::vector<SuiteResult> run(std::string_view suite, const std::filesystem::path& artifacts = {});

/// suite,criterion,measured,relation,threshold,pass
void write_verdicts_csv(const std::filesystem::path& path, const std::vector<SuiteResult>& results);

}  // namespace qfd::checks
