// Runs `qfd check all` twice through the real executable and prints one
// line per acceptance criterion. Exit status is nonzero if any line fails.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Row {
    std::string suite, criterion, measured, relation, threshold;
    bool pass;
};

int run_check_all(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    const std::string cmd = std::string("'") + QFD_EXE + "' check all --output '" + dir.string() + "' > '" +
                            dir.string() + ".log' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<Row> read_verdicts(const fs::path& csv) {
    std::vector<Row> rows;
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        Row r;
        std::string pass;
        std::getline(ss, r.suite, ',');
        std::getline(ss, r.criterion, ',');
        std::getline(ss, r.measured, ',');
        std::getline(ss, r.relation, ',');
        std::getline(ss, r.threshold, ',');
        std::getline(ss, pass, ',');
        r.pass = pass == "true";
        rows.push_back(r);
    }
    return rows;
}

std::map<std::string, std::string> numeric_outputs(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        // manifest.json holds timestamps; config.toml echoes the output path
        const auto name = e.path().filename();
        if (!e.is_regular_file() || name == "manifest.json" || name == "config.toml") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), dir).generic_string()] = ss.str();
    }
    return files;
}

bool line(int n, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << n << "  " << name << "  " << detail << std::endl;
    return pass;
}

}  // namespace

int main() {
    const fs::path root = fs::path(QFD_TEST_WORKDIR) / "acceptance";
    const int code_a = run_check_all(root / "run_a");
    const int code_b = run_check_all(root / "run_b");
    const auto rows = read_verdicts(root / "run_a" / "verdicts.csv");

    const std::vector<std::pair<std::string, std::string>> criteria = {
        {"conservation", "conservation"}, {"analytic", "analytic oracles"}, {"scale_gauge", "scale and gauge"},
        {"equivariance", "equivariance"}, {"manybody", "many-body"},        {"reduced", "reduced"},
        {"qfdft", "qfd-dft"},             {"vortex", "vortex"},
    };
    bool all = true;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        std::size_t n = 0, passed = 0;
        std::string failures;
        for (const auto& r : rows) {
            if (r.suite != criteria[c].first) continue;
            ++n;
            if (r.pass)
                ++passed;
            else
                failures += " [" + r.criterion + ": " + r.measured + " " + r.relation + " " + r.threshold + "]";
        }
        all &= line(static_cast<int>(c + 1), criteria[c].second, n > 0 && passed == n,
                    std::to_string(passed) + "/" + std::to_string(n) + " verdicts" + failures);
    }

    const auto a = numeric_outputs(root / "run_a"), b = numeric_outputs(root / "run_b");
    std::string detail = std::to_string(a.size()) + " files";
    bool same = code_a == code_b && code_a >= 0 && !a.empty() && a.size() == b.size();
    for (const auto& [path, bytes] : a) {
        const auto it = b.find(path);
        if (it == b.end() || it->second != bytes) {
            same = false;
            detail += " [differs: " + path + "]";
            break;
        }
    }
    all &= line(9, "determinism", same, detail + " byte-identical across two runs of `qfd check all`");
    return all ? 0 : 1;
}
