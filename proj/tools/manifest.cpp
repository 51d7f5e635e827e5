#include "manifest.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <fftw3.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <Eigen/Core>
#include "json.hpp"

#include "qfd/error.hpp"
#include "qfd/parallel.hpp"

#ifndef QFD_VERSION
#define QFD_VERSION "0.0.0"
#endif

namespace qfd::app {
namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json library_versions() {
    return {
        {"fftw", std::string(fftw_version)},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"openssl", std::string(OpenSSL_version(OPENSSL_VERSION))},
        {"compiler", std::string(__VERSION__)},
    };
}

}  // namespace

void write_manifest(const Scenario& sc, const RunResult& r, const std::string& command, double wall_seconds) {
    json files = json::array();
    for (const auto& rel : r.files) {
        const fs::path p = sc.output / rel;
        files.push_back({{"path", rel.generic_string()}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
    }
    json m = {
        {"tool", "qfd"},
        {"version", QFD_VERSION},
        {"command", command},
        {"mode", std::string(to_string(sc.mode))},
        {"config_path", sc.config_path.string()},
        {"config", json::parse(sc.normalized_json)},
        {"config_toml", sc.normalized_toml},
        {"defaults_applied", sc.defaults},
        {"seed", sc.seed ? json(*sc.seed) : json(nullptr)},
        {"threads", thread_count()},
        {"libraries", library_versions()},
        {"timestamp_utc", utc_now()},
        {"wall_clock_seconds", wall_seconds},
        {"files", files},
    };
    if (sc.mode == Mode::check) m["checks_passed"] = r.checks_passed;
    std::ofstream out(sc.output / "manifest.json");
    if (!out) throw IoError("cannot write " + (sc.output / "manifest.json").string());
    out << m.dump(2) << '\n';
}

bool describe_artifacts(const fs::path& dir, std::ostream& os) {
    const fs::path path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) {
        os << "no manifest.json in " << dir.string() << '\n';
        return false;
    }
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        os << "unreadable manifest: " << e.what() << '\n';
        return false;
    }
    os << "tool      " << m.value("tool", "?") << ' ' << m.value("version", "?") << '\n'
       << "mode      " << m.value("mode", "?") << '\n'
       << "command   " << m.value("command", "?") << '\n'
       << "timestamp " << m.value("timestamp_utc", "?") << '\n'
       << "wall      " << m.value("wall_clock_seconds", 0.0) << " s, threads " << m.value("threads", 0) << '\n'
       << "seed      " << (m.contains("seed") && !m["seed"].is_null() ? m["seed"].dump() : "none") << '\n';
    if (m.contains("defaults_applied") && !m["defaults_applied"].empty()) {
        os << "defaults\n";
        for (const auto& d : m["defaults_applied"]) os << "  " << d.get<std::string>() << '\n';
    }
    if (m.contains("checks_passed")) os << "checks    " << (m["checks_passed"].get<bool>() ? "pass" : "FAIL") << '\n';

    std::size_t ok = 0, bad = 0;
    std::uintmax_t bytes = 0;
    for (const auto& f : m.value("files", json::array())) {
        const fs::path p = dir / f.at("path").get<std::string>();
        std::string why;
        if (!fs::is_regular_file(p))
            why = "missing";
        else if (fs::file_size(p) != f.at("bytes").get<std::uintmax_t>())
            why = "size changed";
        else if (sha256_file(p) != f.at("sha256").get<std::string>())
            why = "checksum mismatch";
        if (why.empty()) {
            ++ok;
            bytes += fs::file_size(p);
        } else {
            ++bad;
            os << "  " << why << ": " << f.at("path").get<std::string>() << '\n';
        }
    }
    os << "files     " << ok << " verified (" << bytes << " bytes)";
    if (bad) os << ", " << bad << " failed";
    os << '\n';
    return bad == 0;
}

}  // namespace qfd::app
