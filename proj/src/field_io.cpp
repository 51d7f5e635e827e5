#include "qfd/field_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace qfd::io {
namespace {

constexpr std::uint32_t format_version = 1;
constexpr std::uint32_t flag_complex = 1u << 0;
constexpr std::uint32_t flag_matrix = 1u << 1;
constexpr std::uint32_t flag_dirichlet0 = 1u << 8;
constexpr std::uint32_t flag_dirichlet1 = 1u << 9;

template <typename U>
void put_le(std::array<unsigned char, header_bytes>& buf, std::size_t at, U value) {
    static_assert(sizeof(U) == 4 || sizeof(U) == 8);
    using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
    const auto bits = std::bit_cast<Bits>(value);
    for (std::size_t b = 0; b < sizeof(U); ++b) buf[at + b] = static_cast<unsigned char>(bits >> (8 * b));
}

template <typename U>
U get_le(const std::array<unsigned char, header_bytes>& buf, std::size_t at) {
    using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
    Bits bits = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<Bits>(buf[at + b]) << (8 * b);
    return std::bit_cast<U>(bits);
}

void write_doubles(std::ofstream& out, const double* p, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            auto bits = std::bit_cast<std::uint64_t>(p[k]);
            char bytes[8];
            for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>(bits >> (8 * b));
            out.write(bytes, 8);
        }
    }
}

void read_doubles(std::ifstream& in, double* p, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
    } else {
        for (std::size_t k = 0; k < count; ++k) {
            unsigned char bytes[8];
            in.read(reinterpret_cast<char*>(bytes), 8);
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
            p[k] = std::bit_cast<double>(bits);
        }
    }
}

struct Header {
    std::uint32_t flags = 0;
    std::uint32_t dims = 0;
    std::uint64_t n0 = 0, n1 = 0;
    double dx0 = 0, dx1 = 0, x0 = 0, x1 = 0;
};

std::array<unsigned char, header_bytes> encode(const Header& h) {
    std::array<unsigned char, header_bytes> buf{};
    std::memcpy(buf.data(), "QFDF", 4);
    put_le(buf, 4, format_version);
    put_le(buf, 8, h.flags);
    put_le(buf, 12, h.dims);
    put_le(buf, 16, h.n0);
    put_le(buf, 24, h.n1);
    put_le(buf, 32, h.dx0);
    put_le(buf, 40, h.dx1);
    put_le(buf, 48, h.x0);
    put_le(buf, 56, h.x1);
    return buf;
}

Header decode(const std::array<unsigned char, header_bytes>& buf, const std::filesystem::path& path) {
    if (std::memcmp(buf.data(), "QFDF", 4) != 0) throw IoError(path.string() + ": bad magic, not a QFDF file");
    if (get_le<std::uint32_t>(buf, 4) != format_version)
        throw IoError(path.string() + ": unsupported QFDF version");
    Header h;
    h.flags = get_le<std::uint32_t>(buf, 8);
    h.dims = get_le<std::uint32_t>(buf, 12);
    h.n0 = get_le<std::uint64_t>(buf, 16);
    h.n1 = get_le<std::uint64_t>(buf, 24);
    h.dx0 = get_le<double>(buf, 32);
    h.dx1 = get_le<double>(buf, 40);
    h.x0 = get_le<double>(buf, 48);
    h.x1 = get_le<double>(buf, 56);
    if (h.dims != 1 && h.dims != 2) throw IoError(path.string() + ": dims must be 1 or 2");
    return h;
}

Header header_for(const Grid& g, bool is_complex) {
    Header h;
    h.dims = static_cast<std::uint32_t>(g.dims());
    h.flags = is_complex ? flag_complex : 0;
    const Grid1D& a0 = g.axis(0);
    h.n0 = a0.n_points;
    h.dx0 = a0.dx;
    h.x0 = a0.x_min;
    if (a0.boundary == Boundary::dirichlet) h.flags |= flag_dirichlet0;
    if (g.dims() == 2) {
        const Grid1D& a1 = g.axis(1);
        h.n1 = a1.n_points;
        h.dx1 = a1.dx;
        h.x1 = a1.x_min;
        if (a1.boundary == Boundary::dirichlet) h.flags |= flag_dirichlet1;
    }
    return h;
}

Grid grid_for(const Header& h) {
    Grid1D a0(h.n0, h.x0, h.dx0, (h.flags & flag_dirichlet0) ? Boundary::dirichlet : Boundary::periodic);
    if (h.dims == 1) return Grid(a0);
    Grid1D a1(h.n1, h.x1, h.dx1, (h.flags & flag_dirichlet1) ? Boundary::dirichlet : Boundary::periodic);
    return Grid(a0, a1);
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::pair<Header, std::ifstream> open_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::array<unsigned char, header_bytes> buf{};
    in.read(reinterpret_cast<char*>(buf.data()), header_bytes);
    if (!in) throw IoError(path.string() + ": truncated header");
    return {decode(buf, path), std::move(in)};
}

template <typename T>
void write_field_binary(const std::filesystem::path& path, const Field<T>& f) {
    constexpr bool is_complex = std::is_same_v<T, complex>;
    auto out = open_out(path, std::ios::binary);
    const auto buf = encode(header_for(f.grid(), is_complex));
    out.write(reinterpret_cast<const char*>(buf.data()), header_bytes);
    write_doubles(out, reinterpret_cast<const double*>(f.values().data()), f.size() * (is_complex ? 2 : 1));
    if (!out) throw IoError("write failed: " + path.string());
}

template <typename T>
Field<T> read_field_binary(const std::filesystem::path& path) {
    constexpr bool is_complex = std::is_same_v<T, complex>;
    auto [h, in] = open_binary(path);
    if (h.flags & flag_matrix) throw IoError(path.string() + ": is a matrix file, not a field");
    if (static_cast<bool>(h.flags & flag_complex) != is_complex)
        throw IoError(path.string() + (is_complex ? ": expected complex field" : ": expected real field"));
    Field<T> f(grid_for(h));
    read_doubles(in, reinterpret_cast<double*>(f.values().data()), f.size() * (is_complex ? 2 : 1));
    if (!in) throw IoError(path.string() + ": truncated payload");
    return f;
}

std::string grid_comment(const Grid& g, bool is_complex) {
    std::ostringstream os;
    os << "# qfdf-csv kind=" << (is_complex ? "complex" : "real") << " dims=" << g.dims();
    for (std::size_t a = 0; a < g.dims(); ++a) {
        const Grid1D& ax = g.axis(a);
        os << " n" << a << '=' << ax.n_points << " xmin" << a << '=' << format_double(ax.x_min) << " dx" << a
           << '=' << format_double(ax.dx) << " boundary" << a << '=' << to_string(ax.boundary);
    }
    return os.str();
}

template <typename T>
void write_field_csv(const std::filesystem::path& path, const Field<T>& f) {
    constexpr bool is_complex = std::is_same_v<T, complex>;
    const Grid& g = f.grid();
    auto out = open_out(path);
    out << grid_comment(g, is_complex) << '\n';
    out << (g.dims() == 1 ? "index,x," : "index,x,y,") << (is_complex ? "re,im" : "value") << '\n';
    const std::size_t ny = g.dims() == 2 ? g.axis(1).n_points : 1;
    for (std::size_t k = 0; k < f.size(); ++k) {
        out << k << ',' << format_double(g.axis(0).x(k / ny));
        if (g.dims() == 2) out << ',' << format_double(g.axis(1).x(k % ny));
        if constexpr (is_complex) {
            out << ',' << format_double(f[k].real()) << ',' << format_double(f[k].imag());
        } else {
            out << ',' << format_double(f[k]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        parts.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

template <typename T>
Field<T> read_field_csv(const std::filesystem::path& path) {
    constexpr bool is_complex = std::is_same_v<T, complex>;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("# qfdf-csv", 0) != 0) throw IoError(path.string() + ": missing qfdf-csv grid line");
    std::map<std::string, std::string, std::less<>> kv;
    for (auto tok : split(line, ' ')) {
        const auto eq = tok.find('=');
        if (eq != std::string_view::npos) kv.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError(path.string() + ": grid line lacks '" + key + "'");
        return it->second;
    };
    if ((need("kind") == "complex") != is_complex) throw IoError(path.string() + ": field kind mismatch");
    const int dims = std::stoi(need("dims"));
    auto axis = [&](int a) {
        const auto s = std::to_string(a);
        return Grid1D(std::stoull(need("n" + s)), parse_double(need("xmin" + s)), parse_double(need("dx" + s)),
                      boundary_from_string(need("boundary" + s)));
    };
    Grid g = dims == 1 ? Grid(axis(0)) : Grid(axis(0), axis(1));
    Field<T> f(g);
    std::getline(in, line);  // column header
    const std::size_t value_col = static_cast<std::size_t>(dims) + 1;
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!std::getline(in, line)) throw IoError(path.string() + ": too few rows");
        const auto cols = split(line, ',');
        if (cols.size() != value_col + (is_complex ? 2 : 1)) throw IoError(path.string() + ": malformed row");
        if constexpr (is_complex) {
            f[k] = complex(parse_double(cols[value_col]), parse_double(cols[value_col + 1]));
        } else {
            f[k] = parse_double(cols[value_col]);
        }
    }
    return f;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw IoError("failed to format number");
    return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    while (!s.empty() && (s.front() == ' ' || s.front() == '+')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan" || s == "-nan") return s.front() == '-' ? -std::numeric_limits<double>::quiet_NaN()
                                                          : std::numeric_limits<double>::quiet_NaN();
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw IoError("not a number: '" + std::string(s) + "'");
    return v;
}

void write_binary(const std::filesystem::path& path, const RealField& f) { write_field_binary(path, f); }
void write_binary(const std::filesystem::path& path, const ComplexField& f) { write_field_binary(path, f); }
RealField read_real_binary(const std::filesystem::path& path) { return read_field_binary<double>(path); }
ComplexField read_complex_binary(const std::filesystem::path& path) { return read_field_binary<complex>(path); }

void write_matrix_binary(const std::filesystem::path& path, const MatrixRecord& m) {
    const std::size_t n = m.grid.n_points;
    if (m.values.size() != n * n) throw InvalidArgument("matrix value count must be n*n");
    Header h = header_for(Grid(m.grid), true);
    h.flags |= flag_matrix;
    h.dims = 2;
    h.n1 = n;
    h.dx1 = m.time;
    h.x1 = 0.0;
    auto out = open_out(path, std::ios::binary);
    const auto buf = encode(h);
    out.write(reinterpret_cast<const char*>(buf.data()), header_bytes);
    write_doubles(out, reinterpret_cast<const double*>(m.values.data()), 2 * n * n);
    if (!out) throw IoError("write failed: " + path.string());
}

MatrixRecord read_matrix_binary(const std::filesystem::path& path) {
    auto [h, in] = open_binary(path);
    if (!(h.flags & flag_matrix) || !(h.flags & flag_complex) || h.n0 != h.n1)
        throw IoError(path.string() + ": not a two-argument matrix file");
    MatrixRecord m;
    m.grid = Grid1D(h.n0, h.x0, h.dx0, (h.flags & flag_dirichlet0) ? Boundary::dirichlet : Boundary::periodic);
    m.time = h.dx1;
    m.values.resize(h.n0 * h.n0);
    read_doubles(in, reinterpret_cast<double*>(m.values.data()), 2 * h.n0 * h.n0);
    if (!in) throw IoError(path.string() + ": truncated payload");
    return m;
}

void write_csv(const std::filesystem::path& path, const RealField& f) { write_field_csv(path, f); }
void write_csv(const std::filesystem::path& path, const ComplexField& f) { write_field_csv(path, f); }
RealField read_real_csv(const std::filesystem::path& path) { return read_field_csv<double>(path); }
ComplexField read_complex_csv(const std::filesystem::path& path) { return read_field_csv<complex>(path); }

}  // namespace qfd::io
