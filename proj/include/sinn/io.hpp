#ifndef SINN_IO_HPP
#define SINN_IO_HPP

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sinn/ensemble.hpp"
#include "sinn/errors.hpp"

namespace sinn {

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << content;
    if (!os) throw IoError("write failed: " + path);
}

// Binary ensemble container: magic "SINE", version u32, batch/time/dim u64,
// dt f64, then little-endian f64 samples in (trajectory, time, component)
// order.
inline constexpr std::uint32_t kEnsembleVersion = 1;

inline void save_ensemble(const std::string& path, const Ensemble& e) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write("SINE", 4);
    const std::uint32_t version = kEnsembleVersion;
    os.write(reinterpret_cast<const char*>(&version), sizeof version);
    const std::uint64_t dims[3] = {e.batch, e.time, e.dim};
    os.write(reinterpret_cast<const char*>(dims), sizeof dims);
    os.write(reinterpret_cast<const char*>(&e.dt), sizeof e.dt);
    os.write(reinterpret_cast<const char*>(e.data.data()),
             static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    if (!os) throw IoError("ensemble write failed: " + path);
}

inline Ensemble load_ensemble(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SINE", 4) != 0)
        throw FormatError("ensemble magic bytes are not SINE: " + path);
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof version);
    if (!is || version != kEnsembleVersion)
        throw FormatError("unsupported ensemble version in " + path);
    std::uint64_t dims[3] = {};
    is.read(reinterpret_cast<char*>(dims), sizeof dims);
    double dt = 0;
    is.read(reinterpret_cast<char*>(&dt), sizeof dt);
    if (!is) throw FormatError("ensemble header truncated: " + path);
    Ensemble e(dims[0], dims[1], dims[2], dt);
    is.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    if (!is) throw FormatError("ensemble data truncated: " + path);
    return e;
}

// CSV interchange form: a single header row carrying dt and shape, then one
// row per time index with one column block per trajectory.
inline std::string ensemble_to_csv(const Ensemble& e) {
    std::ostringstream out;
    out.precision(17);
    out << "dt=" << e.dt << ",batch=" << e.batch << ",time=" << e.time << ",dim=" << e.dim
        << "\n";
    for (std::size_t t = 0; t < e.time; ++t) {
        for (std::size_t i = 0; i < e.batch; ++i)
            for (std::size_t k = 0; k < e.dim; ++k) {
                if (i + k > 0) out << ',';
                out << e.at(i, t, k);
            }
        out << "\n";
    }
    return out.str();
}

inline Ensemble ensemble_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("ensemble csv: empty input");
    double dt = 0;
    std::size_t batch = 0, time = 0, dim = 0;
    {
        std::istringstream hdr(line);
        std::string field;
        while (std::getline(hdr, field, ',')) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw FormatError("ensemble csv: bad header field");
            const std::string key = field.substr(0, eq);
            const std::string val = field.substr(eq + 1);
            if (key == "dt")
                dt = std::stod(val);
            else if (key == "batch")
                batch = std::stoul(val);
            else if (key == "time")
                time = std::stoul(val);
            else if (key == "dim")
                dim = std::stoul(val);
            else
                throw FormatError("ensemble csv: unknown header key " + key);
        }
    }
    if (batch < 1 || time < 1 || dim < 1 || !(dt > 0))
        throw FormatError("ensemble csv: incomplete header");
    Ensemble e(batch, time, dim, dt);
    for (std::size_t t = 0; t < time; ++t) {
        if (!std::getline(in, line)) throw FormatError("ensemble csv: missing rows");
        std::istringstream row(line);
        std::string cell;
        for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t k = 0; k < dim; ++k) {
                if (!std::getline(row, cell, ','))
                    throw FormatError("ensemble csv: short row");
                e.at(i, t, k) = std::stod(cell);
            }
    }
    return e;
}

} // namespace sinn

#endif
