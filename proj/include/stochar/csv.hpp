#pragma once

// CSV emission. Numbers are written with 17 significant digits so that a
// dump round-trips every double exactly.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

#include "stochar/error.hpp"
#include "stochar/process.hpp"

namespace stochar::csv {

inline std::string number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc{})
        return "nan";
    return std::string(buf, end);
}

/// `t,W,S` with S left empty unless the path is geometric.
inline void write_path(std::ostream& out, const NoisePath& path) {
    out << "t,W,S\n";
    const bool geometric = path.kind() == NoiseKind::geometric_brownian;
    for (std::size_t i = 0; i < path.size(); ++i) {
        out << number(path.grid()[i]) << ',' << number(path.brownian(i)) << ',';
        if (geometric)
            out << number(path[i]);
        out << '\n';
    }
}

/// Writes `content` to a sibling temporary file, then renames it over `target`.
inline void write_atomic(const std::filesystem::path& target, const std::string& content) {
    namespace fs = std::filesystem;
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out)
            throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec)
        throw Error("cannot rename " + tmp.string() + ": " + ec.message());
}

} // namespace stochar::csv
