#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "redraw/error.hpp"
#include "redraw/image.hpp"
#include "redraw/png_io.hpp"

namespace redraw::data {

enum class DetailLabel { low, high, discarded };

inline const char* to_string(DetailLabel d) {
    switch (d) {
        case DetailLabel::low: return "low";
        case DetailLabel::high: return "high";
        default: return "discarded";
    }
}

inline DetailLabel parse_detail(std::string_view s) {
    if (s == "low") return DetailLabel::low;
    if (s == "high") return DetailLabel::high;
    if (s == "discarded") return DetailLabel::discarded;
    throw ValidationError("unknown detail label '" + std::string(s) + "'");
}

enum class RegionKind { face, eye };

struct AnnotatedRegion {
    std::string frame_ref;  // as written in the manifest, relative to its directory
    Box box;
    RegionKind kind = RegionKind::eye;
    std::string production_id;
    std::optional<std::string> design_id;
    int line = 0;
};

struct LodThresholds {
    double low_below = 0.0031;
    double high_above = 0.0048;
};

/// Detail level from the fraction of the frame the region covers.
inline DetailLabel lod_split(const AnnotatedRegion& region, long long frame_area, LodThresholds t = {}) {
    if (frame_area <= 0) throw ValidationError("lod_split: frame area must be positive");
    const double ratio = static_cast<double>(region.box.area()) / static_cast<double>(frame_area);
    if (ratio < t.low_below) return DetailLabel::low;
    if (ratio > t.high_above) return DetailLabel::high;
    return DetailLabel::discarded;
}

struct ManifestReport {
    std::vector<AnnotatedRegion> regions;
    std::vector<std::string> diagnostics;  // rejected rows, "line N: reason"
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        std::string field = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

inline int parse_int(const std::string& s, const char* what, int line) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError(std::string(what) + " is not an integer: '" + s + "'", line);
    return v;
}

}  // namespace detail

/// Reads a comma-separated manifest: frame, x, y, w, h, kind, production[, design].
/// Blank lines and lines starting with '#' are skipped, as is a leading header row.
/// Frames are resolved against the manifest's directory and read once to check bounds.
inline ManifestReport ingest_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    const std::filesystem::path root = path.parent_path();

    ManifestReport report;
    std::map<std::string, std::optional<std::pair<int, int>>> frame_dims;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t\r")] == '#') continue;
        auto f = detail::split(line, ',');
        if (lineno == 1 && !f.empty() && f[0] == "frame") continue;
        if (f.size() != 7 && f.size() != 8)
            throw FormatError("expected 7 or 8 fields, found " + std::to_string(f.size()), lineno);

        AnnotatedRegion r;
        r.line = lineno;
        r.frame_ref = f[0];
        r.box = Box{detail::parse_int(f[1], "x", lineno), detail::parse_int(f[2], "y", lineno),
                    detail::parse_int(f[3], "w", lineno), detail::parse_int(f[4], "h", lineno)};
        if (f[5] == "eye")
            r.kind = RegionKind::eye;
        else if (f[5] == "face")
            r.kind = RegionKind::face;
        else
            throw FormatError("kind must be 'face' or 'eye', found '" + f[5] + "'", lineno);
        if (f[6].empty()) throw FormatError("empty production id", lineno);
        r.production_id = f[6];
        if (f.size() == 8 && !f[7].empty()) r.design_id = f[7];
        if (r.frame_ref.empty()) throw FormatError("empty frame path", lineno);

        auto it = frame_dims.find(r.frame_ref);
        if (it == frame_dims.end()) {
            std::optional<std::pair<int, int>> dims;
            const auto fp = root / r.frame_ref;
            if (std::filesystem::exists(fp)) {
                try {
                    const RasterImage img = read_png(fp.string());
                    dims = std::pair{img.width(), img.height()};
                } catch (const Error&) {
                }
            }
            it = frame_dims.emplace(r.frame_ref, dims).first;
        }
        if (!it->second) {
            report.diagnostics.push_back("line " + std::to_string(lineno) + ": missing or unreadable frame '" + r.frame_ref + "'");
            continue;
        }
        const auto [fw, fh] = *it->second;
        if (!r.box.inside(fw, fh)) {
            report.diagnostics.push_back("line " + std::to_string(lineno) + ": box outside frame bounds " + std::to_string(fw) + "x" +
                                         std::to_string(fh));
            continue;
        }
        report.regions.push_back(std::move(r));
    }
    return report;
}

}  // namespace redraw::data
