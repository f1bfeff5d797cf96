#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "redraw/datasetgen/region.hpp"
#include "redraw/image.hpp"
#include "redraw/png_io.hpp"

namespace redraw::data {

/// One standardized crop with its labels. `region` is the detail box in crop coordinates.
struct Patch {
    std::string id;
    RasterImage image;
    std::string production;
    std::string design;
    DetailLabel detail = DetailLabel::high;
    Box region;
};

struct Corpus {
    std::vector<Patch> patches;

    std::size_t size() const { return patches.size(); }
    std::set<std::string> productions() const {
        std::set<std::string> s;
        for (const auto& p : patches) s.insert(p.production);
        return s;
    }
    std::set<std::string> designs() const {
        std::set<std::string> s;
        for (const auto& p : patches) s.insert(p.design);
        return s;
    }
};

inline constexpr const char* kLabelIndexName = "labels.tsv";
inline constexpr const char* kLabelIndexHeader = "id\tpath\tproduction\tdesign\tdetail\tx\ty\tw\th";

inline void check_label_field(const std::string& s, const char* what) {
    if (s.empty() || s.find_first_of("\t\n\r") != std::string::npos)
        throw ValidationError(std::string(what) + " must be non-empty and free of tabs/newlines");
}

/// Writes patches/<id>.png and the tab-separated label index under `root`.
inline void save_corpus(const Corpus& corpus, const std::filesystem::path& root) {
    for (const auto& p : corpus.patches) {
        check_label_field(p.id, "patch id");
        check_label_field(p.production, "production id");
        check_label_field(p.design, "design id");
    }
    std::error_code ec;
    std::filesystem::create_directories(root / "patches", ec);
    if (ec) throw IoError("cannot create corpus directory " + (root / "patches").string() + ": " + ec.message());
    std::ofstream idx(root / kLabelIndexName, std::ios::binary);
    if (!idx) throw IoError("cannot write " + (root / kLabelIndexName).string());
    idx << kLabelIndexHeader << '\n';
    for (const auto& p : corpus.patches) {
        const std::string rel = "patches/" + p.id + ".png";
        write_png((root / rel).string(), p.image);
        idx << p.id << '\t' << rel << '\t' << p.production << '\t' << p.design << '\t' << to_string(p.detail) << '\t'
            << p.region.x << '\t' << p.region.y << '\t' << p.region.w << '\t' << p.region.h << '\n';
    }
    if (!idx) throw IoError("failed writing label index");
}

inline Corpus load_corpus(const std::filesystem::path& root) {
    const auto index_path = root / kLabelIndexName;
    std::ifstream in(index_path);
    if (!in) throw IoError("cannot open label index " + index_path.string());
    Corpus corpus;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != kLabelIndexHeader) throw FormatError("unexpected label index header", lineno);
            continue;
        }
        const auto f = detail::split(line, '\t');
        if (f.size() != 9) throw FormatError("expected 9 fields, found " + std::to_string(f.size()), lineno);
        Patch p;
        p.id = f[0];
        p.production = f[2];
        p.design = f[3];
        try {
            p.detail = parse_detail(f[4]);
        } catch (const ValidationError& e) {
            throw FormatError(e.what(), lineno);
        }
        p.region = Box{detail::parse_int(f[5], "x", lineno), detail::parse_int(f[6], "y", lineno), detail::parse_int(f[7], "w", lineno),
                       detail::parse_int(f[8], "h", lineno)};
        p.image = read_png((root / f[1]).string());
        if (!p.region.inside(p.image.width(), p.image.height())) throw FormatError("region box outside patch", lineno);
        corpus.patches.push_back(std::move(p));
    }
    return corpus;
}

}  // namespace redraw::data
