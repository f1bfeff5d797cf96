#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "redraw/nn/layers.hpp"

// Binary container, little-endian:
//   "RDRWWTS1"                      8-byte magic
//   u32 count
//   count x { u32 name_len, name bytes, i32 n, c, h, w, f64[n*c*h*w] values }

namespace redraw::nn {

struct ModelWeights {
    std::vector<std::pair<std::string, Tensor>> entries;
};

inline ModelWeights export_weights(const ParameterSet& ps) {
    ModelWeights mw;
    for (const auto& p : ps.entries()) mw.entries.emplace_back(p.name, p.var.value());
    return mw;
}

/// Copies weights into `ps`; names, order and shapes must all agree.
inline void import_weights(const ParameterSet& ps, const ModelWeights& mw) {
    const auto& entries = ps.entries();
    if (entries.size() != mw.entries.size())
        throw FormatError("weights: expected " + std::to_string(entries.size()) + " parameters, found " +
                          std::to_string(mw.entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& [name, t] = mw.entries[i];
        if (name != entries[i].name) throw FormatError("weights: expected parameter '" + entries[i].name + "', found '" + name + "'");
        if (t.shape() != entries[i].var.shape())
            throw FormatError("weights: shape mismatch for '" + name + "': " + t.shape().str() + " vs " + entries[i].var.shape().str());
    }
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].var.mutable_value() = mw.entries[i].second;
}

namespace detail {
inline constexpr char kWeightsMagic[8] = {'R', 'D', 'R', 'W', 'W', 'T', 'S', '1'};

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T take(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("weights: truncated file");
    return v;
}
}  // namespace detail

inline void save_weights(const std::string& path, const ModelWeights& mw) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write weights '" + path + "'");
    os.write(detail::kWeightsMagic, sizeof detail::kWeightsMagic);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(mw.entries.size()));
    for (const auto& [name, t] : mw.entries) {
        detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Shape s = t.shape();
        for (int d : {s.n, s.c, s.h, s.w}) detail::put<std::int32_t>(os, d);
        os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os) throw IoError("failed writing weights '" + path + "'");
}

inline ModelWeights load_weights(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read weights '" + path + "'");
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, detail::kWeightsMagic, 8) != 0)
        throw FormatError("weights: bad magic in '" + path + "'");
    ModelWeights mw;
    const auto count = detail::take<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = detail::take<std::uint32_t>(is);
        if (len > 4096) throw FormatError("weights: implausible name length");
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw FormatError("weights: truncated file");
        Shape s;
        s.n = detail::take<std::int32_t>(is);
        s.c = detail::take<std::int32_t>(is);
        s.h = detail::take<std::int32_t>(is);
        s.w = detail::take<std::int32_t>(is);
        if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0) throw FormatError("weights: bad shape for '" + name + "'");
        Tensor t(s);
        if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double))))
            throw FormatError("weights: truncated data for '" + name + "'");
        mw.entries.emplace_back(std::move(name), std::move(t));
    }
    return mw;
}

}  // namespace redraw::nn
