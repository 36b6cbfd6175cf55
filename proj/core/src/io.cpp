#include "segfuse/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace segfuse {

namespace fs = std::filesystem;

namespace {

struct GrayMap {
    int width = 0;
    int height = 0;
    int maxval = 0;
    std::vector<int> values;
};

// Reads one whitespace-delimited token, skipping '#' comments, from a PGM
// header region.
std::string next_token(std::istream& in, const std::string& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw IoError(path + ": unexpected end of file in header");
    return tok;
}

int parse_int(const std::string& tok, const std::string& path, const char* what) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw IoError(path + ": malformed " + what + " '" + tok + "'");
    }
}

GrayMap read_graymap(const std::string& path, const std::string& content) {
    std::istringstream in(content);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    const bool binary = magic[1] == '5';
    GrayMap g;
    g.width = parse_int(next_token(in, path), path, "width");
    g.height = parse_int(next_token(in, path), path, "height");
    g.maxval = parse_int(next_token(in, path), path, "maxval");
    if (g.width <= 0 || g.height <= 0)
        throw IoError(path + ": non-positive dimensions in header");
    if (g.maxval <= 0 || g.maxval > 65535)
        throw IoError(path + ": maxval out of range [1, 65535]");
    const std::int64_t n = static_cast<std::int64_t>(g.width) * g.height;
    g.values.reserve(static_cast<std::size_t>(n));
    if (binary) {
        // raw samples; 2-byte big-endian when maxval > 255. next_token already
        // consumed the single whitespace separator after maxval.
        const int bytes = g.maxval > 255 ? 2 : 1;
        const std::streampos pos = in.tellg();
        if (pos < 0) throw IoError(path + ": truncated binary graymap");
        const std::size_t offset = static_cast<std::size_t>(pos);
        if (content.size() < offset ||
            content.size() - offset < static_cast<std::size_t>(n) * bytes)
            throw IoError(path + ": truncated binary graymap");
        for (std::int64_t i = 0; i < n; ++i) {
            const unsigned char hi = static_cast<unsigned char>(content[offset + i * bytes]);
            int v = hi;
            if (bytes == 2) {
                const unsigned char lo = static_cast<unsigned char>(content[offset + i * bytes + 1]);
                v = (v << 8) | lo;
            }
            g.values.push_back(v);
        }
    } else {
        for (std::int64_t i = 0; i < n; ++i)
            g.values.push_back(parse_int(next_token(in, path), path, "sample"));
    }
    for (int v : g.values)
        if (v < 0 || v > g.maxval)
            throw IoError(path + ": sample " + std::to_string(v) + " exceeds maxval");
    return g;
}

GrayMap read_csv_grid(const std::string& path, const std::string& content) {
    GrayMap g;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c))) stripped.push_back(c);
        if (stripped.empty()) continue;
        std::vector<int> row;
        std::stringstream ls(stripped);
        std::string cell;
        while (std::getline(ls, cell, ','))
            row.push_back(parse_int(cell, path + ":" + std::to_string(lineno), "cell"));
        if (g.width == 0) g.width = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != g.width)
            throw IoError(path + ":" + std::to_string(lineno) + ": inconsistent row length");
        g.values.insert(g.values.end(), row.begin(), row.end());
        ++g.height;
    }
    if (g.values.empty()) throw IoError(path + ": empty CSV grid");
    g.maxval = *std::max_element(g.values.begin(), g.values.end());
    return g;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

GrayMap read_gray_any(const std::string& path) {
    const std::string content = slurp(path);
    if (content.size() >= 2 && content[0] == 'P' && (content[1] == '2' || content[1] == '5'))
        return read_graymap(path, content);
    return read_csv_grid(path, content);
}

void write_p2(const GrayMap& g, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open for writing");
    f << "P2\n" << g.width << " " << g.height << "\n" << g.maxval << "\n";
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            if (x) f << ' ';
            f << g.values[static_cast<std::size_t>(y) * g.width + x];
        }
        f << '\n';
    }
    if (!f) throw IoError(path + ": write failed");
}

void write_p5(const GrayMap& g, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open for writing");
    f << "P5\n" << g.width << " " << g.height << "\n" << g.maxval << "\n";
    const int bytes = g.maxval > 255 ? 2 : 1;
    std::string buf;
    buf.reserve(g.values.size() * bytes);
    for (int v : g.values) {
        if (bytes == 2) buf.push_back(static_cast<char>((v >> 8) & 0xff));
        buf.push_back(static_cast<char>(v & 0xff));
    }
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw IoError(path + ": write failed");
}

void write_csv(const GrayMap& g, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open for writing");
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            if (x) f << ',';
            f << g.values[static_cast<std::size_t>(y) * g.width + x];
        }
        f << '\n';
    }
    if (!f) throw IoError(path + ": write failed");
}

}  // namespace

Segmentation densify_labels(const std::vector<int>& raw, int width, int height,
                            std::vector<int>* original_values) {
    std::map<int, int> dense;  // sorted distinct original -> dense rank
    for (int v : raw) dense.emplace(v, 0);
    int next = 0;
    for (auto& [orig, idx] : dense) idx = next++;
    Segmentation s;
    s.width = width;
    s.height = height;
    s.num_labels = next;
    s.labels.reserve(raw.size());
    for (int v : raw) s.labels.push_back(dense.at(v));
    if (original_values) {
        original_values->assign(next, 0);
        for (const auto& [orig, idx] : dense) (*original_values)[idx] = orig;
    }
    validate(s);
    return s;
}

LabelMapData read_label_map(const std::string& path) {
    const GrayMap g = read_gray_any(path);
    LabelMapData data;
    data.seg = densify_labels(g.values, g.width, g.height, &data.original_values);
    return data;
}

void write_label_map(const Segmentation& s, const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    write_label_map(s, path, ext == ".csv" ? LabelMapFormat::CSV : LabelMapFormat::P2);
}

void write_label_map(const Segmentation& s, const std::string& path, LabelMapFormat format) {
    validate(s);
    GrayMap g;
    g.width = s.width;
    g.height = s.height;
    g.values = s.labels;
    g.maxval = std::max(1, s.num_labels - 1);
    if (g.maxval > 65535) throw IoError(path + ": label overflow (more than 65536 labels)");
    switch (format) {
        case LabelMapFormat::P2: write_p2(g, path); break;
        case LabelMapFormat::P5: write_p5(g, path); break;
        case LabelMapFormat::CSV: write_csv(g, path); break;
    }
}

void write_mapping_sidecar(const LabelMapData& data, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open for writing");
    f << "# original dense\n";
    for (std::size_t dense = 0; dense < data.original_values.size(); ++dense)
        f << data.original_values[dense] << " " << dense << "\n";
    if (!f) throw IoError(path + ": write failed");
}

ConstraintSet read_constraints(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open");
    ConstraintSet cons;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        long m, l;
        if (!(ls >> m >> l))
            throw IoError(path + ":" + std::to_string(lineno) + ": expected '<ML|CL> <m> <l>'");
        std::string extra;
        if (ls >> extra)
            throw IoError(path + ":" + std::to_string(lineno) + ": trailing data '" + extra + "'");
        if (m < 0 || l < 0)
            throw IoError(path + ":" + std::to_string(lineno) + ": negative pixel index");
        if (kind == "ML")
            cons.must_link.emplace_back(static_cast<int>(m), static_cast<int>(l));
        else if (kind == "CL")
            cons.cannot_link.emplace_back(static_cast<int>(m), static_cast<int>(l));
        else
            throw IoError(path + ":" + std::to_string(lineno) + ": unknown kind '" + kind + "'");
    }
    return close_constraints(cons);
}

void write_constraints(const ConstraintSet& cons, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError(path + ": cannot open for writing");
    for (const auto& [m, l] : cons.must_link) f << "ML " << m << " " << l << "\n";
    for (const auto& [m, l] : cons.cannot_link) f << "CL " << m << " " << l << "\n";
    if (!f) throw IoError(path + ": write failed");
}

MultiBandImage read_multiband(const std::string& manifest_path) {
    std::ifstream f(manifest_path, std::ios::binary);
    if (!f) throw IoError(manifest_path + ": cannot open");
    const fs::path base = fs::path(manifest_path).parent_path();
    MultiBandImage img;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
        line.erase(0, start);
        if (line.empty()) continue;
        const std::string band_path = (base / line).string();
        const GrayMap g = read_gray_any(band_path);
        if (img.bands.empty()) {
            img.width = g.width;
            img.height = g.height;
        } else if (g.width != img.width || g.height != img.height) {
            throw IoError(manifest_path + ":" + std::to_string(lineno) +
                          ": band dimensions disagree with previous bands");
        }
        std::vector<double> band(g.values.begin(), g.values.end());
        img.bands.push_back(std::move(band));
        img.band_names.push_back(line);
    }
    if (img.bands.empty()) throw IoError(manifest_path + ": manifest lists no bands");
    return img;
}

std::string write_multiband(const MultiBandImage& img, const std::string& dir,
                            const std::string& manifest_name) {
    validate(img);
    fs::create_directories(dir);
    const fs::path base(dir);
    std::vector<std::string> names;
    for (int j = 0; j < img.num_bands(); ++j) {
        GrayMap g;
        g.width = img.width;
        g.height = img.height;
        g.values.reserve(static_cast<std::size_t>(img.n()));
        int maxv = 1;
        for (double v : img.bands[j]) {
            const int iv = static_cast<int>(std::clamp(std::round(v), 0.0, 65535.0));
            maxv = std::max(maxv, iv);
            g.values.push_back(iv);
        }
        g.maxval = maxv;
        char name[32];
        std::snprintf(name, sizeof name, "band_%02d.pgm", j);
        write_p2(g, (base / name).string());
        names.emplace_back(name);
    }
    const std::string manifest = (base / manifest_name).string();
    std::ofstream f(manifest, std::ios::binary);
    if (!f) throw IoError(manifest + ": cannot open for writing");
    f << "# band rasters in order\n";
    for (const auto& n : names) f << n << "\n";
    if (!f) throw IoError(manifest + ": write failed");
    return manifest;
}

}  // namespace segfuse
