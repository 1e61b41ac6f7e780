#include "turbmit/pgm_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace turbmit {

namespace {

// Skips whitespace and '#' comment lines in the PNM header.
int next_header_int(std::istream& in, const std::string& path) {
    int c = in.get();
    for (;;) {
        while (c != EOF && std::isspace(c)) c = in.get();
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else {
            break;
        }
    }
    require(c != EOF && std::isdigit(c), "read_raster: malformed header in " + path);
    int v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = in.get();
    }
    return v;
}

}  // namespace

Image read_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_raster: cannot open " + path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    require(m0 == 'P' && (m1 == '5' || m1 == '6'), "read_raster: unsupported format in " + path);
    const bool color = m1 == '6';
    const int w = next_header_int(in, path);
    const int h = next_header_int(in, path);
    const int maxval = next_header_int(in, path);
    require(w > 0 && h > 0, "read_raster: bad dimensions in " + path);
    require(maxval > 0 && maxval < 65536, "read_raster: bad maxval in " + path);
    const bool wide = maxval > 255;
    const int channels = color ? 3 : 1;
    const size_t count = static_cast<size_t>(w) * h * channels;
    std::vector<unsigned char> raw(count * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(in.gcount() == static_cast<std::streamsize>(raw.size()), "read_raster: truncated pixel data in " + path);

    Image img(w, h);
    const double inv = 1.0 / maxval;
    size_t pos = 0;
    auto next_sample = [&]() {
        if (wide) {
            const int v = (raw[pos] << 8) | raw[pos + 1];  // PGM 16-bit is big-endian
            pos += 2;
            return v;
        }
        return static_cast<int>(raw[pos++]);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (color) {
                const int r = next_sample(), g = next_sample(), b = next_sample();
                img(x, y) = (0.299 * r + 0.587 * g + 0.114 * b) * inv;
            } else {
                img(x, y) = next_sample() * inv;
            }
        }
    }
    return img;
}

void write_pgm(const Image& img, const std::string& path, int bits) {
    require(bits == 8 || bits == 16, "write_pgm: bits must be 8 or 16");
    require(img.width() > 0 && img.height() > 0, "write_pgm: empty image");
    const int maxval = bits == 8 ? 255 : 65535;
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_pgm: cannot open " + path);
    out << "P5\n" << img.width() << " " << img.height() << "\n" << maxval << "\n";
    std::vector<unsigned char> raw;
    raw.reserve(img.size() * (bits == 16 ? 2 : 1));
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double v = std::clamp(img(x, y), 0.0, 1.0);
            const int q = static_cast<int>(std::lround(v * maxval));
            if (bits == 16) {
                raw.push_back(static_cast<unsigned char>((q >> 8) & 0xff));
                raw.push_back(static_cast<unsigned char>(q & 0xff));
            } else {
                raw.push_back(static_cast<unsigned char>(q));
            }
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(out.good(), "write_pgm: write failed for " + path);
}

std::string frame_path(const std::string& dir, const std::string& prefix, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_%05d.pgm", index);
    return (std::filesystem::path(dir) / (prefix + buf)).string();
}

std::vector<Image> read_sequence(const std::string& dir, const std::string& prefix) {
    std::vector<Image> seq;
    for (int i = 0;; ++i) {
        const std::string path = frame_path(dir, prefix, i);
        if (!std::filesystem::exists(path)) break;
        Image img = read_raster(path);
        if (!seq.empty() && !img.same_size(seq.front()))
            throw std::runtime_error("read_sequence: frame size mismatch at index " + std::to_string(i) + " (" + path + ")");
        seq.push_back(std::move(img));
    }
    require(!seq.empty(), "read_sequence: no frames found for prefix '" + prefix + "' in " + dir);
    return seq;
}

void write_sequence(const std::vector<Image>& seq, const std::string& dir, const std::string& prefix, int bits) {
    require(!seq.empty(), "write_sequence: empty sequence");
    std::filesystem::create_directories(dir);
    for (size_t i = 0; i < seq.size(); ++i) write_pgm(seq[i], frame_path(dir, prefix, static_cast<int>(i)), bits);
}

}  // namespace turbmit
