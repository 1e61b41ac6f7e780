#pragma once

#include <string>
#include <vector>

#include "turbmit/image.hpp"

namespace turbmit {

/// Reads a binary PGM (P5, 8- or 16-bit) or PPM (P6, converted to Rec.601
/// luminance) into [0,1].
Image read_raster(const std::string& path);

/// Writes a binary PGM. 16-bit output (the default) round-trips losslessly:
/// write then read reproduces the written samples bit-exactly.
void write_pgm(const Image& img, const std::string& path, int bits = 16);

/// Frame path "<prefix>_00042.pgm" under `dir`.
std::string frame_path(const std::string& dir, const std::string& prefix, int index);

/// Reads frames <prefix>_00000.pgm, <prefix>_00001.pgm, ... until the first
/// missing index. Mixed frame sizes abort naming the offending index.
std::vector<Image> read_sequence(const std::string& dir, const std::string& prefix);

void write_sequence(const std::vector<Image>& seq, const std::string& dir, const std::string& prefix,
                    int bits = 16);

}  // namespace turbmit
