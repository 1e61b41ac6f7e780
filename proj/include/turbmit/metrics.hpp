#pragma once

#include <string>
#include <vector>

#include "turbmit/image.hpp"

namespace turbmit {

/// Peak signal-to-noise ratio with peak 1.0; +infinity for identical frames.
double psnr(const Image& a, const Image& b);

/// Per-frame l1 gradient totals normalized by the sequence maximum; the
/// sharpest frame maps to exactly 1. Returns all zeros (with a warning) for
/// an all-constant sequence.
std::vector<double> normalized_gradient(const std::vector<Image>& seq);

/// Peak-minus-valley of the vertical cross-section through the given bar
/// rows, averaged over the probe columns. `gap_px` is the bar separation and
/// bounds the valley search band between the bars.
double bar_pattern_dynamic_range(const Image& frame, const std::vector<int>& bar_rows, int gap_px);

struct MetricReport {
    std::vector<double> psnr_db;
    std::vector<double> normalized_gradient;
    double dynamic_range = 0.0;
};

/// One record per frame: "index psnr_db normalized_gradient".
void write_metric_records(const MetricReport& report, const std::string& path);

}  // namespace turbmit
