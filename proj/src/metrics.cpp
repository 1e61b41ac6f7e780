#include "turbmit/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

#include "turbmit/lucky.hpp"

namespace turbmit {

double psnr(const Image& a, const Image& b) {
    require(a.same_size(b), "psnr: dimension mismatch");
    const double mse = sum_squared_diff(a, b) / a.size();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

std::vector<double> normalized_gradient(const std::vector<Image>& seq) {
    require(!seq.empty(), "normalized_gradient: empty sequence");
    std::vector<double> totals(seq.size());
    double mx = 0.0;
    for (size_t t = 0; t < seq.size(); ++t) {
        totals[t] = sharpness_score(seq[t]);
        mx = std::max(mx, totals[t]);
    }
    if (mx == 0.0) {
        std::cerr << "normalized_gradient: all-constant sequence, returning zeros\n";
        return std::vector<double>(seq.size(), 0.0);
    }
    for (double& v : totals) v /= mx;
    return totals;
}

double bar_pattern_dynamic_range(const Image& frame, const std::vector<int>& bar_rows, int gap_px) {
    require(bar_rows.size() >= 2, "bar_pattern_dynamic_range: need two bar rows");
    require(gap_px >= 1, "bar_pattern_dynamic_range: gap must be >= 1");
    const int r0 = *std::min_element(bar_rows.begin(), bar_rows.end());
    const int r1 = *std::max_element(bar_rows.begin(), bar_rows.end());
    require(r0 >= 0 && r1 < frame.height(), "bar_pattern_dynamic_range: rows outside frame");
    double acc = 0.0;
    for (int x = 0; x < frame.width(); ++x) {
        double peak = 0.0;
        for (int r : bar_rows) peak = std::max(peak, frame(x, r));
        double valley = std::numeric_limits<double>::infinity();
        for (int y = r0 + 1; y < r1; ++y) valley = std::min(valley, frame(x, y));
        if (!std::isfinite(valley)) valley = peak;  // bars touch, no gap band
        acc += std::max(peak - valley, 0.0);
    }
    return acc / frame.width();
}

void write_metric_records(const MetricReport& report, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "write_metric_records: cannot open " + path);
    out.precision(10);
    for (size_t i = 0; i < report.psnr_db.size(); ++i) {
        const double ng = i < report.normalized_gradient.size() ? report.normalized_gradient[i] : 0.0;
        out << i << " " << report.psnr_db[i] << " " << ng << "\n";
    }
    require(out.good(), "write_metric_records: write failed");
}

}  // namespace turbmit
