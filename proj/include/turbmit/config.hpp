#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "turbmit/deconv.hpp"
#include "turbmit/flow.hpp"
#include "turbmit/lucky.hpp"
#include "turbmit/optics.hpp"
#include "turbmit/psf_prior.hpp"
#include "turbmit/reference.hpp"
#include "turbmit/simulate.hpp"

namespace turbmit {

struct CalibrateOptions {
    std::vector<double> dr0_list{1.0, 2.0, 3.0, 4.0};
    int trials = 100;
    BetaSweepOptions sweep;
};

/// Every knob of the pipeline in one place. Parsed from JSON text with
/// strict validation: unknown keys, wrong types and out-of-range values are
/// rejected with the offending path in the message.
struct PipelineConfig {
    uint64_t seed = 1234;
    int threads = 4;
    OpticsParams optics;
    double dr0 = -1.0;  // > 0 overrides optics.cn2 at load time
    int frames = 100;
    SimulateOptions simulate;
    PatchWindowConfig reference;
    FlowOptions flow;
    bool flow_dump = false;
    LuckyConfig lucky;
    DeconvConfig deconv;
    TrainOptions train;
    CalibrateOptions calibrate;

    /// Optics with the dr0 override applied (when set).
    OpticsParams resolved_optics() const;
    double resolved_dr0() const;
    void validate() const;
};

PipelineConfig default_config();
PipelineConfig parse_config_text(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
std::string dump_config(const PipelineConfig& cfg);

}  // namespace turbmit
