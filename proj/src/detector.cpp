#include "qcd/detector.hpp"

#include <algorithm>
#include <cmath>

namespace qcd {

std::string detector_kind_name(DetectorSpec::Kind kind) {
    switch (kind) {
        case DetectorSpec::Kind::WindowedCusum: return "windowed_cusum";
        case DetectorSpec::Kind::ShiryaevRoberts: return "shiryaev_roberts";
        case DetectorSpec::Kind::GreedySingleChannel: return "greedy_single_channel";
    }
    return "unknown";
}

void validate_detector(const DetectorSpec& spec) {
    if (!(spec.threshold_b > 0.0) || !std::isfinite(spec.threshold_b))
        throw std::domain_error("detector threshold b must be positive and finite");
}

double cusum_step(DetectorState& state, double llr) {
    if (!std::isfinite(llr)) throw DetectorError("non-finite log-likelihood ratio (density support violation)");
    state.W = std::max(state.W, 0.0) + llr;
    return state.W;
}

double sr_step(DetectorState& state, double likelihood_ratio) {
    const double next = (state.R + 1.0) * likelihood_ratio;
    if (!std::isfinite(next) || next > kSrSaturation) {
        state.R = kSrSaturation;
        state.sr_saturated = true;
    } else {
        state.R = next;
    }
    return state.R;
}

bool should_stop(const DetectorSpec& spec, const DetectorState& state, std::uint64_t n) {
    switch (spec.kind) {
        case DetectorSpec::Kind::WindowedCusum: return n > spec.w && state.W >= spec.threshold_b;
        case DetectorSpec::Kind::ShiryaevRoberts: return n > spec.w && std::log(state.R) >= spec.threshold_b;
        case DetectorSpec::Kind::GreedySingleChannel: return state.W >= spec.threshold_b;
    }
    return false;
}

double threshold_for_mtfa(double gamma) {
    if (!(gamma > 1.0)) throw std::domain_error("threshold_for_mtfa: gamma must exceed 1");
    return std::log(gamma);
}

}  // namespace qcd
