#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace qcd {

/// Stopping rule configuration.
struct DetectorSpec {
    enum class Kind {
        /// W_n = max(W_{n-1}, 0) + LLR_n, stop at the first n > w with W_n >= b.
        WindowedCusum,
        /// R_n = (R_{n-1} + 1) * exp(LLR_n), stop at the first n > w with log R_n >= b.
        ShiryaevRoberts,
        /// Stop when the greedy policy's running per-channel LLR reaches b.
        GreedySingleChannel,
    };

    Kind kind = Kind::WindowedCusum;
    double threshold_b = 1.0;
    std::uint64_t w = 0;
};

/// Running statistics of one episode. W and R start at 0 and 1 at time w.
struct DetectorState {
    double W = 0.0;
    double R = 1.0;
    bool sr_saturated = false;
    std::optional<std::uint64_t> stopped_at;
};

class DetectorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string detector_kind_name(DetectorSpec::Kind kind);

/// Throws std::domain_error unless threshold_b > 0 and finite.
void validate_detector(const DetectorSpec& spec);

/// CuSum recursion. `llr` must be computed with the current estimate, which
/// uses data up to n-1 only. Non-finite llr throws DetectorError.
double cusum_step(DetectorState& state, double llr);

/// Shiryaev-Roberts recursion in linear space. Values beyond
/// kSrSaturation (or a non-finite ratio) clamp to kSrSaturation and set
/// sr_saturated.
double sr_step(DetectorState& state, double likelihood_ratio);

inline constexpr double kSrSaturation = 1e300;

/// Whether the episode stops at time n. For GreedySingleChannel, state.W
/// carries the greedy running sum.
bool should_stop(const DetectorSpec& spec, const DetectorState& state, std::uint64_t n);

/// b = log(gamma) guarantees a mean time to false alarm of at least gamma.
/// Throws std::domain_error for gamma <= 1.
double threshold_for_mtfa(double gamma);

}  // namespace qcd
