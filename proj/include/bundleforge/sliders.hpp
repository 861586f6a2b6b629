#ifndef BUNDLEFORGE_SLIDERS_HPP
#define BUNDLEFORGE_SLIDERS_HPP

#include "bundleforge/core_model.hpp"

namespace bundleforge {

inline constexpr int kSliderMin = -100;
inline constexpr int kSliderMax = 100;

/// Slider geometry for one feature: the neutral interval sits at position 0,
/// position -100 anchors lb = 0 and +100 anchors ub = mx.
struct SliderConfig {
    double neutral_lb = 0.0;
    double neutral_ub = 0.0;
    double mx = 0.0;
    double alpha = 0.1;

    void validate() const;
};

struct SliderState {
    int gamma = 0;
    Interval effective_bounds;
    /// Set when no position subsumed the feasible bounds and the nearest one was used.
    bool snap_fallback = false;
};

/// Interval width at distance x from neutral: exp(-alpha * x / 100) * neutral width.
double width_at(int x, const SliderConfig& config);

Interval bounds_at(int gamma, const SliderConfig& config);

struct SnapResult {
    int gamma = 0;
    bool subsumes = true;
};

/// Position whose interval subsumes `feasible` at minimum L1 endpoint
/// distance; ties prefer |gamma| smaller, then the smaller gamma. Without a
/// subsuming position, the nearest position is returned with subsumes = false.
SnapResult snap(const Interval& feasible, const SliderConfig& config);

inline int snap_to_position(const Interval& feasible, const SliderConfig& config) {
    return snap(feasible, config).gamma;
}

const char* slider_label(int gamma);  // labels for -100/-50/0/50/100, "" elsewhere

}  // namespace bundleforge

#endif  // BUNDLEFORGE_SLIDERS_HPP
