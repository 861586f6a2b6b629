#include "bundleforge/sliders.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace bundleforge {

void SliderConfig::validate() const {
    if (!(neutral_lb >= 0.0)) throw ArgumentError("slider neutral lower bound must be >= 0");
    if (!(neutral_lb <= neutral_ub)) throw ArgumentError("slider neutral interval is inverted");
    if (!(neutral_ub <= mx)) throw ArgumentError("slider neutral upper bound exceeds the feature maximum");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ArgumentError("slider alpha must be a finite value >= 0");
}

double width_at(int x, const SliderConfig& config) {
    return std::exp(-config.alpha * std::abs(x) / 100.0) * (config.neutral_ub - config.neutral_lb);
}

Interval bounds_at(int gamma, const SliderConfig& config) {
    if (gamma < kSliderMin || gamma > kSliderMax) {
        throw ArgumentError("slider position " + std::to_string(gamma) + " outside [-100, 100]");
    }
    const double mx = config.mx;
    Interval iv;
    if (gamma == 0) {
        iv = {config.neutral_lb, config.neutral_ub};
    } else if (gamma < 0) {
        const int x = -gamma;
        const double w = width_at(x, config);
        iv.lb = gamma == kSliderMin ? 0.0 : config.neutral_lb * (100.0 - x) / 100.0;
        iv.ub = iv.lb + w;
    } else {
        const int x = gamma;
        const double w = width_at(x, config);
        iv.ub = gamma == kSliderMax ? mx : config.neutral_ub + (mx - config.neutral_ub) * x / 100.0;
        iv.lb = iv.ub - w;
    }
    iv.lb = std::clamp(iv.lb, 0.0, mx);
    iv.ub = std::clamp(iv.ub, 0.0, mx);
    return iv;
}

SnapResult snap(const Interval& feasible, const SliderConfig& config) {
    constexpr double kTol = 1e-12;
    auto better = [](double d, int g, double best_d, int best_g) {
        if (d < best_d - kTol) return true;
        if (d > best_d + kTol) return false;
        if (std::abs(g) != std::abs(best_g)) return std::abs(g) < std::abs(best_g);
        return g < best_g;
    };
    int best_sub = 0, best_any = 0;
    double d_sub = INFINITY, d_any = INFINITY;
    bool found = false;
    for (int g = kSliderMin; g <= kSliderMax; ++g) {
        Interval iv = bounds_at(g, config);
        double d = std::abs(iv.lb - feasible.lb) + std::abs(iv.ub - feasible.ub);
        if (better(d, g, d_any, best_any)) {
            d_any = d;
            best_any = g;
        }
        if (iv.subsumes(feasible, kTol) && (!found || better(d, g, d_sub, best_sub))) {
            d_sub = d;
            best_sub = g;
            found = true;
        }
    }
    if (found) return {best_sub, true};
    return {best_any, false};
}

const char* slider_label(int gamma) {
    switch (gamma) {
        case -100: return "Very little";
        case -50: return "Less";
        case 0: return "Neutral";
        case 50: return "More";
        case 100: return "A lot";
        default: return "";
    }
}

}  // namespace bundleforge
