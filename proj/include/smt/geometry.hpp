#pragma once

#include <cmath>

namespace smt {

/// Planar pose in world coordinates: meters and radians.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

/// Express `p` in the coordinate frame anchored at `frame`.
inline Pose to_frame(const Pose& p, const Pose& frame) {
    const double dx = p.x - frame.x;
    const double dy = p.y - frame.y;
    const double c = std::cos(frame.theta);
    const double s = std::sin(frame.theta);
    return {c * dx + s * dy, -s * dx + c * dy, p.theta - frame.theta};
}

/// Compose a local displacement `d` (expressed in `base`'s frame) onto `base`.
inline Pose compose(const Pose& base, const Pose& d) {
    const double c = std::cos(base.theta);
    const double s = std::sin(base.theta);
    return {base.x + c * d.x - s * d.y, base.y + s * d.x + c * d.y, base.theta + d.theta};
}

inline double wrap_angle(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a < -M_PI) a += 2.0 * M_PI;
    return a;
}

} // namespace smt
