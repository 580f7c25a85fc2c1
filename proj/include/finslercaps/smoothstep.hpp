#pragma once

#include <algorithm>

namespace finslercaps {

/// Quintic smoothstep S(u) = 6u^5 - 15u^4 + 10u^3 on [0, 1], clamped outside,
/// with S' and S'' and the antiderivative P(u) = int_0^u S.
struct Smoothstep {
    static double value(double u) {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
    }
    static double d1(double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return 30.0 * u * u * (1.0 - u) * (1.0 - u);
    }
    static double d2(double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    }
    static double integral(double u) {
        if (u <= 0.0) return 0.0;
        if (u >= 1.0) return u - 0.5;
        const double u2 = u * u;
        return u2 * u2 * (2.5 + u * (-3.0 + u));
    }
};

/// C^2 ramp: max(0, t) outside [-w, w], with psi' = S((t + w) / 2w) inside.
struct SmoothRamp {
    double w;

    double value(double t) const {
        if (t <= -w) return 0.0;
        if (t >= w) return t;
        return 2.0 * w * Smoothstep::integral((t + w) / (2.0 * w));
    }
    double d1(double t) const { return Smoothstep::value((t + w) / (2.0 * w)); }
    double d2(double t) const { return Smoothstep::d1((t + w) / (2.0 * w)) / (2.0 * w); }
};

} // namespace finslercaps
