#pragma once

#include <array>
#include <cmath>
#include <utility>

namespace funcscan::quad {

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 nodes).
template <typename F>
Estimate gauss_kronrod15(F&& f, double a, double b) {
    static constexpr std::array<double, 8> xgk = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static constexpr std::array<double, 8> wgk = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr std::array<double, 4> wg = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = wgk[7] * fc;
    double gauss = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double sum = f(centre - dx) + f(centre + dx);
        kronrod += wgk[j] * sum;
        if (j % 2 == 1)
            gauss += wg[j / 2] * sum;
    }
    return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

namespace detail {
template <typename F>
Estimate adaptive(F& f, double a, double b, double tol, Estimate whole, int depth) {
    if (whole.error <= tol || depth <= 0)
        return whole;
    const double mid = 0.5 * (a + b);
    const Estimate left = gauss_kronrod15(f, a, mid);
    const Estimate right = gauss_kronrod15(f, mid, b);
    const Estimate l = adaptive(f, a, mid, 0.5 * tol, left, depth - 1);
    const Estimate r = adaptive(f, mid, b, 0.5 * tol, right, depth - 1);
    return {l.value + r.value, l.error + r.error};
}
}  // namespace detail

/// Recursive bisection until the Kronrod-Gauss difference meets `abs_tol`.
template <typename F>
Estimate adaptive_gk15(F&& f, double a, double b, double abs_tol, int max_depth = 40) {
    const Estimate whole = gauss_kronrod15(f, a, b);
    return detail::adaptive(f, a, b, abs_tol, whole, max_depth);
}

}  // namespace funcscan::quad
