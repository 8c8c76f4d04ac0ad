#include "sawtooth/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "sawtooth/errors.hpp"

namespace sawtooth {

namespace {

// Gauss-Kronrod 15-point nodes and weights on [-1, 1] (Kronrod), with the
// embedded 7-point Gauss rule for the error estimate. QUADPACK dqk15 values.
constexpr double kNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

constexpr double kKronrodW[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

constexpr double kGaussW[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
    double lo, hi;
    double value;
    double err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

Panel gk15(const std::function<double(double)>& f, double lo, double hi) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const double fc = f(c);
    double kron = kKronrodW[7] * fc;
    double gauss = kGaussW[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kNodes[i];
        const double fsum = f(c - dx) + f(c + dx);
        kron += kKronrodW[i] * fsum;
        if (i % 2 == 1) gauss += kGaussW[i / 2] * fsum;
    }
    Panel p;
    p.lo = lo;
    p.hi = hi;
    p.value = kron * h;
    p.err = std::abs((kron - gauss) * h);
    return p;
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double lo, double hi,
                     double rel_tol, double abs_tol) {
    if (lo == hi) return {0.0, 0.0, 0};
    double sign = 1.0;
    if (lo > hi) {
        std::swap(lo, hi);
        sign = -1.0;
    }

    constexpr int kMaxPanels = 4000;
    std::priority_queue<Panel> panels;
    panels.push(gk15(f, lo, hi));
    double total = panels.top().value;
    double total_err = panels.top().err;
    int evals = 15;
    int n_panels = 1;

    while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) && n_panels < kMaxPanels) {
        Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (mid <= worst.lo || mid >= worst.hi) {
            // Interval narrowed to machine precision; accept its estimate.
            worst.err = 0.0;
            panels.push(worst);
            continue;
        }
        Panel left = gk15(f, worst.lo, mid);
        Panel right = gk15(f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        panels.push(left);
        panels.push(right);
        evals += 30;
        ++n_panels;
    }

    if (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        std::ostringstream msg;
        msg << "quadrature did not converge on [" << lo << ", " << hi << "]: value=" << total
            << " err=" << total_err << " panels=" << n_panels << " evals=" << evals
            << " rel_tol=" << rel_tol << " abs_tol=" << abs_tol;
        throw numeric_error(msg.str());
    }
    return {sign * total, total_err, evals};
}

}  // namespace sawtooth
