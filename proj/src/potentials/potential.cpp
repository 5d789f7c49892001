#include "kpzlab/potentials/potential.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <string>

#include "kpzlab/core/errors.hpp"

namespace kpzlab {

namespace {

void check_order(int order) {
    if (order < 0 || order > 2) throw UsageError("potential: unsupported derivative order " + std::to_string(order));
}

// shortest round-trip form
std::string fmt_num(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

}  // namespace

Potential Potential::quadratic(double a) {
    if (!(a > 0)) throw UsageError("quadratic potential needs a > 0");
    Potential v;
    v.family_ = PotentialFamily::quadratic;
    v.a_ = a;
    v.b_ = 0.0;
    v.tag_ = "quadratic(a=" + fmt_num(a) + ")";
    return v;
}

Potential Potential::perturbed(double a, double b, PerturbationShape shape) {
    if (!(a > 0)) throw UsageError("perturbed potential needs a > 0");
    if (!std::isfinite(b)) throw UsageError("perturbed potential needs finite b");
    Potential v;
    v.family_ = PotentialFamily::perturbed_quadratic;
    v.a_ = a;
    v.b_ = b;
    v.shape_ = shape;
    v.tag_ = "perturbed(a=" + fmt_num(a) + ",b=" + fmt_num(b) +
             (shape == PerturbationShape::sine ? ",sine)" : ",tanh)");
    return v;
}

Potential Potential::user(std::string name, PotentialEvaluator convex_part, PotentialEvaluator perturbation) {
    if (!convex_part) throw UsageError("user potential needs an evaluator");
    Potential v;
    v.family_ = PotentialFamily::user;
    v.a_ = 0.0;
    v.b_ = 0.0;
    v.tag_ = "user(" + name + ")";
    v.user_convex_ = std::move(convex_part);
    v.user_perturbation_ = std::move(perturbation);
    return v;
}

double Potential::convex(double u, int order) const {
    check_order(order);
    if (family_ == PotentialFamily::user) return user_convex_(u, order);
    switch (order) {
        case 0: return 0.5 * a_ * u * u;
        case 1: return a_ * u;
        default: return a_;
    }
}

double Potential::perturbation(double u, int order) const {
    check_order(order);
    switch (family_) {
        case PotentialFamily::quadratic: return 0.0;
        case PotentialFamily::user: return user_perturbation_ ? user_perturbation_(u, order) : 0.0;
        case PotentialFamily::perturbed_quadratic: break;
    }
    if (shape_ == PerturbationShape::sine) {
        switch (order) {
            case 0: return b_ * std::sin(u);
            case 1: return b_ * std::cos(u);
            default: return -b_ * std::sin(u);
        }
    }
    const double t = std::tanh(u);
    switch (order) {
        case 0: return b_ * t;
        case 1: return b_ * (1.0 - t * t);
        default: return -2.0 * b_ * t * (1.0 - t * t);
    }
}

double Potential::eval(double u, int order) const {
    check_order(order);
    return convex(u, order) + perturbation(u, order);
}

double Potential::first(double u) const {
    switch (family_) {
        case PotentialFamily::quadratic: return a_ * u;
        case PotentialFamily::perturbed_quadratic:
            if (shape_ == PerturbationShape::sine) return a_ * u + b_ * std::cos(u);
            return a_ * u + b_ * (1.0 - std::tanh(u) * std::tanh(u));
        case PotentialFamily::user: break;
    }
    return convex(u, 1) + perturbation(u, 1);
}

double Potential::third(double u) const {
    switch (family_) {
        case PotentialFamily::quadratic: return 0.0;
        case PotentialFamily::perturbed_quadratic: {
            if (shape_ == PerturbationShape::sine) return -b_ * std::cos(u);
            const double t = std::tanh(u), s = 1.0 - t * t;
            return b_ * (-2.0 * s * s + 4.0 * t * t * s);
        }
        case PotentialFamily::user: break;
    }
    const double h = 1e-4;
    return (second(u + h) - second(u - h)) / (2 * h);
}

void Potential::first_batch(std::span<const double> u, std::span<double> out) const {
    const std::size_t n = u.size();
    if (family_ == PotentialFamily::quadratic) {
        for (std::size_t i = 0; i < n; ++i) out[i] = a_ * u[i];
    } else if (family_ == PotentialFamily::perturbed_quadratic && shape_ == PerturbationShape::sine) {
        for (std::size_t i = 0; i < n; ++i) out[i] = a_ * u[i] + b_ * std::cos(u[i]);
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = first(u[i]);
    }
}

double eval(const Potential& v, double u, int order) { return v.eval(u, order); }

std::vector<double> default_probe_grid(double half_width, double spacing) {
    const auto m = static_cast<std::size_t>(std::llround(2 * half_width / spacing));
    std::vector<double> g(m + 1);
    for (std::size_t i = 0; i <= m; ++i) g[i] = -half_width + double(i) * spacing;
    return g;
}

ValidationReport validate_assumption_v(const Potential& v, std::span<const double> probe, const ValidationCaps& caps) {
    if (probe.empty()) throw UsageError("validate_assumption_v: empty probe grid");
    const auto [lo, hi] = std::minmax_element(probe.begin(), probe.end());
    if (*lo > -20.0 || *hi < 20.0) throw UsageError("validate_assumption_v: probe grid must cover [-20, 20]");

    ValidationReport r;
    r.min_convex_curvature = INFINITY;
    r.max_convex_curvature = -INFINITY;
    for (double u : probe) {
        const double c2 = v.convex(u, 2);
        const double p0 = v.perturbation(u, 0), p1 = v.perturbation(u, 1), p2 = v.perturbation(u, 2);
        if (!std::isfinite(c2) || !std::isfinite(p0) || !std::isfinite(p1) || !std::isfinite(p2) ||
            !std::isfinite(v.convex(u, 0)) || !std::isfinite(v.convex(u, 1))) {
            r.pass = false;
            r.offending_point = u;
            r.message = "non-finite derivative at u=" + fmt_num(u);
            return r;
        }
        r.min_convex_curvature = std::min(r.min_convex_curvature, c2);
        r.max_convex_curvature = std::max(r.max_convex_curvature, c2);
        r.sup_psi = std::max(r.sup_psi, std::abs(p0));
        r.sup_dpsi = std::max(r.sup_dpsi, std::abs(p1));
        r.sup_ddpsi = std::max(r.sup_ddpsi, std::abs(p2));
    }
    r.C = r.min_convex_curvature > 0 ? std::max(r.max_convex_curvature, 1.0 / r.min_convex_curvature) : INFINITY;
    r.lipschitz = r.max_convex_curvature + r.sup_ddpsi;

    std::string reasons;
    auto add = [&](const std::string& m) { reasons += (reasons.empty() ? "" : "; ") + m; };
    if (!(r.min_convex_curvature > 0))
        add("convex part not uniformly convex (min phi'' = " + fmt_num(r.min_convex_curvature) + ")");
    if (r.max_convex_curvature > caps.curvature_cap)
        add("phi'' exceeds curvature cap (max phi'' = " + fmt_num(r.max_convex_curvature) + ")");
    if (r.min_convex_curvature > 0 && 1.0 / r.min_convex_curvature > caps.curvature_cap)
        add("phi'' below 1/cap");
    if (std::max({r.sup_psi, r.sup_dpsi, r.sup_ddpsi}) > caps.perturbation_cap) add("perturbation norms exceed cap");
    r.pass = reasons.empty();
    r.message = r.pass ? "ok" : reasons;
    return r;
}

}  // namespace kpzlab
