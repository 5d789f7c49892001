#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kpzlab {

enum class PotentialFamily { quadratic, perturbed_quadratic, user };
enum class PerturbationShape { sine, tanh };

// Opaque evaluator for user potentials: (u, order 0..2) -> value.
using PotentialEvaluator = std::function<double(double, int)>;

// V = phi + psi, phi(u) = a u^2/2, psi(u) = b s(u).
// For user potentials psi is taken as zero unless a perturbation evaluator is given.
class Potential {
public:
    static Potential quadratic(double a = 1.0);
    static Potential perturbed(double a, double b, PerturbationShape shape = PerturbationShape::sine);
    static Potential user(std::string name, PotentialEvaluator convex_part,
                          PotentialEvaluator perturbation = nullptr);

    PotentialFamily family() const { return family_; }
    PerturbationShape shape() const { return shape_; }
    double a() const { return a_; }
    double b() const { return b_; }
    const std::string& tag() const { return tag_; }

    // order 0,1,2; anything else throws UsageError
    double eval(double u, int order) const;
    double value(double u) const { return convex(u, 0) + perturbation(u, 0); }
    double first(double u) const;
    double second(double u) const { return convex(u, 2) + perturbation(u, 2); }
    // diagnostics only; built-in families
    double third(double u) const;

    double convex(double u, int order) const;
    double perturbation(double u, int order) const;

    // out[i] = V'(u[i])
    void first_batch(std::span<const double> u, std::span<double> out) const;

private:
    PotentialFamily family_ = PotentialFamily::quadratic;
    PerturbationShape shape_ = PerturbationShape::sine;
    double a_ = 1.0;
    double b_ = 0.0;
    std::string tag_;
    PotentialEvaluator user_convex_;
    PotentialEvaluator user_perturbation_;
};

double eval(const Potential& v, double u, int order);

struct ValidationCaps {
    double curvature_cap = 1e3;
    double perturbation_cap = 1e6;
};

struct ValidationReport {
    bool pass = false;
    double min_convex_curvature = 0.0;
    double max_convex_curvature = 0.0;
    double C = 0.0;  // phi'' in [1/C, C]
    double sup_psi = 0.0;
    double sup_dpsi = 0.0;
    double sup_ddpsi = 0.0;
    double lipschitz = 0.0;  // bound C + sup|psi''| on V'
    std::optional<double> offending_point;
    std::string message;
};

// probe must be non-empty and cover [-20, 20]
ValidationReport validate_assumption_v(const Potential& v, std::span<const double> probe,
                                       const ValidationCaps& caps = {});

std::vector<double> default_probe_grid(double half_width = 20.0, double spacing = 1e-2);

}  // namespace kpzlab
