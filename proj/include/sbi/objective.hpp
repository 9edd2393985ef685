#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbi/vec.hpp"

namespace sbi {

/// Axis-aligned box, one [lower, upper] interval per coordinate.
struct Box {
    Vec lower;
    Vec upper;

    bool valid() const;
    /// All bounds finite.
    bool bounded() const;
    /// Box with the same center, edge lengths scaled by `factor`.
    Box inflated(double factor) const;
};

struct KnownMinimum {
    Vec point;
    double value = 0.0;
};

/// Scalar field with analytic gradient, search domain and (for benchmarks)
/// the known global minimizer. Immutable after construction; safe to share
/// across concurrent trials.
class Objective {
public:
    using EvalFn = std::function<double(const Vec&)>;
    using GradFn = std::function<void(const Vec&, Vec&)>;

    Objective(std::string name, int dim, EvalFn eval, GradFn grad, Box domain,
              std::optional<KnownMinimum> known_min = std::nullopt);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    const Box& domain() const { return domain_; }
    const std::optional<KnownMinimum>& known_min() const { return known_min_; }

    /// F(x). Throws std::invalid_argument when x has the wrong length.
    double eval(const Vec& x) const;

    /// Analytic gradient. Same dimension contract as eval().
    Vec grad(const Vec& x) const;

    /// Allocation-free gradient for hot loops; `out` is resized to dim.
    void grad_into(const Vec& x, Vec& out) const;

private:
    void check_dim(const Vec& x) const;

    std::string name_;
    int dim_;
    EvalFn eval_;
    GradFn grad_;
    Box domain_;
    std::optional<KnownMinimum> known_min_;
};

enum class LipschitzMethod { user_supplied, hessian_sampling };

/// Upper-bound estimate of L = max ‖D²F‖ over a box.
struct LipschitzEstimate {
    double value = 0.0;
    int samples = 0;
    LipschitzMethod method = LipschitzMethod::user_supplied;
};

LipschitzEstimate user_lipschitz(double value);

/// Samples `samples` interior points of `box`, takes the spectral norm of the
/// central-difference Hessian at each, and inflates the max by 1.5. The
/// inflation is safe: every consumer only needs an upper bound on L.
/// Deterministic given `seed`. Throws std::runtime_error when the box is
/// unbounded (supply a user value instead).
LipschitzEstimate estimate_lipschitz(const Objective& obj, const Box& box, int samples,
                                     std::uint64_t seed);

/// Same, over the objective's own domain.
LipschitzEstimate estimate_lipschitz(const Objective& obj, int samples, std::uint64_t seed);

// --- benchmark registry -----------------------------------------------------
//
// Names: "rastrigin", "rosenbrock", "styblinski_tang" (any dim),
//        "exp_sin_1d", "oscillatory_1d" (dim 1).

Objective make_objective(const std::string& name, int dim);

/// Register a custom objective factory under `name` (library API).
void register_objective(const std::string& name, std::function<Objective(int)> factory);

std::vector<std::string> registered_objectives();

/// Default f-gap success tolerance for a registered benchmark:
/// 0.5 x (second-best local minimum value - global minimum value), frozen
/// from a dense-grid/multistart scan. Throws for unknown names.
double default_success_tol(const std::string& name);

}  // namespace sbi
