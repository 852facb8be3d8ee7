#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace treesne {

/// Which closed form of the heavy-tailed kernel to evaluate.
///
/// GaussianLimit is K(d) = (1 + d^2/alpha)^(-alpha), which tends to exp(-d^2)
/// as alpha grows. Literal is K(d) = (1 + d^(2/alpha))^(-alpha). Both
/// reduce to the Cauchy kernel 1/(1+d^2) at alpha = 1.
enum class KernelForm { GaussianLimit, Literal };

inline const char* to_string(KernelForm form) {
    return form == KernelForm::GaussianLimit ? "gaussian-limit" : "literal";
}

inline KernelForm kernel_form_from_string(const std::string& s) {
    if (s == "gaussian-limit" || s == "gaussian") return KernelForm::GaussianLimit;
    if (s == "literal") return KernelForm::Literal;
    throw std::invalid_argument("unknown kernel form '" + s + "'");
}

/// Kernel family member; alpha > 0 (degrees of freedom 2*alpha - 1).
template <typename Scalar>
struct KernelParam {
    Scalar alpha = 1;
    KernelForm form = KernelForm::GaussianLimit;
};

namespace internal {

template <typename Scalar>
void check_kernel_args(const KernelParam<Scalar>& param, Scalar dist) {
    if (!(param.alpha > 0)) throw std::domain_error("kernel: alpha must be positive");
    if (!(dist >= 0)) throw std::domain_error("kernel: distance must be nonnegative");
}

// d^(2/alpha) written in terms of the squared distance.
template <typename Scalar>
Scalar literal_base(Scalar alpha, Scalar sq_dist) {
    using std::pow;
    return sq_dist == 0 ? Scalar(0) : pow(sq_dist, Scalar(1) / alpha);
}

}  // namespace internal

// The *_sq variants take the squared distance; the objective works with those
// directly and skips the square root. They assume validated arguments.

template <typename Scalar>
Scalar kernel_value_sq(const KernelParam<Scalar>& param, Scalar sq_dist) {
    using std::pow;
    const Scalar a = param.alpha;
    if (param.form == KernelForm::GaussianLimit) return pow(Scalar(1) + sq_dist / a, -a);
    return pow(Scalar(1) + internal::literal_base(a, sq_dist), -a);
}

/// -d log K / d(d^2). This is the pair weight of the loss gradient; for the
/// GaussianLimit form it coincides with K^(1/alpha).
template <typename Scalar>
Scalar kernel_slope_sq(const KernelParam<Scalar>& param, Scalar sq_dist) {
    using std::pow;
    const Scalar a = param.alpha;
    if (param.form == KernelForm::GaussianLimit) return Scalar(1) / (Scalar(1) + sq_dist / a);
    if (a == 1) return Scalar(1) / (Scalar(1) + sq_dist);
    // (d^2)^(1/a - 1) / (1 + (d^2)^(1/a)); unbounded at d = 0 when a > 1.
    const Scalar w = internal::literal_base(a, sq_dist);
    return pow(sq_dist, Scalar(1) / a - Scalar(1)) / (Scalar(1) + w);
}

/// d/dalpha of kernel_slope_sq.
template <typename Scalar>
Scalar kernel_slope_dalpha_sq(const KernelParam<Scalar>& param, Scalar sq_dist) {
    using std::log;
    const Scalar a = param.alpha;
    const Scalar s = kernel_slope_sq(param, sq_dist);
    if (sq_dist == 0) return Scalar(0);
    if (param.form == KernelForm::GaussianLimit) return s * s * sq_dist / (a * a);
    const Scalar w = internal::literal_base(a, sq_dist);
    return -s * log(sq_dist) / (a * a * (Scalar(1) + w));
}

template <typename Scalar>
Scalar kernel_dalpha_sq(const KernelParam<Scalar>& param, Scalar sq_dist) {
    using std::log;
    using std::log1p;
    if (sq_dist == 0) return Scalar(0);
    const Scalar a = param.alpha;
    const Scalar k = kernel_value_sq(param, sq_dist);
    if (param.form == KernelForm::GaussianLimit) {
        const Scalar u = sq_dist / a;
        return k * (-log1p(u) + u / (Scalar(1) + u));
    }
    const Scalar w = internal::literal_base(a, sq_dist);
    return k * (-log1p(w) + w * log(sq_dist) / (a * (Scalar(1) + w)));
}

/// K_alpha(dist), in (0, 1], equal to 1 at dist = 0.
template <typename Scalar>
Scalar kernel_value(const KernelParam<Scalar>& param, Scalar dist) {
    internal::check_kernel_args(param, dist);
    return kernel_value_sq(param, dist * dist);
}

/// K_alpha(dist)^(1/alpha), the factor multiplying (y_i - y_j) in the
/// gradient of the GaussianLimit form.
template <typename Scalar>
Scalar kernel_grad_coeff(const KernelParam<Scalar>& param, Scalar dist) {
    using std::pow;
    internal::check_kernel_args(param, dist);
    if (param.form == KernelForm::GaussianLimit) return kernel_slope_sq(param, dist * dist);
    return Scalar(1) / (Scalar(1) + internal::literal_base(param.alpha, dist * dist));
}

/// Partial derivative of K_alpha(dist) with respect to alpha.
template <typename Scalar>
Scalar kernel_dalpha(const KernelParam<Scalar>& param, Scalar dist) {
    internal::check_kernel_args(param, dist);
    return kernel_dalpha_sq(param, dist * dist);
}

}  // namespace treesne
