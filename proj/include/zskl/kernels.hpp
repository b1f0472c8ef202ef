#pragma once

#include "zskl/common.hpp"

#include "json.hpp"

#include <string>
#include <utility>

namespace zskl {

enum class KernelFamily { Polynomial, Gaussian, Cauchy };

/// Kernel family plus its parameters. Use the named constructors; they
/// enforce the positive-definiteness conditions.
struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    double sigma = 1.0;  // radius (Gaussian, Cauchy)
    int degree = 2;      // r (Polynomial)
    double bias = 0.0;   // c (Polynomial)

    static KernelSpec gaussian(double sigma) { return checked({KernelFamily::Gaussian, sigma, 2, 0.0}); }
    static KernelSpec cauchy(double sigma) { return checked({KernelFamily::Cauchy, sigma, 2, 0.0}); }
    static KernelSpec polynomial(int degree, double bias) {
        return checked({KernelFamily::Polynomial, 1.0, degree, bias});
    }

    [[nodiscard]] bool is_rbf() const { return family != KernelFamily::Polynomial; }

    static KernelSpec checked(KernelSpec s) {
        if (s.is_rbf()) {
            require(s.sigma > 0.0 && std::isfinite(s.sigma), ErrorKind::Domain, "kernel sigma must be > 0");
        } else {
            require(s.degree >= 1, ErrorKind::Domain, "polynomial degree must be a positive integer");
            require(s.bias >= 0.0 && std::isfinite(s.bias), ErrorKind::Domain, "polynomial bias must be >= 0");
        }
        return s;
    }

    friend bool operator==(const KernelSpec &, const KernelSpec &) = default;
};

/// ProjectX evaluates k(W^T x, y); ProjectY evaluates k(x, W y).
enum class Direction { ProjectX, ProjectY };

/// Post-composition applied to the kernel value inside the per-sample loss.
struct Transform {
    enum class Kind { Linear, SquaredWithin, SquaredBetween };
    Kind kind = Kind::Linear;
    double sign = 1.0;  // Linear only

    static Transform linear(double sign) { return {Kind::Linear, sign < 0.0 ? -1.0 : 1.0}; }
    /// (1 - k)^2
    static Transform within() { return {Kind::SquaredWithin, 1.0}; }
    /// k^2
    static Transform between() { return {Kind::SquaredBetween, 1.0}; }

    [[nodiscard]] bool squared() const { return kind != Kind::Linear; }
};

inline const char *to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::Polynomial: return "polynomial";
        case KernelFamily::Gaussian: return "gaussian";
        case KernelFamily::Cauchy: return "cauchy";
    }
    return "?";
}

inline KernelFamily kernel_family_from_string(const std::string &s) {
    if (s == "polynomial") { return KernelFamily::Polynomial; }
    if (s == "gaussian") { return KernelFamily::Gaussian; }
    if (s == "cauchy") { return KernelFamily::Cauchy; }
    fail(ErrorKind::Format, "unknown kernel family '" + s + "'");
}

inline nlohmann::json to_json(const KernelSpec &k) {
    nlohmann::json j{{"family", to_string(k.family)}};
    if (k.is_rbf()) {
        j["sigma"] = k.sigma;
    } else {
        j["degree"] = k.degree;
        j["bias"] = k.bias;
    }
    return j;
}

inline KernelSpec kernel_from_json(const nlohmann::json &j) {
    try {
        const auto family = kernel_family_from_string(j.at("family").get<std::string>());
        if (family == KernelFamily::Polynomial) { return KernelSpec::polynomial(j.at("degree").get<int>(), j.at("bias").get<double>()); }
        const double sigma = j.at("sigma").get<double>();
        return family == KernelFamily::Gaussian ? KernelSpec::gaussian(sigma) : KernelSpec::cauchy(sigma);
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::Format, std::string("kernel spec: ") + e.what());
    }
}

namespace detail {

/// base^n for n >= 0 by repeated multiplication (keeps the sign of negative bases).
inline double ipow(double base, int n) {
    double out = 1.0;
    for (int i = 0; i < n; ++i) { out *= base; }
    return out;
}

inline void check_shapes(const Matrix &w, Eigen::Index x_size, Eigen::Index y_size) {
    require(w.rows() == x_size && w.cols() == y_size, ErrorKind::Shape,
            "shape mismatch: W is " + shape_str(w.rows(), w.cols()) + ", x has " + std::to_string(x_size) +
                " entries, y has " + std::to_string(y_size));
}

}  // namespace detail

using VecRef = Eigen::Ref<const Vector>;

struct KernelEval {
    double value = 0.0;
    Matrix grad;  // d x d'
};

/// Value and gradient w.r.t. W in one pass.
inline KernelEval kernel_eval(const KernelSpec &spec, const Matrix &w, const VecRef &x, const VecRef &y, Direction dir,
                              bool with_grad = true) {
    detail::check_shapes(w, x.size(), y.size());
    KernelEval out;
    if (spec.family == KernelFamily::Polynomial) {
        const double base = x.dot(w * y) + spec.bias;
        out.value = detail::ipow(base, spec.degree);
        if (with_grad) { out.grad = (spec.degree * detail::ipow(base, spec.degree - 1)) * (x * y.transpose()); }
        return out;
    }
    // RBF families: the distance lives in attribute space (ProjectX) or feature space (ProjectY).
    if (dir == Direction::ProjectX) {
        const Vector diff = w.transpose() * x - y;
        const double sq = diff.squaredNorm();
        if (spec.family == KernelFamily::Gaussian) {
            out.value = std::exp(-sq / (2.0 * spec.sigma * spec.sigma));
            if (with_grad) { out.grad = (-out.value / (spec.sigma * spec.sigma)) * (x * diff.transpose()); }
        } else {
            const double denom = 1.0 + spec.sigma * sq;
            out.value = 1.0 / denom;
            if (with_grad) { out.grad = (-2.0 * spec.sigma / (denom * denom)) * (x * diff.transpose()); }
        }
    } else {
        const Vector diff = x - w * y;
        const double sq = diff.squaredNorm();
        if (spec.family == KernelFamily::Gaussian) {
            out.value = std::exp(-sq / (2.0 * spec.sigma * spec.sigma));
            if (with_grad) { out.grad = (out.value / (spec.sigma * spec.sigma)) * (diff * y.transpose()); }
        } else {
            const double denom = 1.0 + spec.sigma * sq;
            out.value = 1.0 / denom;
            if (with_grad) { out.grad = (2.0 * spec.sigma / (denom * denom)) * (diff * y.transpose()); }
        }
    }
    return out;
}

inline double kernel_value(const KernelSpec &spec, const Matrix &w, const VecRef &x, const VecRef &y, Direction dir) {
    return kernel_eval(spec, w, x, y, dir, false).value;
}

inline Matrix kernel_grad_w(const KernelSpec &spec, const Matrix &w, const VecRef &x, const VecRef &y, Direction dir) {
    return kernel_eval(spec, w, x, y, dir).grad;
}

/// Transformed kernel value and its chain-ruled gradient.
inline std::pair<double, Matrix> transformed_value_grad(const KernelSpec &spec, const Matrix &w, const VecRef &x,
                                                        const VecRef &y, Direction dir, Transform t) {
    require(!t.squared() || spec.is_rbf(), ErrorKind::Domain,
            "squared transforms need a kernel with range in [0,1]; polynomial is unbounded");
    auto [k, g] = kernel_eval(spec, w, x, y, dir);
    switch (t.kind) {
        case Transform::Kind::Linear: return {t.sign * k, t.sign * g};
        case Transform::Kind::SquaredWithin: return {(1.0 - k) * (1.0 - k), (-2.0 * (1.0 - k)) * g};
        case Transform::Kind::SquaredBetween: return {k * k, (2.0 * k) * g};
    }
    return {};
}

/// Entry (i, j) = k(X_i, Y_j) in direction `dir`.
inline Matrix gram_matrix(const KernelSpec &spec, const Matrix &w, const Matrix &x, const Matrix &y, Direction dir) {
    detail::check_shapes(w, x.rows(), y.rows());
    Matrix k(x.cols(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.cols(); ++i) { k(i, j) = kernel_value(spec, w, x.col(i), y.col(j), dir); }
    }
    return k;
}

}  // namespace zskl
