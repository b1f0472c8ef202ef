#pragma once

#include "zskl/common.hpp"
#include "zskl/kernels.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace zskl {

/// Polarization label kernel: +1 for same-label pairs, -lambda otherwise.
struct LabelKernel {
    Matrix matrix;
    double lambda = 0.0;
};

enum class Variant {
    RbfOrt,        // both projection directions (implicit incoherence)
    RbfPlain,      // W^T x direction only
    PolyPenalized  // polynomial kernel plus explicit incoherence penalty
};

enum class TransformStyle { Squared, Linear };

struct ObjectiveSpec {
    Variant variant = Variant::RbfOrt;
    KernelSpec kernel;
    double lambda = 1.0;
    double alpha = 0.0;
    TransformStyle transform_style = TransformStyle::Squared;

    void validate() const {
        if (variant == Variant::PolyPenalized) {
            require(kernel.family == KernelFamily::Polynomial, ErrorKind::Domain,
                    "variant poly requires the polynomial kernel");
            require(transform_style == TransformStyle::Linear, ErrorKind::Domain,
                    "variant poly requires the linear transform");
        } else {
            require(kernel.is_rbf(), ErrorKind::Domain, "variants ort/plain require a gaussian or cauchy kernel");
        }
        require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::Domain, "lambda must be >= 0");
        require(alpha >= 0.0 && std::isfinite(alpha), ErrorKind::Domain, "alpha must be >= 0");
    }

    [[nodiscard]] Transform within_transform() const {
        return transform_style == TransformStyle::Squared ? Transform::within() : Transform::linear(-1.0);
    }
    [[nodiscard]] Transform between_transform() const {
        return transform_style == TransformStyle::Squared ? Transform::between() : Transform::linear(1.0);
    }
    [[nodiscard]] bool both_directions() const { return variant == Variant::RbfOrt; }
};

struct SampleLoss {
    double value = 0.0;
    Matrix grad;
};

inline const char *to_string(Variant v) {
    switch (v) {
        case Variant::RbfOrt: return "ort";
        case Variant::RbfPlain: return "plain";
        case Variant::PolyPenalized: return "poly";
    }
    return "?";
}

inline Variant variant_from_string(const std::string &s) {
    if (s == "ort") { return Variant::RbfOrt; }
    if (s == "plain") { return Variant::RbfPlain; }
    if (s == "poly") { return Variant::PolyPenalized; }
    fail(ErrorKind::Format, "unknown variant '" + s + "'");
}

inline const char *to_string(TransformStyle t) { return t == TransformStyle::Squared ? "squared" : "linear"; }

inline TransformStyle transform_style_from_string(const std::string &s) {
    if (s == "squared") { return TransformStyle::Squared; }
    if (s == "linear") { return TransformStyle::Linear; }
    fail(ErrorKind::Format, "unknown transform '" + s + "'");
}

/// Default transform per variant: squared for RBF, linear for polynomial.
inline TransformStyle default_transform(Variant v) {
    return v == Variant::PolyPenalized ? TransformStyle::Linear : TransformStyle::Squared;
}

inline LabelKernel build_label_kernel(const std::vector<ClassId> &labels, double lambda) {
    require(!labels.empty(), ErrorKind::Domain, "build_label_kernel: empty labels");
    require(lambda >= 0.0, ErrorKind::Domain, "build_label_kernel: lambda must be >= 0");
    const auto n = static_cast<Eigen::Index>(labels.size());
    LabelKernel lk{Matrix(n, n), lambda};
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            lk.matrix(i, j) = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? 1.0 : -lambda;
        }
    }
    return lk;
}

/// Frobenius inner product <K, L>.
inline double alignment(const Matrix &k, const Matrix &l) {
    require(k.rows() == l.rows() && k.cols() == l.cols(), ErrorKind::Shape,
            "alignment: shape mismatch " + shape_str(k.rows(), k.cols()) + " vs " + shape_str(l.rows(), l.cols()));
    return k.cwiseProduct(l).sum();
}

/// -alpha ||W^T W||_F^2 + alpha tr(W^T W)
inline double incoherence_penalty(const Matrix &w, double alpha) {
    const Matrix wtw = w.transpose() * w;
    return -alpha * wtw.squaredNorm() + alpha * wtw.trace();
}

/// Full O(N^2) alignment objective (maximization convention). Diagnostic use.
inline double full_objective(const ObjectiveSpec &ospec, const Matrix &w, const Matrix &x, const Matrix &y,
                             const std::vector<ClassId> &labels) {
    ospec.validate();
    require(x.cols() == y.cols() && static_cast<std::size_t>(x.cols()) == labels.size(), ErrorKind::Shape,
            "full_objective: X, Y and labels must describe the same samples");
    const Matrix l = build_label_kernel(labels, ospec.lambda).matrix;
    const Matrix kx = gram_matrix(ospec.kernel, w, x, y, Direction::ProjectX);
    switch (ospec.variant) {
        case Variant::RbfOrt: return alignment(kx + gram_matrix(ospec.kernel, w, x, y, Direction::ProjectY), l);
        case Variant::RbfPlain: return alignment(kx, l);
        case Variant::PolyPenalized: return alignment(kx, l) + incoherence_penalty(w, ospec.alpha);
    }
    return 0.0;
}

/// Draws one sample per class (other than the anchor's class) uniformly among
/// that class's samples.
class NegativeSampler {
public:
    NegativeSampler(const std::vector<ClassId> &labels, const std::set<ClassId> &class_ids) {
        for (ClassId c : class_ids) { members_[c]; }
        for (std::size_t i = 0; i < labels.size(); ++i) {
            auto it = members_.find(labels[i]);
            if (it != members_.end()) { it->second.push_back(i); }
        }
        for (const auto &[c, m] : members_) {
            require(!m.empty(), ErrorKind::Domain, "class " + std::to_string(c) + " has no samples");
        }
    }

    [[nodiscard]] std::vector<std::size_t> sample(ClassId anchor, Rng &rng) const {
        require(members_.contains(anchor), ErrorKind::Domain,
                "anchor class " + std::to_string(anchor) + " is not among the sampled classes");
        std::vector<std::size_t> out;
        out.reserve(members_.size() - 1);
        for (const auto &[c, m] : members_) {
            if (c == anchor) { continue; }
            out.push_back(m.size() == 1 ? m.front() : m[uniform_index(rng, m.size())]);
        }
        return out;
    }

    [[nodiscard]] const std::map<ClassId, std::vector<std::size_t>> &members() const { return members_; }

private:
    std::map<ClassId, std::vector<std::size_t>> members_;
};

inline std::vector<std::size_t> sample_negatives(const std::vector<ClassId> &labels, const std::set<ClassId> &class_ids,
                                                 ClassId anchor, Rng &rng) {
    return NegativeSampler(labels, class_ids).sample(anchor, rng);
}

/// Per-sample weights that are not part of ObjectiveSpec.
struct SampleWeights {
    double n_per_class = 1.0;     // weight of the within-class terms (N/C)
    double penalty_share = 0.0;   // fraction of the W penalty charged to this sample (1/N)
};

/// Per-sample stochastic loss f_i(W) (minimization convention) and its
/// gradient. `negatives` holds one attribute vector per column.
inline SampleLoss sample_loss_grad(const ObjectiveSpec &ospec, const Matrix &w, const VecRef &x, const VecRef &y,
                                   const Matrix &negatives, const SampleWeights &weights) {
    require(negatives.cols() == 0 || negatives.rows() == y.size(), ErrorKind::Shape,
            "negatives must have the attribute dimension");
    require(!ospec.kernel.is_rbf() || ospec.variant != Variant::PolyPenalized, ErrorKind::Domain,
            "variant/kernel mismatch");
    require(ospec.transform_style == TransformStyle::Linear || ospec.kernel.is_rbf(), ErrorKind::Domain,
            "squared transform requires an RBF kernel");
    const Transform within = ospec.within_transform();
    const Transform between = ospec.between_transform();
    const bool both = ospec.both_directions();

    SampleLoss out{0.0, Matrix::Zero(w.rows(), w.cols())};
    auto accumulate = [&](const VecRef &target, Transform t, double weight, Direction dir) {
        auto [v, g] = transformed_value_grad(ospec.kernel, w, x, target, dir, t);
        out.value += weight * v;
        out.grad.noalias() += weight * g;
    };
    accumulate(y, within, weights.n_per_class, Direction::ProjectX);
    if (both) { accumulate(y, within, weights.n_per_class, Direction::ProjectY); }
    for (Eigen::Index j = 0; j < negatives.cols(); ++j) {
        accumulate(negatives.col(j), between, ospec.lambda, Direction::ProjectX);
        if (both) { accumulate(negatives.col(j), between, ospec.lambda, Direction::ProjectY); }
    }
    if (ospec.variant == Variant::PolyPenalized && weights.penalty_share > 0.0 && ospec.alpha > 0.0) {
        const Matrix wtw = w.transpose() * w;
        const double a = weights.penalty_share * ospec.alpha;
        out.value += a * (wtw.squaredNorm() - wtw.trace());
        out.grad.noalias() += a * (4.0 * (w * wtw) - 2.0 * w);
    }
    return out;
}

}  // namespace zskl
