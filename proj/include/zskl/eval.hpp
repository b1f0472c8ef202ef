#pragma once

#include "zskl/common.hpp"
#include "zskl/data.hpp"
#include "zskl/kernels.hpp"
#include "zskl/model.hpp"
#include "zskl/objective.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace zskl {

enum class Protocol { Standard, Generalized };

inline const char *to_string(Protocol p) { return p == Protocol::Standard ? "standard" : "generalized"; }

/// Candidate attribute vectors, one column per class id.
struct Candidates {
    Matrix attributes;
    std::vector<ClassId> ids;
};

inline Candidates candidates_for(const Dataset &ds, const std::set<ClassId> &classes) {
    Candidates c;
    c.attributes.resize(ds.attr_dim(), static_cast<Eigen::Index>(classes.size()));
    Eigen::Index k = 0;
    for (ClassId id : classes) {
        c.attributes.col(k++) = ds.attribute(id);
        c.ids.push_back(id);
    }
    return c;
}

/// Preprocessed samples with their true labels.
struct LabeledSamples {
    Matrix features;
    std::vector<ClassId> labels;
};

inline LabeledSamples take_samples(const Dataset &ds, const std::vector<std::size_t> &idx) {
    return {select_columns(ds.features, idx), select_labels(ds.labels, idx)};
}

/// Compatibility score of x against one attribute vector. Polynomial uses 2k
/// because both projection directions give the same value.
inline double class_score(const KernelSpec &kernel, const Matrix &w, const VecRef &x, const VecRef &y) {
    if (!kernel.is_rbf()) { return 2.0 * kernel_value(kernel, w, x, y, Direction::ProjectX); }
    return kernel_value(kernel, w, x, y, Direction::ProjectX) + kernel_value(kernel, w, x, y, Direction::ProjectY);
}

/// Argmax of class_score over candidates; ties go to the smallest class id.
inline ClassId classify(const KernelSpec &kernel, const Matrix &w, const VecRef &x, const Matrix &candidates,
                        const std::vector<ClassId> &ids) {
    require(candidates.cols() >= 1 && static_cast<std::size_t>(candidates.cols()) == ids.size(), ErrorKind::Shape,
            "classify: need at least one candidate and one id per candidate");
    require(w.rows() == x.size() && w.cols() == candidates.rows(), ErrorKind::Shape,
            "classify: shape mismatch, W is " + shape_str(w.rows(), w.cols()));
    ClassId best_id = ids.front();
    double best = class_score(kernel, w, x, candidates.col(0));
    for (Eigen::Index j = 1; j < candidates.cols(); ++j) {
        const double s = class_score(kernel, w, x, candidates.col(j));
        const ClassId id = ids[static_cast<std::size_t>(j)];
        if (s > best || (s == best && id < best_id)) {
            best = s;
            best_id = id;
        }
    }
    return best_id;
}

inline std::vector<ClassId> classify_all(const KernelSpec &kernel, const Matrix &w, const Matrix &x,
                                         const Candidates &cands) {
    std::vector<ClassId> out(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        out[static_cast<std::size_t>(i)] = classify(kernel, w, x.col(i), cands.attributes, cands.ids);
    }
    return out;
}

struct Top1 {
    std::map<ClassId, double> per_class;
    double mean = 0.0;
};

/// Per-class accuracy averaged without weighting over the classes present in `truths`.
inline Top1 per_class_top1(const std::vector<ClassId> &predictions, const std::vector<ClassId> &truths) {
    require(!truths.empty(), ErrorKind::Domain, "per_class_top1: empty input");
    require(predictions.size() == truths.size(), ErrorKind::Shape, "per_class_top1: length mismatch");
    std::map<ClassId, std::pair<std::size_t, std::size_t>> counts;  // correct, total
    for (std::size_t i = 0; i < truths.size(); ++i) {
        auto &[correct, total] = counts[truths[i]];
        ++total;
        if (predictions[i] == truths[i]) { ++correct; }
    }
    Top1 out;
    for (const auto &[c, ct] : counts) {
        const double acc = static_cast<double>(ct.first) / static_cast<double>(ct.second);
        out.per_class[c] = acc;
        out.mean += acc;
    }
    out.mean /= static_cast<double>(counts.size());
    return out;
}

/// Fraction of correct predictions, every sample weighted equally.
inline double sample_accuracy(const std::vector<ClassId> &predictions, const std::vector<ClassId> &truths) {
    require(!truths.empty() && predictions.size() == truths.size(), ErrorKind::Shape, "sample_accuracy: bad input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) { correct += predictions[i] == truths[i] ? 1 : 0; }
    return static_cast<double>(correct) / static_cast<double>(truths.size());
}

/// H = 2 s u / (s + u); zero when either accuracy is zero.
inline double harmonic_mean(double acc_seen, double acc_unseen) {
    require(acc_seen >= 0.0 && acc_unseen >= 0.0, ErrorKind::Domain, "harmonic_mean: negative accuracy");
    if (acc_seen == 0.0 || acc_unseen == 0.0) { return 0.0; }
    return 2.0 * acc_seen * acc_unseen / (acc_seen + acc_unseen);
}

/// W^T W after scaling every column of W to unit length.
inline Matrix normalized_gram(const Matrix &w) {
    const Vector norms = w.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < norms.size(); ++j) {
        require(norms(j) > 0.0, ErrorKind::Domain, "incoherence: column " + std::to_string(j) + " of W is zero");
    }
    const Matrix wn = w * norms.cwiseInverse().asDiagonal();
    return wn.transpose() * wn;
}

/// ||W^T W - I||_F^2 on column-normalized W; lower means more incoherent columns.
inline double incoherence(const Matrix &w) {
    const Matrix g = normalized_gram(w);
    return (g - Matrix::Identity(g.rows(), g.cols())).squaredNorm();
}

struct EvalReport {
    Protocol protocol = Protocol::Standard;
    std::map<ClassId, double> per_class_acc;
    double top1_mean = 0.0;
    std::optional<double> acc_seen;
    std::optional<double> acc_unseen;
    std::optional<double> harmonic_h;
    double incoherence = 0.0;
};

inline EvalReport evaluate_standard(const Projection &model, const LabeledSamples &unseen_test,
                                    const Candidates &unseen_candidates) {
    require(!unseen_test.labels.empty(), ErrorKind::Domain, "evaluate_standard: empty test set");
    const auto preds = classify_all(model.kernel(), model.w, unseen_test.features, unseen_candidates);
    const Top1 top1 = per_class_top1(preds, unseen_test.labels);
    EvalReport r;
    r.protocol = Protocol::Standard;
    r.per_class_acc = top1.per_class;
    r.top1_mean = top1.mean;
    r.incoherence = incoherence(model.w);
    return r;
}

/// Both test sets are scored against the full candidate set.
inline EvalReport evaluate_generalized(const Projection &model, const LabeledSamples &seen_test,
                                       const LabeledSamples &unseen_test, const Candidates &all_candidates) {
    require(!seen_test.labels.empty(), ErrorKind::Domain, "evaluate_generalized: empty seen test set");
    require(!unseen_test.labels.empty(), ErrorKind::Domain, "evaluate_generalized: empty unseen test set");
    const Top1 seen = per_class_top1(classify_all(model.kernel(), model.w, seen_test.features, all_candidates),
                                     seen_test.labels);
    const Top1 unseen = per_class_top1(classify_all(model.kernel(), model.w, unseen_test.features, all_candidates),
                                       unseen_test.labels);
    EvalReport r;
    r.protocol = Protocol::Generalized;
    r.per_class_acc = seen.per_class;
    r.per_class_acc.insert(unseen.per_class.begin(), unseen.per_class.end());
    double sum = 0.0;
    for (const auto &[c, a] : r.per_class_acc) { sum += a; }
    r.top1_mean = sum / static_cast<double>(r.per_class_acc.size());
    r.acc_seen = seen.mean;
    r.acc_unseen = unseen.mean;
    r.harmonic_h = harmonic_mean(seen.mean, unseen.mean);
    r.incoherence = incoherence(model.w);
    return r;
}

inline nlohmann::json to_json(const EvalReport &r) {
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto &[c, a] : r.per_class_acc) { per_class[std::to_string(c)] = a; }
    nlohmann::json j{{"protocol", to_string(r.protocol)},
                     {"per_class_acc", per_class},
                     {"top1_mean", r.top1_mean},
                     {"incoherence", r.incoherence}};
    j["acc_seen"] = r.acc_seen ? nlohmann::json(*r.acc_seen) : nlohmann::json(nullptr);
    j["acc_unseen"] = r.acc_unseen ? nlohmann::json(*r.acc_unseen) : nlohmann::json(nullptr);
    j["harmonic_h"] = r.harmonic_h ? nlohmann::json(*r.harmonic_h) : nlohmann::json(nullptr);
    return j;
}

/// One row per class, then summary rows.
inline void write_report_csv(const EvalReport &r, const std::filesystem::path &path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out << "key,value\n";
    for (const auto &[c, a] : r.per_class_acc) { out << c << ',' << format_double(a) << '\n'; }
    auto opt = [](const std::optional<double> &v) { return v ? format_double(*v) : std::string(); };
    out << "TOP1_MEAN," << format_double(r.top1_mean) << '\n';
    out << "ACC_SEEN," << opt(r.acc_seen) << '\n';
    out << "ACC_UNSEEN," << opt(r.acc_unseen) << '\n';
    out << "H," << opt(r.harmonic_h) << '\n';
    out << "INCOHERENCE," << format_double(r.incoherence) << '\n';
}

}  // namespace zskl
