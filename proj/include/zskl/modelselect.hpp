#pragma once

#include "zskl/common.hpp"
#include "zskl/data.hpp"
#include "zskl/eval.hpp"
#include "zskl/objective.hpp"
#include "zskl/optimizer.hpp"
#include "zskl/parallel.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <tuple>
#include <vector>

namespace zskl {

struct HyperGrid {
    std::vector<double> sigma_values{0.2, 0.4, 0.6, 0.8, 1.0, 1.4, 2.0};
    std::vector<double> lambda_values{0.1, 0.3, 0.8, 1.0, 2.0, 5.0, 10.0};
    std::vector<double> bias_values{0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<int> degree_values{2, 4, 6};
    std::vector<double> alpha_values{1.0};
};

/// One hyperparameter assignment. Fields irrelevant to the variant keep their defaults.
struct HyperPoint {
    double sigma = 1.0;
    double lambda = 1.0;
    double bias = 0.0;
    int degree = 2;
    double alpha = 0.0;

    friend bool operator==(const HyperPoint &, const HyperPoint &) = default;
};

struct CvRow {
    HyperPoint point;
    double val_top1 = 0.0;
    double train_objective = 0.0;  // mean batch objective of the final epoch
};

struct CvResult {
    Variant variant = Variant::RbfOrt;
    std::vector<CvRow> table;
    HyperPoint best;
    std::string rule;
};

inline ObjectiveSpec objective_for(Variant variant, KernelFamily rbf_family, const HyperPoint &p,
                                   std::optional<TransformStyle> transform = std::nullopt) {
    ObjectiveSpec o;
    o.variant = variant;
    o.lambda = p.lambda;
    if (variant == Variant::PolyPenalized) {
        o.kernel = KernelSpec::polynomial(p.degree, p.bias);
        o.alpha = p.alpha;
    } else {
        o.kernel = rbf_family == KernelFamily::Cauchy ? KernelSpec::cauchy(p.sigma) : KernelSpec::gaussian(p.sigma);
    }
    o.transform_style = transform.value_or(default_transform(variant));
    o.validate();
    return o;
}

/// Cartesian product of the lists relevant to `variant`, in lexicographic list order.
inline std::vector<HyperPoint> expand_grid(const HyperGrid &grid, Variant variant) {
    std::vector<HyperPoint> out;
    if (variant == Variant::PolyPenalized) {
        require(!grid.degree_values.empty() && !grid.bias_values.empty() && !grid.lambda_values.empty() &&
                    !grid.alpha_values.empty(),
                ErrorKind::Domain, "grid: degree, bias, lambda and alpha lists must be non-empty for poly");
        for (int r : grid.degree_values) {
            for (double c : grid.bias_values) {
                for (double l : grid.lambda_values) {
                    for (double a : grid.alpha_values) { out.push_back({1.0, l, c, r, a}); }
                }
            }
        }
    } else {
        require(!grid.sigma_values.empty() && !grid.lambda_values.empty(), ErrorKind::Domain,
                "grid: sigma and lambda lists must be non-empty");
        for (double s : grid.sigma_values) {
            for (double l : grid.lambda_values) { out.push_back({s, l, 0.0, 2, 0.0}); }
        }
    }
    return out;
}

/// Total preference order among equally accurate rows: larger sigma / bias,
/// then smaller lambda, then smaller degree and alpha.
inline bool preferred_on_tie(const HyperPoint &a, const HyperPoint &b) {
    return std::make_tuple(-a.sigma, -a.bias, a.lambda, a.degree, a.alpha) <
           std::make_tuple(-b.sigma, -b.bias, b.lambda, b.degree, b.alpha);
}

struct CvSetup {
    Dataset preprocessed;
    PreprocessStats stats;
    Partition partition;
    LabeledSamples val;
    Candidates val_candidates;
};

inline CvSetup make_cv_setup(const Dataset &ds, const SplitSpec &split, PreprocessOptions options = {}) {
    CvSetup s;
    s.partition = apply_split(ds, split);
    require(!s.partition.val_samples.empty(), ErrorKind::Domain, "cross-validation needs validation samples");
    auto [pre, stats] = preprocess_on_samples(ds, s.partition.train_samples, options);
    s.preprocessed = std::move(pre);
    s.stats = std::move(stats);
    s.val = take_samples(s.preprocessed, s.partition.val_samples);
    s.val_candidates = candidates_for(s.preprocessed, split.val_classes);
    return s;
}

/// Trains one model per grid point on the training samples and scores it on
/// the validation classes. Grid points run on up to cfg.threads threads; each
/// training run is single-threaded and uses cfg.seed.
inline CvResult grid_search(const CvSetup &setup, Variant variant, KernelFamily rbf_family, const HyperGrid &grid,
                            const TrainConfig &cfg, std::optional<TransformStyle> transform = std::nullopt) {
    const auto points = expand_grid(grid, variant);
    CvResult result;
    result.variant = variant;
    result.table.resize(points.size());
    TrainConfig run_cfg = cfg;
    run_cfg.threads = 1;
    parallel_for(points.size(), cfg.threads, [&](std::size_t k) {
        const HyperPoint &p = points[k];
        try {
            const auto ospec = objective_for(variant, rbf_family, p, transform);
            auto trained = train(setup.preprocessed, setup.partition.train_samples, setup.stats, ospec, run_cfg);
            const auto report = evaluate_standard(trained.model, setup.val, setup.val_candidates);
            const double objective =
                trained.trace.epochs.empty() ? 0.0 : trained.trace.epochs.back().mean_batch_objective;
            result.table[k] = {p, report.top1_mean, objective};
        } catch (const Error &e) {
            throw Error(e.kind(), "grid point (sigma=" + format_double(p.sigma) + ", lambda=" + format_double(p.lambda) +
                                      ", bias=" + format_double(p.bias) + ", degree=" + std::to_string(p.degree) +
                                      ", alpha=" + format_double(p.alpha) + "): " + e.what());
        }
    });
    const CvRow *best = &result.table.front();
    for (const auto &row : result.table) {
        if (row.val_top1 > best->val_top1 ||
            (row.val_top1 == best->val_top1 && preferred_on_tie(row.point, best->point))) {
            best = &row;
        }
    }
    result.best = best->point;
    result.rule = "max validation top-1 mean; ties: larger sigma/bias, then smaller lambda, degree, alpha";
    return result;
}

/// Retrains on train + val samples with the selected point; preprocessing
/// statistics are recomputed on the same samples.
inline TrainResult refit_best(const Dataset &ds, const SplitSpec &split, Variant variant, KernelFamily rbf_family,
                              const HyperPoint &best, const TrainConfig &cfg,
                              std::optional<TransformStyle> transform = std::nullopt, PreprocessOptions options = {}) {
    const Partition part = apply_split(ds, split);
    std::vector<std::size_t> samples = part.train_samples;
    samples.insert(samples.end(), part.val_samples.begin(), part.val_samples.end());
    std::sort(samples.begin(), samples.end());
    auto [pre, stats] = preprocess_on_samples(ds, samples, options);
    auto result = train(pre, samples, stats, objective_for(variant, rbf_family, best, transform), cfg);
    result.model.train_meta["refit"] = "train+val";
    return result;
}

inline nlohmann::json to_json(const HyperPoint &p, Variant variant) {
    if (variant == Variant::PolyPenalized) {
        return {{"degree", p.degree}, {"bias", p.bias}, {"lambda", p.lambda}, {"alpha", p.alpha}};
    }
    return {{"sigma", p.sigma}, {"lambda", p.lambda}};
}

inline HyperGrid grid_from_json(const nlohmann::json &j) {
    try {
        HyperGrid g;
        if (j.contains("sigma")) { g.sigma_values = j.at("sigma").get<std::vector<double>>(); }
        if (j.contains("lambda")) { g.lambda_values = j.at("lambda").get<std::vector<double>>(); }
        if (j.contains("bias")) { g.bias_values = j.at("bias").get<std::vector<double>>(); }
        if (j.contains("degree")) { g.degree_values = j.at("degree").get<std::vector<int>>(); }
        if (j.contains("alpha")) { g.alpha_values = j.at("alpha").get<std::vector<double>>(); }
        for (double s : g.sigma_values) { require(s > 0.0, ErrorKind::Domain, "grid: sigma values must be > 0"); }
        for (double l : g.lambda_values) { require(l >= 0.0, ErrorKind::Domain, "grid: lambda values must be >= 0"); }
        for (double c : g.bias_values) { require(c >= 0.0, ErrorKind::Domain, "grid: bias values must be >= 0"); }
        for (int r : g.degree_values) { require(r >= 1, ErrorKind::Domain, "grid: degree values must be >= 1"); }
        for (double a : g.alpha_values) { require(a >= 0.0, ErrorKind::Domain, "grid: alpha values must be >= 0"); }
        return g;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::Format, std::string("grid: ") + e.what());
    }
}

inline nlohmann::json to_json(const CvResult &r) {
    nlohmann::json table = nlohmann::json::array();
    for (const auto &row : r.table) {
        auto j = to_json(row.point, r.variant);
        j["val_top1"] = row.val_top1;
        j["train_objective"] = row.train_objective;
        table.push_back(j);
    }
    return {{"variant", to_string(r.variant)}, {"table", table}, {"best", to_json(r.best, r.variant)}, {"rule", r.rule}};
}

inline void write_cv_csv(const CvResult &r, const std::filesystem::path &path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out << "sigma,lambda,bias,degree,alpha,val_top1,train_objective\n";
    for (const auto &row : r.table) {
        out << format_double(row.point.sigma) << ',' << format_double(row.point.lambda) << ','
            << format_double(row.point.bias) << ',' << row.point.degree << ',' << format_double(row.point.alpha) << ','
            << format_double(row.val_top1) << ',' << format_double(row.train_objective) << '\n';
    }
}

}  // namespace zskl
