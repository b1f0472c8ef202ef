#pragma once

#include "zskl/common.hpp"
#include "zskl/data.hpp"
#include "zskl/eval.hpp"
#include "zskl/kernels.hpp"
#include "zskl/model.hpp"
#include "zskl/objective.hpp"
#include "zskl/parallel.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <vector>

namespace zskl {

enum class InitKind { GaussianScaled, LeastSquares };

inline const char *to_string(InitKind k) { return k == InitKind::GaussianScaled ? "gauss" : "lsq"; }

inline InitKind init_kind_from_string(const std::string &s) {
    if (s == "gauss") { return InitKind::GaussianScaled; }
    if (s == "lsq") { return InitKind::LeastSquares; }
    fail(ErrorKind::Format, "unknown init '" + s + "'");
}

struct TrainConfig {
    int batch_size = 10;
    double gamma = 0.99;
    int epochs = 10;
    double beta0 = 0.01;
    double decay = 1e-4;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    InitKind init = InitKind::GaussianScaled;
    int trace_every = 10;
    int threads = 1;
    /// Weight within-class terms by the true class size instead of N/C.
    bool true_class_counts = false;
    /// Training samples used for the full-objective probe.
    int probe_size = 64;

    void validate() const {
        require(batch_size >= 1, ErrorKind::Domain, "batch size must be >= 1");
        require(gamma > 0.0 && gamma < 1.0, ErrorKind::Domain, "gamma must lie in (0,1)");
        require(epochs >= 0, ErrorKind::Domain, "epochs must be >= 0");
        require(beta0 > 0.0, ErrorKind::Domain, "beta0 must be > 0");
        require(decay >= 0.0, ErrorKind::Domain, "decay must be >= 0");
        require(epsilon > 0.0, ErrorKind::Domain, "epsilon must be > 0");
        require(trace_every >= 1, ErrorKind::Domain, "trace_every must be >= 1");
        require(threads >= 1, ErrorKind::Domain, "threads must be >= 1");
        require(probe_size >= 0, ErrorKind::Domain, "probe_size must be >= 0");
    }
};

inline nlohmann::json to_json(const TrainConfig &c) {
    return {{"batch_size", c.batch_size}, {"gamma", c.gamma},     {"epochs", c.epochs},
            {"beta0", c.beta0},           {"decay", c.decay},     {"epsilon", c.epsilon},
            {"seed", c.seed},             {"init", to_string(c.init)}, {"trace_every", c.trace_every},
            {"true_class_counts", c.true_class_counts}};
}

struct TraceRow {
    long iteration = 0;
    int epoch = 0;
    double batch_objective = 0.0;
    std::optional<double> probe_objective;
    std::optional<double> val_acc;
};

struct EpochSummary {
    int epoch = 0;
    double mean_batch_objective = 0.0;
    std::optional<double> probe_objective;
    std::optional<double> val_acc;
};

struct TrainTrace {
    std::vector<TraceRow> rows;
    std::vector<EpochSummary> epochs;
};

inline void write_trace_csv(const TrainTrace &trace, const std::filesystem::path &path) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    auto opt = [](const std::optional<double> &v) { return v ? format_double(*v) : std::string(); };
    out << "iteration,epoch,batch_objective,probe_objective,val_acc\n";
    for (const auto &r : trace.rows) {
        out << r.iteration << ',' << r.epoch << ',' << format_double(r.batch_objective) << ','
            << opt(r.probe_objective) << ',' << opt(r.val_acc) << '\n';
    }
}

/// beta_t = beta0 / (1 + decay t)
inline double lr_at(long t, double beta0, double decay) {
    return beta0 / (1.0 + decay * static_cast<double>(t));
}

struct RmspropState {
    Matrix w;
    Matrix a;
};

/// A' = gamma A + (1 - gamma) sq_bar, then W' = W - beta g_bar / sqrt(A' + eps), elementwise.
inline RmspropState rmsprop_step(const Matrix &w, const Matrix &a, const Matrix &g_bar, const Matrix &sq_bar,
                                 double beta, double gamma, double epsilon) {
    require(w.rows() == a.rows() && w.cols() == a.cols() && w.rows() == g_bar.rows() && w.cols() == g_bar.cols() &&
                w.rows() == sq_bar.rows() && w.cols() == sq_bar.cols(),
            ErrorKind::Shape, "rmsprop_step: shape mismatch");
    require(w.allFinite() && a.allFinite() && g_bar.allFinite() && sq_bar.allFinite(), ErrorKind::Numeric,
            "rmsprop_step: non-finite input");
    RmspropState out;
    out.a = gamma * a + (1.0 - gamma) * sq_bar;
    out.w = w.array() - beta * g_bar.array() / (out.a.array() + epsilon).sqrt();
    return out;
}

/// GaussianScaled: i.i.d. N(0, 1/d). LeastSquares: argmin ||W^T X - Y||_F with a 1e-6 ridge.
inline Matrix init_w(Eigen::Index d, Eigen::Index d_attr, InitKind kind, std::uint64_t seed, const Matrix *x = nullptr,
                     const Matrix *y = nullptr) {
    require(d >= 1 && d_attr >= 1, ErrorKind::Domain, "init_w: dimensions must be >= 1");
    if (kind == InitKind::GaussianScaled) {
        Rng rng(seed);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        Matrix w(d, d_attr);
        for (Eigen::Index j = 0; j < d_attr; ++j) {
            for (Eigen::Index i = 0; i < d; ++i) { w(i, j) = scale * standard_normal(rng); }
        }
        return w;
    }
    require(x != nullptr && y != nullptr, ErrorKind::Domain, "init_w: least-squares init needs X and Y");
    require(x->rows() == d && y->rows() == d_attr && x->cols() == y->cols(), ErrorKind::Shape,
            "init_w: X/Y shape mismatch");
    Matrix gram = *x * x->transpose();
    gram.diagonal().array() += 1e-6;
    Eigen::LDLT<Matrix> ldlt(gram);
    require(ldlt.info() == Eigen::Success && ldlt.isPositive(), ErrorKind::Numeric, "init_w: singular system");
    Matrix w = ldlt.solve(*x * y->transpose());
    require(w.allFinite(), ErrorKind::Numeric, "init_w: singular system");
    return w;
}

/// Held-out classes tracked during training (val accuracy column of the trace).
struct ValProbe {
    LabeledSamples samples;
    Candidates candidates;
};

struct TrainResult {
    Projection model;
    TrainTrace trace;
};

/// Minibatch SGD with RMSprop over the per-sample loss. `ds` must already be
/// preprocessed; `samples` selects the training samples.
inline TrainResult train(const Dataset &ds, const std::vector<std::size_t> &samples, const PreprocessStats &stats,
                         const ObjectiveSpec &ospec, const TrainConfig &cfg, const ValProbe *probe = nullptr) {
    ospec.validate();
    cfg.validate();
    require(!samples.empty(), ErrorKind::Domain, "train: empty training partition");

    const Matrix x = select_columns(ds.features, samples);
    const std::vector<ClassId> labels = select_labels(ds.labels, samples);
    const std::set<ClassId> classes(labels.begin(), labels.end());
    require(classes.size() >= 1, ErrorKind::Domain, "train: no classes");
    Matrix y(ds.attr_dim(), x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) { y.col(i) = ds.attribute(labels[static_cast<std::size_t>(i)]); }

    const NegativeSampler sampler(labels, classes);
    const auto n = static_cast<double>(samples.size());
    const double n_per_class = n / static_cast<double>(classes.size());
    const double penalty_share = 1.0 / n;

    Matrix w = init_w(ds.dim(), ds.attr_dim(), cfg.init, cfg.seed ^ 0x5851f42d4c957f2dULL, &x, &y);
    Matrix a = Matrix::Zero(w.rows(), w.cols());
    Rng rng(cfg.seed);

    // Fixed probe subset of training samples for the full objective.
    std::vector<std::size_t> probe_idx(samples.size());
    for (std::size_t i = 0; i < probe_idx.size(); ++i) { probe_idx[i] = i; }
    {
        Rng probe_rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
        shuffle(probe_idx, probe_rng);
        probe_idx.resize(std::min(probe_idx.size(), static_cast<std::size_t>(cfg.probe_size)));
        std::sort(probe_idx.begin(), probe_idx.end());
    }
    const Matrix probe_x = select_columns(x, probe_idx);
    const Matrix probe_y = select_columns(y, probe_idx);
    const std::vector<ClassId> probe_labels = select_labels(labels, probe_idx);

    auto measure = [&](TraceRow &row) {
        if (!probe_idx.empty()) { row.probe_objective = -full_objective(ospec, w, probe_x, probe_y, probe_labels); }
        if (probe != nullptr && !probe->samples.labels.empty()) {
            row.val_acc = per_class_top1(classify_all(ospec.kernel, w, probe->samples.features, probe->candidates),
                                         probe->samples.labels)
                              .mean;
        }
    };

    TrainTrace trace;
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) { order[i] = i; }
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<SampleLoss> losses(batch);
    std::vector<Matrix> negatives(batch);
    long t = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_sum = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            // Negatives are drawn sequentially so the rng stream does not depend on threading.
            for (std::size_t k = 0; k < count; ++k) {
                const std::size_t i = order[start + k];
                const auto neg = sampler.sample(labels[i], rng);
                negatives[k].resize(y.rows(), static_cast<Eigen::Index>(neg.size()));
                for (std::size_t j = 0; j < neg.size(); ++j) {
                    negatives[k].col(static_cast<Eigen::Index>(j)) = y.col(static_cast<Eigen::Index>(neg[j]));
                }
            }
            parallel_for(count, cfg.threads, [&](std::size_t k) {
                const auto i = static_cast<Eigen::Index>(order[start + k]);
                SampleWeights weights{n_per_class, penalty_share};
                if (cfg.true_class_counts) {
                    weights.n_per_class = static_cast<double>(sampler.members().at(labels[static_cast<std::size_t>(i)]).size());
                }
                losses[k] = sample_loss_grad(ospec, w, x.col(i), y.col(i), negatives[k], weights);
            });
            // Fixed-order reduction keeps results independent of the thread count.
            Matrix g_bar = Matrix::Zero(w.rows(), w.cols());
            Matrix sq_bar = Matrix::Zero(w.rows(), w.cols());
            double value = 0.0;
            for (std::size_t k = 0; k < count; ++k) {
                g_bar += losses[k].grad;
                sq_bar += losses[k].grad.cwiseAbs2();
                value += losses[k].value;
            }
            const double inv = 1.0 / static_cast<double>(count);
            g_bar *= inv;
            sq_bar *= inv;
            value *= inv;
            require(std::isfinite(value) && g_bar.allFinite() && sq_bar.allFinite(), ErrorKind::Numeric,
                    "train: non-finite loss at iteration " + std::to_string(t + 1));

            auto step = rmsprop_step(w, a, g_bar, sq_bar, lr_at(t, cfg.beta0, cfg.decay), cfg.gamma, cfg.epsilon);
            w = std::move(step.w);
            a = std::move(step.a);
            ++t;
            epoch_sum += value;
            ++epoch_batches;

            const bool epoch_end = start + batch >= order.size();
            if (t % cfg.trace_every == 0 || epoch_end) {
                TraceRow row{t, epoch, value, std::nullopt, std::nullopt};
                measure(row);
                trace.rows.push_back(row);
                if (epoch_end) {
                    trace.epochs.push_back({epoch, epoch_sum / static_cast<double>(epoch_batches),
                                            row.probe_objective, row.val_acc});
                }
            }
        }
    }

    TrainResult out;
    out.model.w = std::move(w);
    out.model.objective = ospec;
    out.model.preprocess = stats;
    out.model.train_meta = {{"config", to_json(cfg)},
                            {"train_samples", samples.size()},
                            {"train_classes", std::vector<ClassId>(classes.begin(), classes.end())},
                            {"iterations", t}};
    if (!trace.epochs.empty()) {
        out.model.train_meta["final_epoch_objective"] = trace.epochs.back().mean_batch_objective;
    }
    out.trace = std::move(trace);
    return out;
}

}  // namespace zskl
