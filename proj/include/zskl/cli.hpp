#pragma once

#include "zskl/common.hpp"
#include "zskl/data.hpp"
#include "zskl/eval.hpp"
#include "zskl/model.hpp"
#include "zskl/modelselect.hpp"
#include "zskl/optimizer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zskl::cli {

namespace fs = std::filesystem;

inline const char *to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Io: return "io";
        case ErrorKind::Format: return "format";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Numeric: return "numeric";
    }
    return "unknown";
}

inline std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * fraction);
    return buf;
}

/// Shared training flags of `train` and `cv`.
struct TrainFlags {
    std::string kernel = "gaussian";
    std::string variant = "ort";
    double sigma = 1.0;
    double lambda = 1.0;
    int degree = 2;
    double bias = 1.0;
    double alpha = 1.0;
    std::string transform;  // empty: variant default
    std::string init = "gauss";
    bool no_center_attributes = false;
    TrainConfig cfg;

    void add_to(CLI::App &app, bool with_point) {
        app.add_option("--kernel", kernel, "gaussian | cauchy | polynomial")
            ->check(CLI::IsMember({"gaussian", "cauchy", "polynomial"}))
            ->capture_default_str();
        app.add_option("--variant", variant, "ort | plain | poly")
            ->check(CLI::IsMember({"ort", "plain", "poly"}))
            ->capture_default_str();
        if (with_point) {
            app.add_option("--sigma", sigma, "kernel radius (gaussian/cauchy)")->capture_default_str();
            app.add_option("--lambda", lambda, "between-class weight")->capture_default_str();
            app.add_option("--degree", degree, "polynomial degree r")->capture_default_str();
            app.add_option("--bias", bias, "polynomial bias c")->capture_default_str();
            app.add_option("--alpha", alpha, "incoherence penalty weight (poly)")->capture_default_str();
        }
        app.add_option("--transform", transform, "squared | linear (default: squared for RBF, linear for poly)")
            ->check(CLI::IsMember({"squared", "linear"}));
        app.add_option("--epochs", cfg.epochs)->capture_default_str();
        app.add_option("--batch", cfg.batch_size)->capture_default_str();
        app.add_option("--gamma", cfg.gamma)->capture_default_str();
        app.add_option("--beta0", cfg.beta0)->capture_default_str();
        app.add_option("--decay", cfg.decay)->capture_default_str();
        app.add_option("--epsilon", cfg.epsilon)->capture_default_str();
        app.add_option("--seed", cfg.seed, "all randomness derives from this seed")->capture_default_str();
        app.add_option("--init", init, "gauss | lsq")->check(CLI::IsMember({"gauss", "lsq"}))->capture_default_str();
        app.add_option("--trace-every", cfg.trace_every)->capture_default_str();
        app.add_flag("--no-center-attributes", no_center_attributes, "only l2-normalize attribute vectors");
    }

    [[nodiscard]] Variant parsed_variant() const { return variant_from_string(variant); }
    [[nodiscard]] KernelFamily parsed_family() const { return kernel_family_from_string(kernel); }
    [[nodiscard]] std::optional<TransformStyle> parsed_transform() const {
        if (transform.empty()) { return std::nullopt; }
        return transform_style_from_string(transform);
    }
    [[nodiscard]] PreprocessOptions preprocess_options() const { return {!no_center_attributes}; }

    [[nodiscard]] TrainConfig config(int threads) const {
        TrainConfig c = cfg;
        c.init = init_kind_from_string(init);
        c.threads = threads;
        as_usage([&] { c.validate(); });
        return c;
    }

    void check_pairing() const {
        require((parsed_variant() == Variant::PolyPenalized) == (parsed_family() == KernelFamily::Polynomial),
                ErrorKind::Usage, "variant poly goes with kernel polynomial; ort/plain go with gaussian/cauchy");
    }

    [[nodiscard]] ObjectiveSpec objective() const {
        check_pairing();
        ObjectiveSpec o;
        as_usage([&] {
            o = objective_for(parsed_variant(), parsed_family(), HyperPoint{sigma, lambda, bias, degree, alpha},
                              parsed_transform());
        });
        return o;
    }

private:
    // Bad flag values are usage errors.
    template <typename F>
    static void as_usage(F &&f) {
        try {
            f();
        } catch (const Error &e) {
            throw Error(ErrorKind::Usage, e.what());
        }
    }
};

inline void write_text(const fs::path &path, const std::string &text) {
    if (path.has_parent_path()) { fs::create_directories(path.parent_path()); }
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out << text;
}

inline void write_json_file(const fs::path &path, const nlohmann::json &j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Commands

struct GenSynthArgs {
    std::string out;
    int classes = 10;
    int per_class = 30;
    int dim = 20;
    int attr_dim = 5;
    double noise = 0.05;
    std::uint64_t seed = 0;
    double train_frac = 0.6;
    double val_frac = 0.2;
    double seen_test_frac = 0.2;
};

inline void gen_synth(const GenSynthArgs &a, std::ostream &out) {
    const Dataset ds = generate_synthetic(a.classes, a.per_class, a.dim, a.attr_dim, a.noise, a.seed);
    const SplitSpec split = make_class_split(a.classes, a.train_frac, a.val_frac, a.seen_test_frac, a.seed);
    save_dataset(ds, a.out);
    save_split_spec(split, a.out);
    write_json_file(fs::path(a.out) / "gen_meta.json",
                    {{"classes", a.classes},
                     {"per_class", a.per_class},
                     {"dim", a.dim},
                     {"attr_dim", a.attr_dim},
                     {"noise", a.noise},
                     {"seed", a.seed},
                     {"train_frac", a.train_frac},
                     {"val_frac", a.val_frac},
                     {"seen_test_frac", a.seen_test_frac}});
    out << "wrote " << ds.size() << " samples of " << a.classes << " classes to " << a.out << '\n';
}

struct TrainArgs {
    std::string data;
    std::string out;
    std::string trace;
    TrainFlags flags;
};

/// Train on the split's training samples; val classes (if any) feed the trace's val accuracy.
inline TrainResult train_pipeline(const Dataset &ds, const SplitSpec &split, const ObjectiveSpec &ospec,
                                  const TrainConfig &cfg, PreprocessOptions options) {
    const Partition part = apply_split(ds, split);
    auto [pre, stats] = preprocess_on_samples(ds, part.train_samples, options);
    std::optional<ValProbe> probe;
    if (!part.val_samples.empty()) {
        probe = ValProbe{take_samples(pre, part.val_samples), candidates_for(pre, split.val_classes)};
    }
    return train(pre, part.train_samples, stats, ospec, cfg, probe ? &*probe : nullptr);
}

inline void train_cmd(const TrainArgs &a, int threads, std::ostream &out) {
    const Dataset ds = load_dataset(a.data);
    const SplitSpec split = load_split_spec(a.data);
    const auto result =
        train_pipeline(ds, split, a.flags.objective(), a.flags.config(threads), a.flags.preprocess_options());
    save_projection(result.model, a.out);
    if (!a.trace.empty()) {
        if (fs::path(a.trace).has_parent_path()) { fs::create_directories(fs::path(a.trace).parent_path()); }
        write_trace_csv(result.trace, a.trace);
    }
    out << "trained W " << result.model.w.rows() << "x" << result.model.w.cols() << " in "
        << result.model.train_meta.value("iterations", 0L) << " iterations; model written to " << a.out << '\n';
}

struct EvalArgs {
    std::string data;
    std::string model;
    std::string protocol = "standard";
    std::string out;
    std::string csv;
};

inline EvalReport evaluate_pipeline(const Dataset &ds, const SplitSpec &split, const Projection &model,
                                    Protocol protocol) {
    require(model.w.rows() == ds.dim() && model.w.cols() == ds.attr_dim(), ErrorKind::Shape,
            "model W is " + shape_str(model.w.rows(), model.w.cols()) + " but data has d=" + std::to_string(ds.dim()) +
                ", d'=" + std::to_string(ds.attr_dim()));
    const Partition part = apply_split(ds, split);
    const Dataset pre = apply_preprocess(ds, model.preprocess);
    const LabeledSamples unseen = take_samples(pre, part.unseen_test_samples);
    if (protocol == Protocol::Standard) { return evaluate_standard(model, unseen, candidates_for(pre, split.unseen_classes)); }
    std::set<ClassId> all = split.train_classes;
    all.insert(split.unseen_classes.begin(), split.unseen_classes.end());
    return evaluate_generalized(model, take_samples(pre, part.seen_test_samples), unseen, candidates_for(pre, all));
}

inline void eval_cmd(const EvalArgs &a, std::ostream &out) {
    const Dataset ds = load_dataset(a.data);
    const SplitSpec split = load_split_spec(a.data);
    const Projection model = load_projection(a.model);
    const Protocol protocol = a.protocol == "generalized" ? Protocol::Generalized : Protocol::Standard;
    const EvalReport report = evaluate_pipeline(ds, split, model, protocol);
    write_json_file(a.out, to_json(report));
    if (!a.csv.empty()) {
        if (fs::path(a.csv).has_parent_path()) { fs::create_directories(fs::path(a.csv).parent_path()); }
        write_report_csv(report, a.csv);
    }
    out << "protocol " << to_string(protocol) << ": top-1 " << percent(report.top1_mean);
    if (report.harmonic_h) {
        out << ", seen " << percent(*report.acc_seen) << ", unseen " << percent(*report.acc_unseen) << ", H "
            << percent(*report.harmonic_h);
    }
    out << ", incoherence " << report.incoherence << '\n';
}

struct CvArgs {
    std::string data;
    std::string grid;
    std::string out;
    std::string csv;
    std::string refit;
    TrainFlags flags;
};

inline void cv_cmd(const CvArgs &a, int threads, std::ostream &out) {
    const Dataset ds = load_dataset(a.data);
    const SplitSpec split = load_split_spec(a.data);
    const HyperGrid grid = a.grid.empty() ? HyperGrid{} : grid_from_json(detail::read_json(a.grid));
    a.flags.check_pairing();
    const Variant variant = a.flags.parsed_variant();
    const KernelFamily family = a.flags.parsed_family();
    const TrainConfig cfg = a.flags.config(threads);
    const CvSetup setup = make_cv_setup(ds, split, a.flags.preprocess_options());
    const CvResult result = grid_search(setup, variant, family, grid, cfg, a.flags.parsed_transform());
    write_json_file(a.out, to_json(result));
    if (!a.csv.empty()) {
        if (fs::path(a.csv).has_parent_path()) { fs::create_directories(fs::path(a.csv).parent_path()); }
        write_cv_csv(result, a.csv);
    }
    out << "evaluated " << result.table.size() << " grid points; best " << to_json(result.best, variant).dump() << '\n';
    if (!a.refit.empty()) {
        const auto refit = refit_best(ds, split, variant, family, result.best, cfg, a.flags.parsed_transform(),
                                      a.flags.preprocess_options());
        save_projection(refit.model, a.refit);
        out << "refit on train+val written to " << a.refit << '\n';
    }
}

inline nlohmann::json diagnostics(const Matrix &w) {
    const Matrix g = normalized_gram(w);
    const Vector norms = w.colwise().norm().transpose();
    double off_sum = 0.0;
    double off_max = 0.0;
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            if (i == j) { continue; }
            off_sum += std::abs(g(i, j));
            off_max = std::max(off_max, std::abs(g(i, j)));
        }
    }
    const auto n_off = static_cast<double>(g.rows() * (g.rows() - 1));
    return {{"incoherence", incoherence(w)},
            {"rows", w.rows()},
            {"cols", w.cols()},
            {"mean_abs_offdiag", n_off > 0 ? off_sum / n_off : 0.0},
            {"max_abs_offdiag", off_max},
            {"column_norm_min", norms.minCoeff()},
            {"column_norm_max", norms.maxCoeff()},
            {"column_norm_mean", norms.mean()}};
}

inline void diagnose_cmd(const std::string &model_path, const std::string &out_dir, std::ostream &out) {
    const Projection model = load_projection(model_path);
    fs::create_directories(out_dir);
    const Matrix g = normalized_gram(model.w);
    std::ofstream wtw(fs::path(out_dir) / "wtw.csv");
    require(static_cast<bool>(wtw), ErrorKind::Io, "cannot write wtw.csv");
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
            if (j > 0) { wtw << ','; }
            wtw << format_double(g(i, j));
        }
        wtw << '\n';
    }
    const auto diag = diagnostics(model.w);
    write_json_file(fs::path(out_dir) / "diag.json", diag);
    out << "incoherence " << diag["incoherence"].get<double>() << "; wrote wtw.csv and diag.json to " << out_dir << '\n';
}

/// Thread count: ZSKL_THREADS wins over --threads.
inline int resolve_threads(int flag_value) {
    if (const char *env = std::getenv("ZSKL_THREADS"); env != nullptr && *env != '\0') {
        const long long v = parse_int(env, "ZSKL_THREADS");
        require(v >= 1, ErrorKind::Usage, "ZSKL_THREADS must be >= 1");
        return static_cast<int>(v);
    }
    require(flag_value >= 1, ErrorKind::Usage, "--threads must be >= 1");
    return flag_value;
}

/// Entry point. Returns 0 on success, 2 on usage errors, 1 on runtime errors.
inline int run(const std::vector<std::string> &args, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    CLI::App app{"Zero-shot kernel learning: train, evaluate and diagnose kernel projections", "zskl"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (1 = bit-exact reference mode); ZSKL_THREADS overrides")
        ->capture_default_str();

    GenSynthArgs gen;
    auto *gen_cmd = app.add_subcommand("gen-synth", "write a synthetic zero-shot dataset");
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    gen_cmd->add_option("--classes", gen.classes)->capture_default_str();
    gen_cmd->add_option("--per-class", gen.per_class)->capture_default_str();
    gen_cmd->add_option("--dim", gen.dim)->capture_default_str();
    gen_cmd->add_option("--attr-dim", gen.attr_dim)->capture_default_str();
    gen_cmd->add_option("--noise", gen.noise)->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
    gen_cmd->add_option("--train-frac", gen.train_frac, "fraction of classes used for training")->capture_default_str();
    gen_cmd->add_option("--val-frac", gen.val_frac, "fraction of classes used for validation")->capture_default_str();
    gen_cmd->add_option("--seen-test-frac", gen.seen_test_frac, "per-class holdout of training classes")
        ->capture_default_str();

    TrainArgs tr;
    auto *train_sub = app.add_subcommand("train", "learn a projection W");
    train_sub->add_option("--data", tr.data, "dataset directory")->required();
    train_sub->add_option("--out", tr.out, "model.json path")->required();
    train_sub->add_option("--trace", tr.trace, "trace.csv path");
    tr.flags.add_to(*train_sub, true);

    EvalArgs ev;
    auto *eval_sub = app.add_subcommand("eval", "evaluate a model");
    eval_sub->add_option("--data", ev.data, "dataset directory")->required();
    eval_sub->add_option("--model", ev.model, "model.json")->required();
    eval_sub->add_option("--protocol", ev.protocol, "standard | generalized")
        ->check(CLI::IsMember({"standard", "generalized"}))
        ->capture_default_str();
    eval_sub->add_option("--out", ev.out, "report.json path")->required();
    eval_sub->add_option("--csv", ev.csv, "report.csv path");

    CvArgs cv;
    auto *cv_sub = app.add_subcommand("cv", "grid-search hyperparameters on the validation classes");
    cv_sub->add_option("--data", cv.data, "dataset directory")->required();
    cv_sub->add_option("--grid", cv.grid, "grid.json (default grids when omitted)");
    cv_sub->add_option("--out", cv.out, "cv_result.json path")->required();
    cv_sub->add_option("--csv", cv.csv, "cv_result.csv path");
    cv_sub->add_option("--refit", cv.refit, "write the best point refit on train+val to this model.json");
    cv.flags.add_to(*cv_sub, false);

    std::string diag_model;
    std::string diag_out;
    auto *diag_sub = app.add_subcommand("diagnose", "write W^T W and incoherence diagnostics");
    diag_sub->add_option("--model", diag_model, "model.json")->required();
    diag_sub->add_option("--out-dir", diag_out, "output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        const int n_threads = resolve_threads(threads);
        if (*gen_cmd) {
            gen_synth(gen, out);
        } else if (*train_sub) {
            train_cmd(tr, n_threads, out);
        } else if (*eval_sub) {
            eval_cmd(ev, out);
        } else if (*cv_sub) {
            cv_cmd(cv, n_threads, out);
        } else if (*diag_sub) {
            diagnose_cmd(diag_model, diag_out, out);
        }
    } catch (const Error &e) {
        err << nlohmann::json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump() << '\n';
        return e.kind() == ErrorKind::Usage ? 2 : 1;
    } catch (const std::exception &e) {
        err << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}

inline int run(int argc, char **argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) { args.emplace_back(argv[i]); }
    return run(args, out, err);
}

}  // namespace zskl::cli
