#pragma once

#include "zskl/common.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace zskl {

/// Zero-shot dataset. Features and attributes are stored column-per-item;
/// labels are 1-based class ids indexing attribute columns.
struct Dataset {
    Matrix features;                      // d x N
    std::vector<ClassId> labels;          // length N, values in [1..C]
    Matrix attributes;                    // d' x C
    std::vector<std::string> class_names; // empty or length C

    [[nodiscard]] Eigen::Index dim() const { return features.rows(); }
    [[nodiscard]] Eigen::Index attr_dim() const { return attributes.rows(); }
    [[nodiscard]] std::size_t size() const { return labels.size(); }
    [[nodiscard]] int num_classes() const { return static_cast<int>(attributes.cols()); }

    [[nodiscard]] auto attribute(ClassId c) const { return attributes.col(c - 1); }
};

struct SplitSpec {
    std::set<ClassId> train_classes;
    std::set<ClassId> val_classes;
    std::set<ClassId> unseen_classes;
    double seen_test_fraction = 0.0;
    std::uint64_t seed = 0;
};

struct PreprocessStats {
    Vector feature_mean;
    Vector attribute_norms;  // norms of the (centered) attribute columns before scaling
    Vector attribute_mean;   // zero when attribute centering is off
};

struct PreprocessOptions {
    /// Subtract the training-sample mean attribute vector before normalizing.
    bool center_attributes = true;
};

/// Sample-index partition produced by apply_split. Indices are ascending.
struct Partition {
    std::vector<std::size_t> train_samples;
    std::vector<std::size_t> val_samples;
    std::vector<std::size_t> seen_test_samples;
    std::vector<std::size_t> unseen_test_samples;
};

inline void validate(const Dataset &ds) {
    require(ds.features.rows() >= 1 && ds.features.cols() >= 1, ErrorKind::Shape, "features must be non-empty");
    require(ds.attributes.rows() >= 1, ErrorKind::Shape, "attribute dimension must be >= 1");
    require(ds.attributes.cols() >= 2, ErrorKind::Shape, "need at least 2 classes");
    require(static_cast<Eigen::Index>(ds.labels.size()) == ds.features.cols(), ErrorKind::Shape,
            "labels length " + std::to_string(ds.labels.size()) + " != number of samples " +
                std::to_string(ds.features.cols()));
    require(ds.class_names.empty() || static_cast<int>(ds.class_names.size()) == ds.num_classes(),
            ErrorKind::Shape, "class_names length must match number of classes");
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        const ClassId l = ds.labels[i];
        require(l >= 1 && l <= ds.num_classes(), ErrorKind::Domain,
                "label out of range: sample " + std::to_string(i) + " has class " + std::to_string(l) + " but only " +
                    std::to_string(ds.num_classes()) + " attribute columns");
    }
    require(ds.features.allFinite(), ErrorKind::Numeric, "features: non-finite entry");
    require(ds.attributes.allFinite(), ErrorKind::Numeric, "attributes: non-finite entry");
}

inline void validate(const SplitSpec &spec, int num_classes) {
    auto check_range = [&](const std::set<ClassId> &s, const char *name) {
        for (ClassId c : s) {
            require(c >= 1 && c <= num_classes, ErrorKind::Domain,
                    std::string(name) + " contains class " + std::to_string(c) + " outside [1.." +
                        std::to_string(num_classes) + "]");
        }
    };
    check_range(spec.train_classes, "train_classes");
    check_range(spec.val_classes, "val_classes");
    check_range(spec.unseen_classes, "unseen_classes");
    auto check_disjoint = [](const std::set<ClassId> &a, const std::set<ClassId> &b, const char *what) {
        for (ClassId c : a) {
            require(!b.contains(c), ErrorKind::Domain, std::string(what) + " overlap on class " + std::to_string(c));
        }
    };
    check_disjoint(spec.train_classes, spec.val_classes, "train/val");
    check_disjoint(spec.train_classes, spec.unseen_classes, "train/unseen");
    check_disjoint(spec.val_classes, spec.unseen_classes, "val/unseen");
    require(!spec.unseen_classes.empty(), ErrorKind::Domain, "unseen_classes must be non-empty");
    require(spec.seen_test_fraction >= 0.0 && spec.seen_test_fraction < 1.0, ErrorKind::Domain,
            "seen_test_fraction must lie in [0,1)");
}

// ---------------------------------------------------------------------------
// CSV / JSON IO

namespace detail {

inline std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path &path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "missing file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) { continue; }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) { fields.push_back(field); }
        if (!line.empty() && line.back() == ',') { fields.emplace_back(); }
        rows.push_back(std::move(fields));
    }
    return rows;
}

/// Reads a rows x cols numeric table and returns it transposed (one column per row of the file).
inline Matrix read_csv_matrix_transposed(const std::filesystem::path &path) {
    const auto rows = read_csv_rows(path);
    require(!rows.empty(), ErrorKind::Format, path.string() + ": empty file");
    const std::size_t width = rows.front().size();
    Matrix out(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string where = path.filename().string() + " row " + std::to_string(r + 1);
        require(rows[r].size() == width, ErrorKind::Format,
                where + ": malformed CSV row, expected " + std::to_string(width) + " fields, got " +
                    std::to_string(rows[r].size()));
        for (std::size_t c = 0; c < width; ++c) {
            const double v = parse_double(rows[r][c], where);
            require(std::isfinite(v), ErrorKind::Numeric, where + ": non-finite entry");
            out(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = v;
        }
    }
    return out;
}

inline void write_csv_matrix_transposed(const std::filesystem::path &path, const Matrix &m) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (i > 0) { out << ','; }
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

inline nlohmann::json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Io, "missing file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path &path, const nlohmann::json &j) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace detail

inline nlohmann::json to_json(const SplitSpec &s) {
    return {{"train_classes", std::vector<ClassId>(s.train_classes.begin(), s.train_classes.end())},
            {"val_classes", std::vector<ClassId>(s.val_classes.begin(), s.val_classes.end())},
            {"unseen_classes", std::vector<ClassId>(s.unseen_classes.begin(), s.unseen_classes.end())},
            {"seen_test_fraction", s.seen_test_fraction},
            {"seed", s.seed}};
}

inline SplitSpec split_from_json(const nlohmann::json &j) {
    try {
        SplitSpec s;
        for (ClassId c : j.at("train_classes")) { s.train_classes.insert(c); }
        for (ClassId c : j.value("val_classes", std::vector<ClassId>{})) { s.val_classes.insert(c); }
        for (ClassId c : j.at("unseen_classes")) { s.unseen_classes.insert(c); }
        s.seen_test_fraction = j.value("seen_test_fraction", 0.0);
        s.seed = j.value("seed", std::uint64_t{0});
        return s;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::Format, std::string("splits.json: ") + e.what());
    }
}

inline SplitSpec load_split_spec(const std::filesystem::path &dir) {
    return split_from_json(detail::read_json(dir / "splits.json"));
}

/// Loads features.csv / labels.csv / attributes.csv. splits.json must be
/// present; read it with load_split_spec.
inline Dataset load_dataset(const std::filesystem::path &dir) {
    for (const char *name : {"features.csv", "labels.csv", "attributes.csv", "splits.json"}) {
        require(std::filesystem::exists(dir / name), ErrorKind::Io, "missing file: " + (dir / name).string());
    }
    Dataset ds;
    ds.features = detail::read_csv_matrix_transposed(dir / "features.csv");
    ds.attributes = detail::read_csv_matrix_transposed(dir / "attributes.csv");
    const auto rows = detail::read_csv_rows(dir / "labels.csv");
    ds.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string where = "labels.csv row " + std::to_string(r + 1);
        require(rows[r].size() == 1, ErrorKind::Format, where + ": malformed CSV row, expected one integer");
        ds.labels.push_back(static_cast<ClassId>(parse_int(rows[r][0], where)));
    }
    validate(ds);
    return ds;
}

inline void save_dataset(const Dataset &ds, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    detail::write_csv_matrix_transposed(dir / "features.csv", ds.features);
    detail::write_csv_matrix_transposed(dir / "attributes.csv", ds.attributes);
    std::ofstream out(dir / "labels.csv");
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write labels.csv");
    for (ClassId l : ds.labels) { out << l << '\n'; }
}

inline void save_split_spec(const SplitSpec &spec, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    detail::write_json(dir / "splits.json", to_json(spec));
}

// ---------------------------------------------------------------------------
// Preprocessing

inline Vector attribute_norms(const Matrix &attributes) {
    Vector norms = attributes.colwise().norm().transpose();
    for (Eigen::Index c = 0; c < norms.size(); ++c) {
        require(norms(c) > 0.0, ErrorKind::Domain, "attribute column " + std::to_string(c + 1) + " has zero norm");
    }
    return norms;
}

/// Subtracts the feature mean from every sample; subtracts the attribute mean
/// from every attribute column and scales each column to unit l2 norm.
inline Dataset apply_preprocess(const Dataset &ds, const Vector &feature_mean, const Vector &attribute_mean) {
    require(feature_mean.size() == ds.dim(), ErrorKind::Shape, "feature mean dimension mismatch");
    require(attribute_mean.size() == ds.attr_dim(), ErrorKind::Shape, "attribute mean dimension mismatch");
    Dataset out = ds;
    out.features.colwise() -= feature_mean;
    out.attributes.colwise() -= attribute_mean;
    const Vector norms = attribute_norms(out.attributes);
    out.attributes = out.attributes * norms.cwiseInverse().asDiagonal();
    return out;
}

inline Dataset apply_preprocess(const Dataset &ds, const PreprocessStats &stats) {
    const Vector attr_mean =
        stats.attribute_mean.size() == 0 ? Vector::Zero(ds.attr_dim()) : stats.attribute_mean;
    return apply_preprocess(ds, stats.feature_mean, attr_mean);
}

/// Means are taken over the given samples (attributes replicated per sample).
inline std::pair<Dataset, PreprocessStats> preprocess_on_samples(const Dataset &ds,
                                                                 const std::vector<std::size_t> &samples,
                                                                 PreprocessOptions options = {}) {
    require(!samples.empty(), ErrorKind::Domain, "preprocess: no training samples");
    PreprocessStats stats;
    stats.feature_mean = Vector::Zero(ds.dim());
    stats.attribute_mean = Vector::Zero(ds.attr_dim());
    for (std::size_t i : samples) {
        stats.feature_mean += ds.features.col(static_cast<Eigen::Index>(i));
        if (options.center_attributes) { stats.attribute_mean += ds.attribute(ds.labels[i]); }
    }
    stats.feature_mean /= static_cast<double>(samples.size());
    stats.attribute_mean /= static_cast<double>(samples.size());
    Matrix centered = ds.attributes;
    centered.colwise() -= stats.attribute_mean;
    stats.attribute_norms = attribute_norms(centered);
    return {apply_preprocess(ds, stats.feature_mean, stats.attribute_mean), std::move(stats)};
}

/// Means over all samples of the training classes, applied to every sample.
inline std::pair<Dataset, PreprocessStats> preprocess(const Dataset &ds, const std::set<ClassId> &train_classes,
                                                      PreprocessOptions options = {}) {
    std::vector<std::size_t> samples;
    std::set<ClassId> seen;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (train_classes.contains(ds.labels[i])) {
            samples.push_back(i);
            seen.insert(ds.labels[i]);
        }
    }
    for (ClassId c : train_classes) {
        require(seen.contains(c), ErrorKind::Domain, "train class " + std::to_string(c) + " has no samples");
    }
    return preprocess_on_samples(ds, samples, options);
}

/// Column i is the attribute vector of sample i's class.
inline Matrix replicate_attributes(const Dataset &ds) {
    Matrix y(ds.attr_dim(), static_cast<Eigen::Index>(ds.size()));
    for (std::size_t i = 0; i < ds.size(); ++i) { y.col(static_cast<Eigen::Index>(i)) = ds.attribute(ds.labels[i]); }
    return y;
}

// ---------------------------------------------------------------------------
// Splitting

inline std::map<ClassId, std::vector<std::size_t>> samples_by_class(const std::vector<ClassId> &labels) {
    std::map<ClassId, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < labels.size(); ++i) { out[labels[i]].push_back(i); }
    return out;
}

inline Partition apply_split(const Dataset &ds, const SplitSpec &spec) {
    validate(spec, ds.num_classes());
    const auto by_class = samples_by_class(ds.labels);
    Rng rng(spec.seed);
    Partition p;
    for (ClassId c : spec.train_classes) {
        auto it = by_class.find(c);
        std::vector<std::size_t> members = it == by_class.end() ? std::vector<std::size_t>{} : it->second;
        const auto holdout = static_cast<std::size_t>(std::floor(spec.seen_test_fraction * static_cast<double>(members.size())));
        shuffle(members, rng);
        require(members.size() > holdout, ErrorKind::Domain,
                "train class " + std::to_string(c) + " has no samples remaining after holdout");
        p.seen_test_samples.insert(p.seen_test_samples.end(), members.begin(), members.begin() + static_cast<long>(holdout));
        p.train_samples.insert(p.train_samples.end(), members.begin() + static_cast<long>(holdout), members.end());
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (spec.val_classes.contains(ds.labels[i])) { p.val_samples.push_back(i); }
        if (spec.unseen_classes.contains(ds.labels[i])) { p.unseen_test_samples.push_back(i); }
    }
    std::sort(p.train_samples.begin(), p.train_samples.end());
    std::sort(p.seen_test_samples.begin(), p.seen_test_samples.end());
    return p;
}

/// Columns of `m` selected by sample index.
inline Matrix select_columns(const Matrix &m, const std::vector<std::size_t> &idx) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) { out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k])); }
    return out;
}

inline std::vector<ClassId> select_labels(const std::vector<ClassId> &labels, const std::vector<std::size_t> &idx) {
    std::vector<ClassId> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) { out.push_back(labels[i]); }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticData {
    Dataset dataset;
    Matrix lift;  // d x d', orthonormal columns
};

/// Class c draws features G a_c + noise, with a_c unit-norm Gaussian attributes
/// and G a random orthonormal lift. Samples are ordered class-major.
inline SyntheticData generate_synthetic_with_lift(int n_classes, int per_class, int d, int d_attr, double noise_sigma,
                                                  std::uint64_t seed) {
    require(d_attr >= 1 && d >= d_attr, ErrorKind::Domain, "generate_synthetic: need d >= d_attr >= 1");
    require(n_classes >= 2, ErrorKind::Domain, "generate_synthetic: need at least 2 classes");
    require(per_class >= 1, ErrorKind::Domain, "generate_synthetic: need per_class >= 1");
    require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorKind::Domain, "generate_synthetic: noise must be >= 0");
    Rng rng(seed);
    Matrix attrs(d_attr, n_classes);
    for (Eigen::Index c = 0; c < attrs.cols(); ++c) {
        for (Eigen::Index k = 0; k < attrs.rows(); ++k) { attrs(k, c) = standard_normal(rng); }
    }
    attrs = attrs * attribute_norms(attrs).cwiseInverse().asDiagonal();

    Matrix gauss(d, d_attr);
    for (Eigen::Index c = 0; c < gauss.cols(); ++c) {
        for (Eigen::Index r = 0; r < gauss.rows(); ++r) { gauss(r, c) = standard_normal(rng); }
    }
    Eigen::HouseholderQR<Matrix> qr(gauss);
    Matrix lift = qr.householderQ() * Matrix::Identity(d, d_attr);

    SyntheticData out;
    out.lift = lift;
    Dataset &ds = out.dataset;
    ds.attributes = attrs;
    ds.features.resize(d, static_cast<Eigen::Index>(n_classes) * per_class);
    ds.labels.reserve(static_cast<std::size_t>(n_classes) * per_class);
    Eigen::Index col = 0;
    for (int c = 1; c <= n_classes; ++c) {
        const Vector clean = lift * attrs.col(c - 1);
        for (int k = 0; k < per_class; ++k, ++col) {
            ds.features.col(col) = clean;
            if (noise_sigma > 0.0) {
                for (Eigen::Index r = 0; r < d; ++r) { ds.features(r, col) += noise_sigma * standard_normal(rng); }
            }
            ds.labels.push_back(c);
        }
    }
    return out;
}

inline Dataset generate_synthetic(int n_classes, int per_class, int d, int d_attr, double noise_sigma,
                                  std::uint64_t seed) {
    return generate_synthetic_with_lift(n_classes, per_class, d, d_attr, noise_sigma, seed).dataset;
}

/// Seeded class split: round(train_frac*C) train classes, round(val_frac*C)
/// val classes, the rest unseen.
inline SplitSpec make_class_split(int n_classes, double train_frac, double val_frac, double seen_test_fraction,
                                  std::uint64_t seed) {
    require(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0, ErrorKind::Domain,
            "class split fractions must satisfy train > 0, val >= 0, train + val < 1");
    const int n_train = std::max(1, static_cast<int>(std::lround(train_frac * n_classes)));
    const int n_val = static_cast<int>(std::lround(val_frac * n_classes));
    require(n_train + n_val < n_classes, ErrorKind::Domain, "class split leaves no unseen classes");
    std::vector<ClassId> order(static_cast<std::size_t>(n_classes));
    for (int c = 0; c < n_classes; ++c) { order[static_cast<std::size_t>(c)] = c + 1; }
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    shuffle(order, rng);
    SplitSpec s;
    s.seen_test_fraction = seen_test_fraction;
    s.seed = seed;
    for (int k = 0; k < n_classes; ++k) {
        const ClassId c = order[static_cast<std::size_t>(k)];
        if (k < n_train) {
            s.train_classes.insert(c);
        } else if (k < n_train + n_val) {
            s.val_classes.insert(c);
        } else {
            s.unseen_classes.insert(c);
        }
    }
    return s;
}

}  // namespace zskl
