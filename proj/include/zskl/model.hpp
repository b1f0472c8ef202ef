#pragma once

#include "zskl/common.hpp"
#include "zskl/data.hpp"
#include "zskl/kernels.hpp"
#include "zskl/objective.hpp"

#include "json.hpp"

#include <filesystem>
#include <vector>

namespace zskl {

/// A learned projection together with everything needed to apply it to new data.
struct Projection {
    Matrix w;  // d x d'
    ObjectiveSpec objective;
    PreprocessStats preprocess;
    nlohmann::json train_meta = nlohmann::json::object();

    [[nodiscard]] const KernelSpec &kernel() const { return objective.kernel; }
};

inline nlohmann::json matrix_to_json(const Matrix &m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) { data.push_back(m(i, j)); }
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Matrix matrix_from_json(const nlohmann::json &j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    require(rows >= 0 && cols >= 0 && static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorKind::Format,
            "matrix data length does not match rows*cols");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) { m(i, j2) = data[static_cast<std::size_t>(i * cols + j2)]; }
    }
    return m;
}

inline std::vector<double> to_std(const Vector &v) { return {v.data(), v.data() + v.size()}; }

inline Vector vector_from_json(const nlohmann::json &j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json to_json(const ObjectiveSpec &o) {
    return {{"variant", to_string(o.variant)},
            {"lambda", o.lambda},
            {"alpha", o.alpha},
            {"transform", to_string(o.transform_style)}};
}

inline nlohmann::json to_json(const Projection &p) {
    return {{"w", matrix_to_json(p.w)},
            {"kernel", to_json(p.objective.kernel)},
            {"objective", to_json(p.objective)},
            {"preprocess",
             {{"feature_mean", to_std(p.preprocess.feature_mean)},
              {"attribute_norms", to_std(p.preprocess.attribute_norms)},
              {"attribute_mean", to_std(p.preprocess.attribute_mean)}}},
            {"train_meta", p.train_meta}};
}

inline Projection projection_from_json(const nlohmann::json &j) {
    try {
        Projection p;
        p.w = matrix_from_json(j.at("w"));
        p.objective.kernel = kernel_from_json(j.at("kernel"));
        const auto &o = j.at("objective");
        p.objective.variant = variant_from_string(o.at("variant").get<std::string>());
        p.objective.lambda = o.at("lambda").get<double>();
        p.objective.alpha = o.value("alpha", 0.0);
        p.objective.transform_style = transform_style_from_string(o.at("transform").get<std::string>());
        p.objective.validate();
        p.preprocess.feature_mean = vector_from_json(j.at("preprocess").at("feature_mean"));
        if (j.at("preprocess").contains("attribute_norms")) {
            p.preprocess.attribute_norms = vector_from_json(j.at("preprocess").at("attribute_norms"));
        }
        if (j.at("preprocess").contains("attribute_mean")) {
            p.preprocess.attribute_mean = vector_from_json(j.at("preprocess").at("attribute_mean"));
        }
        p.train_meta = j.value("train_meta", nlohmann::json::object());
        require(p.w.size() > 0, ErrorKind::Format, "model: empty W");
        require(p.w.allFinite(), ErrorKind::Format, "model: non-finite entry in W");
        require(p.preprocess.feature_mean.size() == p.w.rows(), ErrorKind::Format,
                "model: feature_mean length does not match W rows");
        require(p.preprocess.attribute_mean.size() == 0 || p.preprocess.attribute_mean.size() == p.w.cols(),
                ErrorKind::Format, "model: attribute_mean length does not match W cols");
        return p;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::Format, std::string("model: ") + e.what());
    }
}

inline void save_projection(const Projection &p, const std::filesystem::path &path) {
    if (path.has_parent_path()) { std::filesystem::create_directories(path.parent_path()); }
    detail::write_json(path, to_json(p));
}

inline Projection load_projection(const std::filesystem::path &path) {
    return projection_from_json(detail::read_json(path));
}

}  // namespace zskl
