#include "symbreak/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace symbreak {

namespace {
constexpr int kDatasetFormatVersion = 1;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

Eigen::MatrixXd DataItem::valid_rows() const {
    if (mask.size() == 0) return x;
    Eigen::MatrixXd out(valid_points(), x.cols());
    int r = 0;
    for (int i = 0; i < x.rows(); ++i)
        if (mask(i) > 0.5) out.row(r++) = x.row(i);
    return out;
}

int LabeledDataset::max_points() const {
    int m = 0;
    for (const auto& it : items) m = std::max(m, static_cast<int>(it.x.rows()));
    return m;
}

void LabeledDataset::check_consistent() const {
    for (const auto& it : items) {
        if (it.x.cols() != point_dim)
            throw DimensionError("dataset items disagree on point dimension");
        if (!is_cloud && it.x.rows() != 1)
            throw DimensionError("vector dataset item must be a single row");
        if (it.mask.size() != 0 && it.mask.size() != it.x.rows())
            throw DimensionError("mask length must match point count");
    }
}

int feature_width(const LabeledDataset& data) {
    if (!data.is_cloud) return data.point_dim;
    const int m = data.max_points();
    return m * data.point_dim + m;
}

Eigen::VectorXd featurize_item(const DataItem& item, bool is_cloud, int point_dim,
                               int max_points) {
    if (!is_cloud) {
        if (item.x.rows() != 1 || item.x.cols() != point_dim)
            throw DimensionError("vector item shape mismatch");
        return item.x.row(0).transpose();
    }
    const int k = point_dim;
    Eigen::MatrixXd pts = item.valid_rows();
    if (pts.cols() != k || pts.rows() > max_points)
        throw DimensionError("cloud item does not fit the feature layout");
    std::vector<int> order(pts.rows());
    for (int r = 0; r < pts.rows(); ++r) order[r] = r;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        for (int c = 0; c < k; ++c) {
            if (pts(a, c) < pts(b, c)) return true;
            if (pts(a, c) > pts(b, c)) return false;
        }
        return false;
    });
    Eigen::VectorXd out = Eigen::VectorXd::Zero(max_points * k + max_points);
    for (int r = 0; r < pts.rows(); ++r) {
        for (int c = 0; c < k; ++c) out(r * k + c) = pts(order[r], c);
        out(max_points * k + r) = 1.0;
    }
    return out;
}

Eigen::MatrixXd featurize(const LabeledDataset& data) {
    data.check_consistent();
    const int n = data.size();
    if (!data.is_cloud) {
        Eigen::MatrixXd out(n, data.point_dim);
        for (int i = 0; i < n; ++i) out.row(i) = data.items[i].x.row(0);
        return out;
    }
    const int maxm = data.max_points();
    Eigen::MatrixXd out(n, maxm * data.point_dim + maxm);
    for (int i = 0; i < n; ++i)
        out.row(i) = featurize_item(data.items[i], true, data.point_dim, maxm).transpose();
    return out;
}

Eigen::MatrixXd featurize_at_width(const LabeledDataset& data, int width) {
    Eigen::MatrixXd f = featurize(data);
    if (f.cols() == width) return f;
    if (!data.is_cloud || f.cols() > width)
        throw DimensionError("dataset features wider than the requested layout");
    const int k = data.point_dim;
    const int maxm_local = data.max_points();
    const int maxm = width / (k + 1);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(f.rows(), width);
    out.block(0, 0, f.rows(), maxm_local * k) = f.block(0, 0, f.rows(), maxm_local * k);
    out.block(0, maxm * k, f.rows(), maxm_local) =
        f.block(0, maxm_local * k, f.rows(), maxm_local);
    return out;
}

Eigen::VectorXd labels_vector(const LabeledDataset& data) {
    Eigen::VectorXd y(data.size());
    for (int i = 0; i < data.size(); ++i) y(i) = data.items[i].label;
    return y;
}

void save_dataset(const LabeledDataset& data, const std::string& csv_path) {
    data.check_consistent();
    const int maxm = data.is_cloud ? data.max_points() : 1;
    const int k = data.point_dim;

    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot open " + csv_path + " for writing");
    csv << "id,label";
    for (int r = 0; r < maxm; ++r)
        for (int c = 0; c < k; ++c) csv << ",x" << r << "_" << c;
    for (int r = 0; r < maxm; ++r) csv << ",mask" << r;
    csv << "\n";
    for (int i = 0; i < data.size(); ++i) {
        const auto& it = data.items[i];
        csv << i << "," << fmt17(it.label);
        for (int r = 0; r < maxm; ++r)
            for (int c = 0; c < k; ++c)
                csv << "," << (r < it.x.rows() ? fmt17(it.x(r, c)) : "0");
        for (int r = 0; r < maxm; ++r) {
            const bool valid = r < it.x.rows() && (it.mask.size() == 0 || it.mask(r) > 0.5);
            csv << "," << (valid ? 1 : 0);
        }
        csv << "\n";
    }

    nlohmann::json meta;
    meta["format_version"] = kDatasetFormatVersion;
    meta["is_cloud"] = data.is_cloud;
    meta["point_dim"] = k;
    meta["max_points"] = maxm;
    meta["n_items"] = data.size();
    meta["label_space"] = data.label_space == LabelSpace::Binary  ? "binary"
                          : data.label_space == LabelSpace::Classes ? "classes"
                                                                    : "real";
    meta["n_classes"] = data.n_classes;
    std::ofstream side(csv_path + ".json");
    if (!side) throw ConfigError("cannot open " + csv_path + ".json for writing");
    side << meta.dump(2) << "\n";
}

LabeledDataset load_dataset(const std::string& csv_path) {
    std::ifstream side(csv_path + ".json");
    if (!side) throw ConfigError("missing dataset sidecar " + csv_path + ".json");
    nlohmann::json meta = nlohmann::json::parse(side);
    if (meta.value("format_version", -1) != kDatasetFormatVersion)
        throw ConfigError("unsupported dataset format_version in " + csv_path + ".json");

    LabeledDataset data;
    data.is_cloud = meta.at("is_cloud").get<bool>();
    data.point_dim = meta.at("point_dim").get<int>();
    const int maxm = meta.at("max_points").get<int>();
    const std::string ls = meta.at("label_space").get<std::string>();
    data.label_space = ls == "binary" ? LabelSpace::Binary
                       : ls == "classes" ? LabelSpace::Classes
                                         : LabelSpace::Real;
    data.n_classes = meta.value("n_classes", 2);

    std::ifstream csv(csv_path);
    if (!csv) throw ConfigError("cannot open " + csv_path);
    std::string line;
    std::getline(csv, line);  // header
    const int k = data.point_dim;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        const std::size_t expected = 2 + static_cast<std::size_t>(maxm) * k + maxm;
        if (cells.size() != expected)
            throw ConfigError("malformed dataset row in " + csv_path);
        DataItem it;
        it.label = cells[1];
        int valid = 0;
        for (int r = 0; r < maxm; ++r)
            if (cells[2 + maxm * k + r] > 0.5) ++valid;
        if (!data.is_cloud) {
            it.x.resize(1, k);
            for (int c = 0; c < k; ++c) it.x(0, c) = cells[2 + c];
        } else {
            it.x.resize(valid, k);
            int rr = 0;
            for (int r = 0; r < maxm; ++r) {
                if (cells[2 + maxm * k + r] <= 0.5) continue;
                for (int c = 0; c < k; ++c) it.x(rr, c) = cells[2 + r * k + c];
                ++rr;
            }
        }
        data.items.push_back(std::move(it));
    }
    data.check_consistent();
    return data;
}

}  // namespace symbreak
