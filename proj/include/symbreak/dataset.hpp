#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "symbreak/errors.hpp"

namespace symbreak {

/// One data point: a d-vector stored as a 1 x d row, or an m x k point
/// cloud. `mask` is per-point validity for variable-size clouds (empty =
/// all rows valid).
struct DataItem {
    Eigen::MatrixXd x;
    Eigen::VectorXd mask;
    double label = 0.0;

    int valid_points() const {
        if (mask.size() == 0) return static_cast<int>(x.rows());
        int n = 0;
        for (int i = 0; i < mask.size(); ++i)
            if (mask(i) > 0.5) ++n;
        return n;
    }
    /// Valid rows, compacted in original order.
    Eigen::MatrixXd valid_rows() const;
};

enum class LabelSpace { Binary, Classes, Real };

struct LabeledDataset {
    std::vector<DataItem> items;
    bool is_cloud = false;  // false: every item is a single 1 x d row
    int point_dim = 0;      // columns per item
    LabelSpace label_space = LabelSpace::Binary;
    int n_classes = 2;

    int size() const { return static_cast<int>(items.size()); }
    bool empty() const { return items.empty(); }
    int max_points() const;
    void check_consistent() const;
};

/// Flatten a dataset to an n x F feature matrix for the MLP. Vectors pass
/// through; clouds are order-canonicalized by sorting valid points
/// lexicographically, zero-padded to the largest cloud, with the validity
/// mask appended as extra features.
Eigen::MatrixXd featurize(const LabeledDataset& data);
Eigen::VectorXd labels_vector(const LabeledDataset& data);

/// Feature width featurize() will produce without materializing it.
int feature_width(const LabeledDataset& data);

/// featurize() repacked to a target width, so splits whose largest clouds
/// differ still produce aligned coordinate and mask blocks.
Eigen::MatrixXd featurize_at_width(const LabeledDataset& data, int width);

/// Feature row for a single item under the same layout featurize() uses;
/// `max_points` fixes the padded cloud size (ignored for vector items).
Eigen::VectorXd featurize_item(const DataItem& item, bool is_cloud, int point_dim,
                               int max_points);

/// Dataset files: a flat CSV (id, label, flattened coordinates, mask bits)
/// plus a JSON sidecar (same path with extension .json) carrying
/// format_version and shape metadata.
void save_dataset(const LabeledDataset& data, const std::string& csv_path);
LabeledDataset load_dataset(const std::string& csv_path);

}  // namespace symbreak
