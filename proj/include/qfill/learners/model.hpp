// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qfill/core/dataset.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace qfill::learners {

/// Dense row-major design matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }
    [[nodiscard]] std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    double &operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Rows `idx` of X.
Matrix take_rows(const Matrix &x, std::span<const std::size_t> idx);

struct LabeledData {
    Matrix x;
    std::vector<int> y;
};

/// Labeled events of a dataset, in order.
LabeledData labeled_data(const EventDataset &dataset);
LabeledData labeled_data(std::span<const TradeEvent> events, std::size_t feature_count);

// ------------------------------------------------------------------ specs

enum class Family { LR, GBT, RF, MLP };

/// "lr", "gbt", "rf", "mlp".
std::string_view to_string(Family f) noexcept;
/// Table labels "LR", "XGB", "RF", "NN".
std::string_view display_name(Family f) noexcept;
/// Accepts to_string() and display_name() forms, case-sensitive.
/// Throws Error{InvalidArgument}.
Family family_from_string(std::string_view s);

struct LrParams {
    double C = 1.0;
    std::size_t max_iter = 10000;
};

struct GbtParams {
    std::size_t max_depth = 3;
    std::size_t n_estimators = 100;
    double learning_rate = 0.1;
    double lambda = 1.0;
    double min_child_weight = 1.0;
    std::size_t max_bins = 255;
};

enum class Criterion { Gini, Entropy, LogLoss };

struct RfParams {
    Criterion criterion = Criterion::Gini;
    std::size_t n_estimators = 100;
    std::size_t max_depth = 0;  ///< 0 = grow until pure
    std::size_t max_bins = 255;
};

enum class Activation { Relu, Logistic, Tanh };
enum class Schedule { Constant, InvScaling, Adaptive };

struct MlpParams {
    std::vector<std::size_t> hidden{100};
    Activation activation = Activation::Relu;
    Schedule schedule = Schedule::Constant;
    std::size_t max_iter = 200;  ///< epochs
    double learning_rate_init = 0.01;
    double alpha = 1e-4;  ///< L2 penalty
    std::size_t batch_size = 200;
    double momentum = 0.9;
    double tol = 1e-4;
    std::size_t n_iter_no_change = 10;
};

using Hyperparams = std::variant<LrParams, GbtParams, RfParams, MlpParams>;

Family family_of(const Hyperparams &h) noexcept;

struct ModelSpec {
    Hyperparams params;
    std::uint64_t seed = 0;

    [[nodiscard]] Family family() const noexcept { return family_of(params); }
};

/// round({1.2p, 0.9p, 0.6p, 0.3p}) truncated to `depth` (1..4), each >= 1.
std::vector<std::size_t> mlp_hidden_sizes(std::size_t p, std::size_t depth);

// ----------------------------------------------------------------- models

struct LogisticModel {
    std::vector<double> weights;
    double intercept = 0.0;
    std::size_t iterations = 0;
};

struct TreeNode {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;  ///< x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    [[nodiscard]] double predict(std::span<const double> x) const;
};

struct GbtModel {
    double base_score = 0.0;  ///< log-odds
    double learning_rate = 0.1;
    std::vector<Tree> trees;
};

struct RfModel {
    std::vector<Tree> trees;  ///< leaves hold class-1 frequencies
};

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  ///< out x in, row-major
    std::vector<double> bias;
};

struct MlpModel {
    Activation activation = Activation::Relu;
    std::vector<DenseLayer> layers;  ///< last layer has one logistic unit
    std::size_t epochs = 0;
};

using ModelParams = std::variant<LogisticModel, GbtModel, RfModel, MlpModel>;

struct TrainedModel {
    ModelSpec spec;
    std::size_t n_features = 0;
    ModelParams params;
    std::size_t grid_cell = 0;
    double validation_auc = std::numeric_limits<double>::quiet_NaN();

    [[nodiscard]] Family family() const noexcept { return spec.family(); }
};

/// Throws Error{SingleClassTraining | NonFiniteFeature | DimensionMismatch}.
/// RF accepts single-class data (its leaves then predict that class).
TrainedModel train(const ModelSpec &spec, const Matrix &x, std::span<const int> y);

/// Probabilities in [0, 1]. Throws Error{DimensionMismatch}.
std::vector<double> predict_proba(const TrainedModel &model, const Matrix &x);
double predict_one(const TrainedModel &model, std::span<const double> x);

// Family trainers; inputs already validated.
LogisticModel train_logistic(const LrParams &p, const Matrix &x, std::span<const int> y);
GbtModel train_gbt(const GbtParams &p, const Matrix &x, std::span<const int> y);
RfModel train_rf(const RfParams &p, const Matrix &x, std::span<const int> y, std::uint64_t seed);
MlpModel train_mlp(const MlpParams &p, const Matrix &x, std::span<const int> y,
                   std::uint64_t seed);

double predict_logistic(const LogisticModel &m, std::span<const double> x);
double predict_gbt(const GbtModel &m, std::span<const double> x);
double predict_rf(const RfModel &m, std::span<const double> x);
double predict_mlp(const MlpModel &m, std::span<const double> x);

/// Mean log-loss plus ||w||^2 / (2 C n) at params = (w..., b), with gradient.
std::pair<double, std::vector<double>> logistic_objective(std::span<const double> params,
                                                          const Matrix &x,
                                                          std::span<const int> y, double C);

// ---------------------------------------------------------- serialization

nlohmann::json to_json(const Hyperparams &h);
/// Throws Error{ConfigParse}. Requires a "family" key.
Hyperparams hyperparams_from_json(const nlohmann::json &j);

nlohmann::json to_json(const TrainedModel &m);
/// Throws Error{ConfigParse}.
TrainedModel model_from_json(const nlohmann::json &j);
/// SHA-256 of the serialized model.
std::string checksum(const TrainedModel &m);

// ------------------------------------------------------------------- grid

struct CvConfig {
    std::size_t folds = 4;
    std::uint64_t seed = 0;
    /// A single-cell grid skips cross-validation and fits directly.
    bool skip_single_cell = true;
};

/// Evaluates each cell by mean k-fold validation AUC over shuffled,
/// unstratified folds and refits the best cell (first wins ties) on all
/// data with seed cv.seed. Throws Error{InvalidArgument} on an empty grid,
/// plus anything train() throws.
TrainedModel grid_search_cv(const std::vector<Hyperparams> &grid, const Matrix &x,
                            std::span<const int> y, const CvConfig &cv);

/// Full search spaces of the reference configuration; the LR solver axis
/// is dropped. MLP shapes derive from p via mlp_hidden_sizes.
std::vector<Hyperparams> reference_grid(Family f, std::size_t p);

} // namespace qfill::learners
