#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cpids/ann.hpp"
#include "cpids/forest.hpp"
#include "cpids/knn.hpp"
#include "cpids/svm.hpp"
#include "cpids/types.hpp"

namespace cpids {

enum class ClassifierFamily { RF, KNN, SVM, ANN };

ClassifierFamily parse_family(const std::string& name);
const char* family_name(ClassifierFamily family);

struct ClassifierSpec {
    ClassifierFamily family = ClassifierFamily::RF;
    ForestSpec rf;
    KnnSpec knn;
    SvmSpec svm;
    AnnSpec ann;
};

struct TrainedClassifier {
    ClassifierFamily family = ClassifierFamily::RF;
    std::vector<EventLabel> classes; // classes seen in training
    std::uint64_t seed = 0;
    std::optional<RandomForest> rf;
    std::optional<KnnModel> knn;
    std::optional<SvmModel> svm;
    std::optional<AnnModel> ann;
};

// Trains the requested family; all randomness comes from the passed generator.
TrainedClassifier train_classifier(const Eigen::MatrixXd& X, const std::vector<EventLabel>& y,
                                   const ClassifierSpec& spec, std::uint64_t seed);

std::vector<EventLabel> classifier_predict(const TrainedClassifier& model, const Eigen::MatrixXd& rows);

// Per-class scores summing to 1 per row: vote shares (RF, SVM), weighted
// neighbor votes (KNN) or softmax probabilities (ANN).
Eigen::MatrixXd classifier_scores(const TrainedClassifier& model, const Eigen::MatrixXd& rows);

nlohmann::json classifier_to_json(const TrainedClassifier& model);
TrainedClassifier classifier_from_json(const nlohmann::json& j);

} // namespace cpids
