#pragma once

#include <string>
#include <vector>

namespace lq {

enum class KernelType { linear, polynomial, rbf, tanh_sigmoid };

struct KernelSpec {
    KernelType type = KernelType::rbf;
    int degree = 3;        // polynomial
    double gamma = 0.05;   // rbf / polynomial / tanh scale
    double coef0 = 1.0;    // polynomial / tanh offset

    double eval(const std::vector<double>& a, const std::vector<double>& b) const;
};

// One-vs-one binary decision function from SMO training.
struct PairModel {
    int class_a = 0;  // decision > 0 votes class_a
    int class_b = 0;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> coefficients;  // alpha_i * y_i
    double bias = 0.0;
};

struct SvmModel {
    KernelSpec kernel;
    std::vector<int> classes;  // ascending
    std::vector<PairModel> pairs;
    std::vector<double> scale_mean;
    std::vector<double> scale_std;

    bool trained() const { return !pairs.empty(); }
    std::vector<double> scale(const std::vector<double>& x) const;
    // Majority vote over pairs; ties break toward the smaller class.
    int predict(const std::vector<double>& features) const;

    std::string to_json() const;
    static SvmModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static SvmModel load(const std::string& path);
};

struct SmoOptions {
    double C = 10.0;
    double kkt_tol = 1e-3;
    int max_passes = 200;
};

// Dual SMO optimization over all one-vs-one class pairs. Features are
// standardized internally and the scaling stored in the model.
SvmModel train_svm(const std::vector<std::vector<double>>& samples,
                   const std::vector<int>& labels, const KernelSpec& kernel,
                   const SmoOptions& options = {});

}  // namespace lq
