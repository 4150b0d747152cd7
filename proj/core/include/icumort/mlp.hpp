#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "icumort/matrix.hpp"
#include "icumort/random.hpp"

namespace icumort {

enum class Mode { train, infer };

/// Probability clamp used by the cross-entropy loss.
inline constexpr double kBceClamp = 1e-7;

/// Fully connected layer, y = x W' + b with W stored out x in.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;
    std::vector<double> bias;
    std::vector<double> weight_grad;
    std::vector<double> bias_grad;
    std::vector<double> weight_velocity;
    std::vector<double> bias_velocity;
    Matrix input; // cached by the training forward pass

    DenseLayer(std::size_t in_dim, std::size_t out_dim);
    void glorot_init(Rng& rng);
    Matrix infer(const Matrix& x) const;
    Matrix forward(const Matrix& x);
    Matrix backward(const Matrix& grad_out);
};

/// Per-feature batch normalization: x_hat = (x - mu_B) / sqrt(var_B + eps),
/// y = gamma x_hat + beta. Training uses the biased batch variance and
/// updates running = momentum * running + (1 - momentum) * batch; the first
/// training batch initializes the running statistics directly.
struct BatchNormLayer {
    std::size_t dim = 0;
    double epsilon = 1e-5;
    double momentum = 0.9;
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    bool running_initialized = false;
    std::vector<double> gamma_grad;
    std::vector<double> beta_grad;
    std::vector<double> gamma_velocity;
    std::vector<double> beta_velocity;
    Matrix x_hat;
    std::vector<double> inv_std;

    BatchNormLayer(std::size_t d, double eps, double mom);
    Matrix infer(const Matrix& x) const;
    Matrix forward(const Matrix& x);
    Matrix backward(const Matrix& grad_out);
};

struct ReluLayer {
    std::vector<char> active;

    Matrix infer(const Matrix& x) const;
    Matrix forward(const Matrix& x);
    Matrix backward(const Matrix& grad_out) const;
};

/// Inverted dropout: kept units are scaled by 1 / (1 - p) during training.
struct DropoutLayer {
    double p = 0.0;
    std::vector<double> mask;

    Matrix infer(const Matrix& x) const { return x; }
    Matrix forward(const Matrix& x, Rng& rng);
    Matrix backward(const Matrix& grad_out) const;
};

using Layer = std::variant<DenseLayer, BatchNormLayer, ReluLayer, DropoutLayer>;

struct MlpArchitecture {
    std::size_t input_dim = 30;
    std::vector<std::size_t> hidden{100, 50, 25};
    double dropout = 0.2;
    /// Dropout follows the first `dropout_sites` hidden layers (all of them when
    /// there are fewer).
    std::size_t dropout_sites = 2;
    bool input_batchnorm = true;
    bool hidden_batchnorm = false;
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.9;

    friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

struct SgdConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
};

/// Named view of a parameter (or buffer) and its gradient.
struct ParamView {
    std::string name;
    std::span<double> value;
    std::span<double> grad; ///< empty for non-trainable buffers
};

/// Batch-norm input, ReLU hidden layers with dropout, single sigmoid output.
class MlpModel {
public:
    explicit MlpModel(MlpArchitecture arch, std::uint64_t init_seed = 0);

    const MlpArchitecture& architecture() const noexcept { return arch_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::size_t input_dim() const noexcept { return arch_.input_dim; }

    /// Output logits. Train mode needs at least 2 rows, caches activations
    /// for backward(), applies dropout and updates batch-norm running stats.
    std::vector<double> forward_logits(const Matrix& batch, Mode mode, Rng& dropout_rng);
    /// Probabilities in (0, 1).
    std::vector<double> forward(const Matrix& batch, Mode mode, Rng& dropout_rng);
    /// Inference-mode probabilities; rows are independent of each other.
    std::vector<double> predict_proba(const Matrix& x) const;

    /// Train-mode forward and reverse pass; gradients are left in the
    /// layers and the batch loss is returned. Throws NumericError naming the
    /// first layer whose gradient is non-finite.
    double compute_gradients(const Matrix& batch, std::span<const int> y, Rng& dropout_rng);
    /// SGD with momentum: v = mu v - lr g, theta += v.
    void apply_sgd(const SgdConfig& cfg);
    /// compute_gradients followed by apply_sgd.
    double train_step(const Matrix& batch, std::span<const int> y, const SgdConfig& cfg, Rng& dropout_rng);

    std::vector<ParamView> parameters();
    std::vector<ParamView> buffers();
    std::size_t parameter_count() const;

    friend bool operator==(const MlpModel& a, const MlpModel& b);

private:
    MlpArchitecture arch_;
    std::vector<Layer> layers_;
};

/// Mean of -[y log p + (1 - y) log(1 - p)] with p clamped to
/// [kBceClamp, 1 - kBceClamp].
double bce_loss(std::span<const double> p, std::span<const int> y);

nlohmann::json to_json(const MlpArchitecture& a);
MlpArchitecture architecture_from_json(const nlohmann::json& j);

/// Parameters and running statistics as base64 little-endian float64 blobs.
nlohmann::json mlp_parameters_json(const MlpModel& m);
MlpModel mlp_from_json(const nlohmann::json& architecture, const nlohmann::json& parameters);

} // namespace icumort
