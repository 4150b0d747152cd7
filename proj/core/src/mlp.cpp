#include "icumort/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "icumort/base64.hpp"
#include "icumort/error.hpp"
#include "icumort/logistic.hpp"

namespace icumort {

// ---------------------------------------------------------------------------
// Dense

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim)
    : in(in_dim),
      out(out_dim),
      weight(in_dim * out_dim, 0.0),
      bias(out_dim, 0.0),
      weight_grad(in_dim * out_dim, 0.0),
      bias_grad(out_dim, 0.0),
      weight_velocity(in_dim * out_dim, 0.0),
      bias_velocity(out_dim, 0.0) {}

void DenseLayer::glorot_init(Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : weight) w = dist(rng);
    std::fill(bias.begin(), bias.end(), 0.0);
}

Matrix DenseLayer::infer(const Matrix& x) const {
    Matrix y(x.rows(), out);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double* xr = x.row(r).data();
        double* yr = y.row(r).data();
        for (std::size_t o = 0; o < out; ++o) {
            const double* w = weight.data() + o * in;
            double acc = bias[o];
            for (std::size_t i = 0; i < in; ++i) acc += xr[i] * w[i];
            yr[o] = acc;
        }
    }
    return y;
}

Matrix DenseLayer::forward(const Matrix& x) {
    input = x;
    return infer(x);
}

Matrix DenseLayer::backward(const Matrix& grad_out) {
    const std::size_t b = grad_out.rows();
    std::fill(weight_grad.begin(), weight_grad.end(), 0.0);
    std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
    Matrix grad_in(b, in);
    for (std::size_t r = 0; r < b; ++r) {
        const double* g = grad_out.row(r).data();
        const double* xr = input.row(r).data();
        double* gi = grad_in.row(r).data();
        for (std::size_t o = 0; o < out; ++o) {
            const double go = g[o];
            bias_grad[o] += go;
            double* wg = weight_grad.data() + o * in;
            const double* w = weight.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) {
                wg[i] += go * xr[i];
                gi[i] += go * w[i];
            }
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// Batch normalization

BatchNormLayer::BatchNormLayer(std::size_t d, double eps, double mom)
    : dim(d),
      epsilon(eps),
      momentum(mom),
      gamma(d, 1.0),
      beta(d, 0.0),
      running_mean(d, 0.0),
      running_var(d, 1.0),
      gamma_grad(d, 0.0),
      beta_grad(d, 0.0),
      gamma_velocity(d, 0.0),
      beta_velocity(d, 0.0) {}

Matrix BatchNormLayer::infer(const Matrix& x) const {
    Matrix y(x.rows(), dim);
    for (std::size_t c = 0; c < dim; ++c) {
        const double s = gamma[c] / std::sqrt(running_var[c] + epsilon);
        for (std::size_t r = 0; r < x.rows(); ++r) y(r, c) = s * (x(r, c) - running_mean[c]) + beta[c];
    }
    return y;
}

Matrix BatchNormLayer::forward(const Matrix& x) {
    const std::size_t b = x.rows();
    const double inv_b = 1.0 / static_cast<double>(b);
    x_hat = Matrix(b, dim);
    inv_std.assign(dim, 0.0);
    Matrix y(b, dim);
    for (std::size_t c = 0; c < dim; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < b; ++r) mean += x(r, c);
        mean *= inv_b;
        double var = 0.0;
        for (std::size_t r = 0; r < b; ++r) {
            const double dlt = x(r, c) - mean;
            var += dlt * dlt;
        }
        var *= inv_b;
        const double is = 1.0 / std::sqrt(var + epsilon);
        inv_std[c] = is;
        for (std::size_t r = 0; r < b; ++r) {
            const double xh = (x(r, c) - mean) * is;
            x_hat(r, c) = xh;
            y(r, c) = gamma[c] * xh + beta[c];
        }
        if (running_initialized) {
            running_mean[c] = momentum * running_mean[c] + (1.0 - momentum) * mean;
            running_var[c] = momentum * running_var[c] + (1.0 - momentum) * var;
        } else {
            running_mean[c] = mean;
            running_var[c] = var;
        }
    }
    running_initialized = true;
    return y;
}

Matrix BatchNormLayer::backward(const Matrix& grad_out) {
    const std::size_t b = grad_out.rows();
    const double nb = static_cast<double>(b);
    Matrix grad_in(b, dim);
    for (std::size_t c = 0; c < dim; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xh = 0.0;
        for (std::size_t r = 0; r < b; ++r) {
            sum_dy += grad_out(r, c);
            sum_dy_xh += grad_out(r, c) * x_hat(r, c);
        }
        gamma_grad[c] = sum_dy_xh;
        beta_grad[c] = sum_dy;
        // dx = gamma * inv_std / b * (b dy - sum dy - x_hat sum(dy x_hat))
        const double scale = gamma[c] * inv_std[c] / nb;
        for (std::size_t r = 0; r < b; ++r) {
            grad_in(r, c) = scale * (nb * grad_out(r, c) - sum_dy - x_hat(r, c) * sum_dy_xh);
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// ReLU / dropout

Matrix ReluLayer::infer(const Matrix& x) const {
    Matrix y = x;
    for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
    return y;
}

Matrix ReluLayer::forward(const Matrix& x) {
    Matrix y = x;
    auto data = y.data();
    active.assign(data.size(), 0);
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (data[k] > 0.0) active[k] = 1;
        else data[k] = 0.0;
    }
    return y;
}

Matrix ReluLayer::backward(const Matrix& grad_out) const {
    Matrix g = grad_out;
    auto data = g.data();
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (!active[k]) data[k] = 0.0;
    }
    return g;
}

Matrix DropoutLayer::forward(const Matrix& x, Rng& rng) {
    Matrix y = x;
    auto data = y.data();
    mask.assign(data.size(), 1.0);
    if (p <= 0.0) return y;
    const double keep_scale = 1.0 / (1.0 - p);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < data.size(); ++k) {
        mask[k] = unit(rng) < p ? 0.0 : keep_scale;
        data[k] *= mask[k];
    }
    return y;
}

Matrix DropoutLayer::backward(const Matrix& grad_out) const {
    Matrix g = grad_out;
    auto data = g.data();
    for (std::size_t k = 0; k < data.size(); ++k) data[k] *= mask[k];
    return g;
}

// ---------------------------------------------------------------------------
// Model

namespace {

void validate(const MlpArchitecture& a) {
    if (a.input_dim == 0) throw ConfigError("MLP input dimension must be positive");
    for (auto h : a.hidden) {
        if (h == 0) throw ConfigError("MLP hidden widths must be positive");
    }
    if (!(a.dropout >= 0.0 && a.dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    if (!(a.bn_epsilon > 0.0)) throw ConfigError("batch-norm epsilon must be positive");
    if (!(a.bn_momentum > 0.0 && a.bn_momentum < 1.0)) throw ConfigError("batch-norm momentum must lie in (0, 1)");
}

template <class Model, class F>
void visit_tensors(Model& m, bool trainable, F&& f) {
    std::size_t dense_i = 0;
    std::size_t bn_i = 0;
    for (auto& layer : m) {
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            const std::string name = "dense" + std::to_string(dense_i++);
            if (trainable) {
                f(name + ".weight", d->weight, d->weight_grad);
                f(name + ".bias", d->bias, d->bias_grad);
            }
        } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            const std::string name = "bn" + std::to_string(bn_i++);
            if (trainable) {
                f(name + ".gamma", bn->gamma, bn->gamma_grad);
                f(name + ".beta", bn->beta, bn->beta_grad);
            } else {
                f(name + ".running_mean", bn->running_mean, bn->running_mean);
                f(name + ".running_var", bn->running_var, bn->running_var);
            }
        }
    }
}

std::string layer_name(const std::vector<Layer>& layers, std::size_t index) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < index; ++i) {
        if (layers[i].index() == layers[index].index()) ++same;
    }
    static const char* kinds[] = {"dense", "bn", "relu", "dropout"};
    return std::string(kinds[layers[index].index()]) + std::to_string(same);
}

template <class Layerish>
bool all_finite(const Layerish& l) {
    if constexpr (std::is_same_v<Layerish, DenseLayer>) {
        return std::all_of(l.weight_grad.begin(), l.weight_grad.end(), [](double v) { return std::isfinite(v); }) &&
               std::all_of(l.bias_grad.begin(), l.bias_grad.end(), [](double v) { return std::isfinite(v); });
    } else if constexpr (std::is_same_v<Layerish, BatchNormLayer>) {
        return std::all_of(l.gamma_grad.begin(), l.gamma_grad.end(), [](double v) { return std::isfinite(v); }) &&
               std::all_of(l.beta_grad.begin(), l.beta_grad.end(), [](double v) { return std::isfinite(v); });
    } else {
        return true;
    }
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

} // namespace

MlpModel::MlpModel(MlpArchitecture arch, std::uint64_t init_seed) : arch_(std::move(arch)) {
    validate(arch_);
    Rng rng(init_seed);
    if (arch_.input_batchnorm) layers_.emplace_back(BatchNormLayer(arch_.input_dim, arch_.bn_epsilon, arch_.bn_momentum));
    std::size_t prev = arch_.input_dim;
    for (std::size_t i = 0; i < arch_.hidden.size(); ++i) {
        DenseLayer dense(prev, arch_.hidden[i]);
        dense.glorot_init(rng);
        layers_.emplace_back(std::move(dense));
        if (arch_.hidden_batchnorm) {
            layers_.emplace_back(BatchNormLayer(arch_.hidden[i], arch_.bn_epsilon, arch_.bn_momentum));
        }
        layers_.emplace_back(ReluLayer{});
        if (i < arch_.dropout_sites) layers_.emplace_back(DropoutLayer{arch_.dropout, {}});
        prev = arch_.hidden[i];
    }
    DenseLayer head(prev, 1);
    head.glorot_init(rng);
    layers_.emplace_back(std::move(head));
}

std::vector<double> MlpModel::forward_logits(const Matrix& batch, Mode mode, Rng& dropout_rng) {
    if (batch.cols() != arch_.input_dim) {
        throw DataError("MLP expects " + std::to_string(arch_.input_dim) + " features, got " +
                        std::to_string(batch.cols()));
    }
    if (mode == Mode::train && batch.rows() < 2) throw DataError("train-mode forward needs a batch of at least 2 rows");
    Matrix h = batch;
    for (auto& layer : layers_) {
        h = std::visit(
            [&](auto& l) -> Matrix {
                using T = std::decay_t<decltype(l)>;
                if (mode == Mode::infer) return l.infer(h);
                if constexpr (std::is_same_v<T, DropoutLayer>) return l.forward(h, dropout_rng);
                else return l.forward(h);
            },
            layer);
    }
    return h.column(0);
}

std::vector<double> MlpModel::forward(const Matrix& batch, Mode mode, Rng& dropout_rng) {
    auto out = forward_logits(batch, mode, dropout_rng);
    for (auto& v : out) v = sigmoid(v);
    return out;
}

std::vector<double> MlpModel::predict_proba(const Matrix& x) const {
    if (x.cols() != arch_.input_dim) {
        throw DataError("MLP expects " + std::to_string(arch_.input_dim) + " features, got " + std::to_string(x.cols()));
    }
    Matrix h = x;
    for (const auto& layer : layers_) {
        h = std::visit([&](const auto& l) { return l.infer(h); }, layer);
    }
    auto out = h.column(0);
    for (auto& v : out) v = sigmoid(v);
    return out;
}

double MlpModel::compute_gradients(const Matrix& batch, std::span<const int> y, Rng& dropout_rng) {
    if (y.size() != batch.rows()) throw DataError("label count does not match batch rows");
    const auto logits = forward_logits(batch, Mode::train, dropout_rng);
    std::vector<double> p(logits.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(logits[i]);
    const double loss = bce_loss(p, y);

    // d loss / d logit = (p - y) / b for sigmoid followed by mean BCE.
    const double inv_b = 1.0 / static_cast<double>(batch.rows());
    Matrix grad(batch.rows(), 1);
    for (std::size_t i = 0; i < p.size(); ++i) grad(i, 0) = (p[i] - y[i]) * inv_b;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        grad = std::visit([&](auto& l) { return l.backward(grad); }, layers_[i]);
        const bool ok = std::visit([](const auto& l) { return all_finite(l); }, layers_[i]);
        if (!ok || !std::all_of(grad.data().begin(), grad.data().end(), [](double v) { return std::isfinite(v); })) {
            throw NumericError("non-finite gradient in layer " + layer_name(layers_, i));
        }
    }
    return loss;
}

void MlpModel::apply_sgd(const SgdConfig& cfg) {
    const auto step = [&](std::vector<double>& value, const std::vector<double>& grad, std::vector<double>& vel) {
        for (std::size_t k = 0; k < value.size(); ++k) {
            vel[k] = cfg.momentum * vel[k] - cfg.learning_rate * grad[k];
            value[k] += vel[k];
        }
    };
    for (auto& layer : layers_) {
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            step(d->weight, d->weight_grad, d->weight_velocity);
            step(d->bias, d->bias_grad, d->bias_velocity);
        } else if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
            step(bn->gamma, bn->gamma_grad, bn->gamma_velocity);
            step(bn->beta, bn->beta_grad, bn->beta_velocity);
        }
    }
}

double MlpModel::train_step(const Matrix& batch, std::span<const int> y, const SgdConfig& cfg, Rng& dropout_rng) {
    const double loss = compute_gradients(batch, y, dropout_rng);
    apply_sgd(cfg);
    return loss;
}

std::vector<ParamView> MlpModel::parameters() {
    std::vector<ParamView> out;
    visit_tensors(layers_, true, [&](std::string name, std::vector<double>& v, std::vector<double>& g) {
        out.push_back({std::move(name), v, g});
    });
    return out;
}

std::vector<ParamView> MlpModel::buffers() {
    std::vector<ParamView> out;
    visit_tensors(layers_, false, [&](std::string name, std::vector<double>& v, std::vector<double>&) {
        out.push_back({std::move(name), v, {}});
    });
    return out;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    visit_tensors(layers_, true, [&](const std::string&, const std::vector<double>& v, const std::vector<double>&) {
        n += v.size();
    });
    return n;
}

bool operator==(const MlpModel& a, const MlpModel& b) {
    if (a.arch_ != b.arch_ || a.layers_.size() != b.layers_.size()) return false;
    std::vector<std::span<const double>> ta;
    std::vector<std::span<const double>> tb;
    for (bool trainable : {true, false}) {
        visit_tensors(a.layers_, trainable, [&](const std::string&, const std::vector<double>& v, const auto&) {
            ta.emplace_back(v);
        });
        visit_tensors(b.layers_, trainable, [&](const std::string&, const std::vector<double>& v, const auto&) {
            tb.emplace_back(v);
        });
    }
    if (ta.size() != tb.size()) return false;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (!same_bits(ta[i], tb[i])) return false;
    }
    return true;
}

double bce_loss(std::span<const double> p, std::span<const int> y) {
    if (p.size() != y.size()) throw DataError("probability and label lengths differ");
    if (p.empty()) throw DataError("cross-entropy of an empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
        total -= y[i] == 1 ? std::log(q) : std::log(1.0 - q);
    }
    return total / static_cast<double>(p.size());
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const MlpArchitecture& a) {
    return {{"input_dim", a.input_dim},
            {"hidden", a.hidden},
            {"dropout", a.dropout},
            {"dropout_sites", a.dropout_sites},
            {"input_batchnorm", a.input_batchnorm},
            {"hidden_batchnorm", a.hidden_batchnorm},
            {"bn_epsilon", a.bn_epsilon},
            {"bn_momentum", a.bn_momentum}};
}

MlpArchitecture architecture_from_json(const nlohmann::json& j) {
    MlpArchitecture a;
    try {
        a.input_dim = j.at("input_dim").get<std::size_t>();
        a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
        a.dropout = j.at("dropout").get<double>();
        a.dropout_sites = j.at("dropout_sites").get<std::size_t>();
        a.input_batchnorm = j.at("input_batchnorm").get<bool>();
        a.hidden_batchnorm = j.at("hidden_batchnorm").get<bool>();
        a.bn_epsilon = j.at("bn_epsilon").get<double>();
        a.bn_momentum = j.at("bn_momentum").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed MLP architecture: ") + e.what());
    }
    return a;
}

nlohmann::json mlp_parameters_json(const MlpModel& m) {
    nlohmann::json tensors = nlohmann::json::object();
    nlohmann::json initialized = nlohmann::json::array();
    auto& mm = const_cast<MlpModel&>(m);
    for (const auto& p : mm.parameters()) tensors[p.name] = encode_doubles(p.value);
    for (const auto& p : mm.buffers()) tensors[p.name] = encode_doubles(p.value);
    for (const auto& layer : m.layers()) {
        if (const auto* bn = std::get_if<BatchNormLayer>(&layer)) initialized.push_back(bn->running_initialized);
    }
    return {{"encoding", "base64-float64-le"}, {"tensors", std::move(tensors)}, {"bn_initialized", std::move(initialized)}};
}

MlpModel mlp_from_json(const nlohmann::json& architecture, const nlohmann::json& parameters) {
    MlpModel m(architecture_from_json(architecture));
    try {
        if (parameters.at("encoding").get<std::string>() != "base64-float64-le") {
            throw DataError("unsupported MLP parameter encoding");
        }
        const auto& tensors = parameters.at("tensors");
        std::size_t used = 0;
        auto load = [&](ParamView& view) {
            if (!tensors.contains(view.name)) throw DataError("model file lacks tensor '" + view.name + "'");
            const auto values = decode_doubles(tensors.at(view.name).get<std::string>());
            if (values.size() != view.value.size()) {
                throw DataError("tensor '" + view.name + "' has " + std::to_string(values.size()) +
                                " values, architecture expects " + std::to_string(view.value.size()));
            }
            std::copy(values.begin(), values.end(), view.value.begin());
            ++used;
        };
        for (auto& p : m.parameters()) load(p);
        for (auto& p : m.buffers()) load(p);
        if (used != tensors.size()) throw DataError("model file has tensors the architecture does not use");

        const auto& init = parameters.at("bn_initialized");
        std::size_t k = 0;
        for (auto& layer : const_cast<std::vector<Layer>&>(m.layers())) {
            if (auto* bn = std::get_if<BatchNormLayer>(&layer)) {
                if (k >= init.size()) throw DataError("bn_initialized list is too short");
                bn->running_initialized = init[k++].get<bool>();
            }
        }
        if (k != init.size()) throw DataError("bn_initialized list is too long");
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed MLP parameters: ") + e.what());
    }
    return m;
}

} // namespace icumort
