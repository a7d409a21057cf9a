#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dpr/error.hpp"
#include "dpr/hypothesis.hpp"
#include "dpr/random.hpp"

namespace dpr {

/// Training and shape settings. The first five fields are the tuned ones
/// (embedding dim, window, layer count, dropout, epochs). The rest are
/// defaults recorded in every saved model.
struct Hyperparams {
    std::size_t embed_dim = 300;
    std::size_t window = 1;
    std::size_t layer_count = 3;
    double dropout_rate = 0.5;
    std::size_t epochs = 25;
    double learning_rate = 0.01;
    std::size_t batch_size = 1;
    std::size_t hidden_dim = 200;
    std::uint64_t seed = 0;
    /// Fraction of unannotated gaps used as DPI negatives.
    double negative_rate = 1.0;

    std::size_t input_dim() const noexcept { return 2 * window * embed_dim; }
    /// Throws UsageError naming the first invalid field.
    void validate() const;
    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct DenseLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> weights; // out_dim x in_dim, row-major
    std::vector<double> bias;    // out_dim

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out)
        : in_dim(in), out_dim(out), weights(in * out, 0.0), bias(out, 0.0) {}

    double& w(std::size_t row, std::size_t col) { return weights[row * in_dim + col]; }
    double w(std::size_t row, std::size_t col) const { return weights[row * in_dim + col]; }
    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// L dense layers: L-1 hidden ReLU layers of width hidden_dim followed by a
/// softmax output layer. L = 1 is multinomial logistic regression.
class MlpModel {
public:
    MlpModel() = default;
    /// Zero-initialised model with the layer shapes implied by `hp`.
    MlpModel(std::size_t input_dim, std::size_t num_classes, const Hyperparams& hp,
             std::string label_set_name = {});
    /// Takes layers as given; throws DataError if shapes do not chain.
    MlpModel(std::vector<DenseLayer> layers, const Hyperparams& hp, std::string label_set_name = {});

    /// Glorot-uniform weights, U(-sqrt(6/(in+out)), +sqrt(6/(in+out))) drawn
    /// row-major layer by layer from SplitMix64(seed); zero biases.
    static MlpModel initialized(std::size_t input_dim, std::size_t num_classes,
                                const Hyperparams& hp, std::string label_set_name = {});

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    const Hyperparams& hyperparams() const noexcept { return hp_; }
    /// Layer count must match; the dropout rate used by forward() comes from here.
    void set_hyperparams(const Hyperparams& hp);
    const std::string& label_set_name() const noexcept { return label_set_name_; }

    /// Throws DataError if the shape chain or finiteness is broken.
    void check() const;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

private:
    std::size_t input_dim_ = 0;
    std::size_t num_classes_ = 0;
    std::vector<DenseLayer> layers_;
    Hyperparams hp_;
    std::string label_set_name_;
};

enum class Mode { train, eval };

/// Everything backward() needs from one forward pass.
struct ForwardCache {
    std::vector<std::vector<double>> activations; // [0] = input, [l+1] = output of hidden layer l
    std::vector<std::vector<double>> pre_activations; // hidden layers only
    std::vector<std::vector<double>> masks;           // hidden layers; empty in eval mode
    std::vector<double> probs;
    Mode mode = Mode::eval;
    bool valid = false;
};

struct LayerGradient {
    std::vector<double> weights;
    std::vector<double> bias;
};

using Gradients = std::vector<LayerGradient>;

std::vector<double> relu(std::span<const double> z);

/// max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);
void softmax_in_place(std::span<double> logits);

/// -log(max(probs[true], 1e-12)) for the one-hot vector `y_true`.
double cross_entropy(std::span<const double> y_true, std::span<const double> probs);
double cross_entropy(std::size_t true_class, std::span<const double> probs);

/// Inverted dropout: each component is 0 with probability `rate`, else
/// 1/(1-rate). Component i is zero iff rng.uniform() < rate on the i-th draw.
std::vector<double> dropout_mask(std::size_t dim, double rate, SplitMix64& rng);

/// Runs the network. In train mode with a positive dropout rate, masks are
/// drawn from `rng` after every hidden activation.
ForwardCache forward(const MlpModel& model, std::span<const double> x, Mode mode,
                     SplitMix64& rng);
std::vector<double> predict_proba(const MlpModel& model, std::span<const double> x);

/// Index of the largest probability; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

Gradients zero_gradients(const MlpModel& model);

/// Gradients of cross-entropy w.r.t. every parameter, added into `grads`.
void backward(const MlpModel& model, const ForwardCache& cache, std::size_t true_class,
              Gradients& grads);
Gradients backward(const MlpModel& model, const ForwardCache& cache, std::size_t true_class);

/// p <- p - learning_rate * grad. Throws NumericError on a non-finite gradient
/// without touching the model.
void sgd_step(MlpModel& model, const Gradients& grads, double learning_rate);

struct EpochStats {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double accuracy = 0.0; // from the training-mode forward passes of that epoch
};

using TrainingLog = std::vector<EpochStats>;

/// Mini-batch SGD for hp.epochs epochs. Epoch e visits the instances in a
/// SplitMix64(derive_seed(seed, e)) Fisher-Yates order; batch gradients are
/// averaged. `hp` replaces the model's recorded hyperparameters first.
/// `on_epoch` is called after every epoch.
TrainingLog train(MlpModel& model, std::span<const Instance> instances, const Hyperparams& hp,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Versioned JSON; parameters are hex-float strings, so reloading is exact.
std::string serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::string_view text);
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);
/// Like load_model, but also checks the output width against `label_count`.
MlpModel load_model(const std::filesystem::path& path, std::size_t label_count);

/// Lossless text form of a double: "0x1.8p+0", "-0x0p+0", "inf", "nan".
std::string to_hex_float(double value);
double from_hex_float(std::string_view text);

} // namespace dpr
