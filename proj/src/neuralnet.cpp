#include "dpr/neuralnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dpr/kernels.hpp"
#include "model_json.hpp"

namespace dpr {

namespace {

constexpr double kProbFloor = 1e-12;

std::vector<std::size_t> layer_widths(std::size_t input_dim, std::size_t num_classes, const Hyperparams& hp) {
    std::vector<std::size_t> widths{input_dim};
    for (std::size_t i = 0; i + 1 < hp.layer_count; ++i) widths.push_back(hp.hidden_dim);
    widths.push_back(num_classes);
    return widths;
}

} // namespace

void Hyperparams::validate() const {
    auto fail = [](const std::string& what) { throw UsageError("invalid hyperparameter: " + what); };
    if (embed_dim == 0) fail("embed_dim must be positive");
    if (window == 0) fail("window must be positive");
    if (layer_count == 0) fail("layer_count must be at least 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0, 1)");
    if (epochs == 0) fail("epochs must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
    if (batch_size == 0) fail("batch_size must be positive");
    if (hidden_dim == 0) fail("hidden_dim must be positive");
    if (!(negative_rate > 0.0 && negative_rate <= 1.0)) fail("negative_rate must be in (0, 1]");
}

MlpModel::MlpModel(std::size_t input_dim, std::size_t num_classes, const Hyperparams& hp,
                   std::string label_set_name)
    : input_dim_(input_dim), num_classes_(num_classes), hp_(hp), label_set_name_(std::move(label_set_name)) {
    if (input_dim == 0 || num_classes < 2) throw UsageError("model needs input_dim >= 1 and >= 2 classes");
    if (hp.layer_count == 0) throw UsageError("model needs at least one layer");
    const auto widths = layer_widths(input_dim, num_classes, hp);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) layers_.emplace_back(widths[i], widths[i + 1]);
}

MlpModel::MlpModel(std::vector<DenseLayer> layers, const Hyperparams& hp, std::string label_set_name)
    : layers_(std::move(layers)), hp_(hp), label_set_name_(std::move(label_set_name)) {
    if (layers_.empty()) throw DataError("model has no layers");
    input_dim_ = layers_.front().in_dim;
    num_classes_ = layers_.back().out_dim;
    check();
}

MlpModel MlpModel::initialized(std::size_t input_dim, std::size_t num_classes, const Hyperparams& hp,
                               std::string label_set_name) {
    MlpModel model(input_dim, num_classes, hp, std::move(label_set_name));
    SplitMix64 rng(hp.seed);
    for (auto& layer : model.layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
        for (auto& w : layer.weights) w = (2.0 * rng.uniform() - 1.0) * limit;
    }
    return model;
}

void MlpModel::set_hyperparams(const Hyperparams& hp) {
    if (hp.layer_count != layers_.size())
        throw UsageError("hyperparams ask for " + std::to_string(hp.layer_count) + " layers, model has " +
                         std::to_string(layers_.size()));
    hp_ = hp;
}

void MlpModel::check() const {
    if (layers_.empty()) throw DataError("model has no layers");
    if (layers_.front().in_dim != input_dim_)
        throw DataError("first layer expects " + std::to_string(layers_.front().in_dim) + " inputs, model input is " +
                        std::to_string(input_dim_));
    if (layers_.back().out_dim != num_classes_)
        throw DataError("last layer has " + std::to_string(layers_.back().out_dim) + " outputs, model has " +
                        std::to_string(num_classes_) + " classes");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.in_dim == 0 || l.out_dim == 0) throw DataError("layer " + std::to_string(i) + " has a zero dimension");
        if (l.weights.size() != l.in_dim * l.out_dim || l.bias.size() != l.out_dim)
            throw DataError("layer " + std::to_string(i) + " parameter count does not match its shape");
        if (i > 0 && layers_[i - 1].out_dim != l.in_dim)
            throw DataError("layer " + std::to_string(i) + " input " + std::to_string(l.in_dim) +
                            " does not match previous output " + std::to_string(layers_[i - 1].out_dim));
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
            !std::all_of(l.bias.begin(), l.bias.end(), finite))
            throw DataError("layer " + std::to_string(i) + " has non-finite parameters");
    }
}

std::vector<double> relu(std::span<const double> z) {
    std::vector<double> out(z.size());
    kernels::active().relu(z.data(), out.data(), z.size());
    return out;
}

void softmax_in_place(std::span<double> logits) {
    if (logits.empty()) return;
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& v : logits) {
        v = std::exp(v - m);
        sum += v;
    }
    for (auto& v : logits) v /= sum;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    softmax_in_place(out);
    return out;
}

double cross_entropy(std::size_t true_class, std::span<const double> probs) {
    if (true_class >= probs.size()) throw UsageError("true class outside the probability vector");
    return -std::log(std::max(probs[true_class], kProbFloor));
}

double cross_entropy(std::span<const double> y_true, std::span<const double> probs) {
    if (y_true.size() != probs.size())
        throw UsageError("cross_entropy: label has " + std::to_string(y_true.size()) + " entries, probs " +
                         std::to_string(probs.size()));
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (y_true[i] != 0.0) loss -= y_true[i] * std::log(std::max(probs[i], kProbFloor));
    return loss;
}

std::vector<double> dropout_mask(std::size_t dim, double rate, SplitMix64& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw UsageError("dropout rate must be in [0, 1)");
    std::vector<double> mask(dim, 1.0);
    if (rate == 0.0) return mask;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

ForwardCache forward(const MlpModel& model, std::span<const double> x, Mode mode, SplitMix64& rng) {
    if (x.size() != model.input_dim())
        throw DataError("input has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(model.input_dim()));
    const auto& k = kernels::active();
    const auto& layers = model.layers();
    const double rate = model.hyperparams().dropout_rate;
    const bool drop = mode == Mode::train && rate > 0.0;

    ForwardCache cache;
    cache.mode = mode;
    cache.activations.reserve(layers.size());
    cache.activations.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        const auto& layer = layers[l];
        std::vector<double> z(layer.out_dim);
        k.affine(layer.weights.data(), layer.bias.data(), cache.activations.back().data(), z.data(),
                 layer.out_dim, layer.in_dim);
        std::vector<double> a(layer.out_dim);
        k.relu(z.data(), a.data(), a.size());
        if (drop) {
            auto mask = dropout_mask(a.size(), rate, rng);
            for (std::size_t i = 0; i < a.size(); ++i) a[i] *= mask[i];
            cache.masks.push_back(std::move(mask));
        }
        cache.pre_activations.push_back(std::move(z));
        cache.activations.push_back(std::move(a));
    }
    const auto& out = layers.back();
    cache.probs.resize(out.out_dim);
    k.affine(out.weights.data(), out.bias.data(), cache.activations.back().data(), cache.probs.data(), out.out_dim,
             out.in_dim);
    softmax_in_place(cache.probs);
    cache.valid = true;
    return cache;
}

std::vector<double> predict_proba(const MlpModel& model, std::span<const double> x) {
    SplitMix64 unused(0);
    return forward(model, x, Mode::eval, unused).probs;
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) throw UsageError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

Gradients zero_gradients(const MlpModel& model) {
    Gradients g;
    g.reserve(model.layer_count());
    for (const auto& l : model.layers())
        g.push_back({std::vector<double>(l.weights.size(), 0.0), std::vector<double>(l.bias.size(), 0.0)});
    return g;
}

void backward(const MlpModel& model, const ForwardCache& cache, std::size_t true_class, Gradients& grads) {
    const auto& layers = model.layers();
    if (!cache.valid || cache.probs.size() != model.num_classes() || cache.activations.size() != layers.size() ||
        cache.pre_activations.size() + 1 != layers.size())
        throw UsageError("backward needs a cache from a forward pass on this model");
    if (true_class >= model.num_classes()) throw UsageError("true class outside model outputs");
    if (grads.size() != layers.size()) throw UsageError("gradient buffer does not match model");
    const bool masked = !cache.masks.empty();
    if (masked && cache.masks.size() + 1 != layers.size()) throw UsageError("cache has an incomplete dropout record");

    const auto& k = kernels::active();
    std::vector<double> delta = cache.probs;
    delta[true_class] -= 1.0;

    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& layer = layers[l];
        auto& g = grads[l];
        const auto& input = cache.activations[l];
        k.outer_accumulate(1.0, delta.data(), input.data(), g.weights.data(), layer.out_dim, layer.in_dim);
        for (std::size_t r = 0; r < layer.out_dim; ++r) g.bias[r] += delta[r];
        if (l == 0) break;

        std::vector<double> upstream(layer.in_dim);
        k.affine_transposed(layer.weights.data(), delta.data(), upstream.data(), layer.out_dim, layer.in_dim);
        const auto& z = cache.pre_activations[l - 1];
        for (std::size_t i = 0; i < upstream.size(); ++i) {
            double d = z[i] > 0.0 ? upstream[i] : 0.0;
            if (masked) d *= cache.masks[l - 1][i];
            upstream[i] = d;
        }
        delta = std::move(upstream);
    }
}

Gradients backward(const MlpModel& model, const ForwardCache& cache, std::size_t true_class) {
    auto g = zero_gradients(model);
    backward(model, cache, true_class, g);
    return g;
}

void sgd_step(MlpModel& model, const Gradients& grads, double learning_rate) {
    auto& layers = model.layers();
    if (grads.size() != layers.size()) throw UsageError("gradient count does not match layer count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (grads[l].weights.size() != layers[l].weights.size() || grads[l].bias.size() != layers[l].bias.size())
            throw UsageError("gradient shape does not match layer " + std::to_string(l));
        auto bad = std::find_if(grads[l].weights.begin(), grads[l].weights.end(),
                                [](double v) { return !std::isfinite(v); });
        if (bad != grads[l].weights.end())
            throw NumericError("non-finite weight gradient in layer " + std::to_string(l) + " at index " +
                               std::to_string(bad - grads[l].weights.begin()));
        bad = std::find_if(grads[l].bias.begin(), grads[l].bias.end(), [](double v) { return !std::isfinite(v); });
        if (bad != grads[l].bias.end())
            throw NumericError("non-finite bias gradient in layer " + std::to_string(l) + " at index " +
                               std::to_string(bad - grads[l].bias.begin()));
    }
    if (learning_rate == 0.0) return;
    const auto& k = kernels::active();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        k.axpy(-learning_rate, grads[l].weights.data(), layers[l].weights.data(), layers[l].weights.size());
        k.axpy(-learning_rate, grads[l].bias.data(), layers[l].bias.data(), layers[l].bias.size());
    }
}

TrainingLog train(MlpModel& model, std::span<const Instance> instances, const Hyperparams& hp,
                  const std::function<void(const EpochStats&)>& on_epoch) {
    hp.validate();
    model.set_hyperparams(hp);
    if (instances.empty()) throw DataError("no training instances");
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].feature.size() != model.input_dim())
            throw DataError("instance " + std::to_string(i) + " has " + std::to_string(instances[i].feature.size()) +
                            " features, model expects " + std::to_string(model.input_dim()));
        if (instances[i].label >= model.num_classes())
            throw DataError("instance " + std::to_string(i) + " label " + std::to_string(instances[i].label) +
                            " outside " + std::to_string(model.num_classes()) + " classes");
    }

    TrainingLog log;
    log.reserve(hp.epochs);
    std::vector<std::size_t> order(instances.size());
    auto grads = zero_gradients(model);

    for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 shuffle_rng(derive_seed(hp.seed, epoch));
        shuffle(std::span<std::size_t>(order), shuffle_rng);
        SplitMix64 dropout_rng(derive_seed(~hp.seed, epoch));

        double loss_sum = 0.0;
        std::size_t hits = 0;
        for (std::size_t start = 0, batch = 0; start < order.size(); start += hp.batch_size, ++batch) {
            const std::size_t end = std::min(order.size(), start + hp.batch_size);
            for (auto& g : grads) {
                std::fill(g.weights.begin(), g.weights.end(), 0.0);
                std::fill(g.bias.begin(), g.bias.end(), 0.0);
            }
            for (std::size_t i = start; i < end; ++i) {
                const auto& inst = instances[order[i]];
                const auto cache = forward(model, inst.feature, Mode::train, dropout_rng);
                const double loss = cross_entropy(inst.label, cache.probs);
                if (!std::isfinite(loss) ||
                    std::any_of(cache.probs.begin(), cache.probs.end(), [](double p) { return std::isnan(p); }))
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                       std::to_string(batch + 1));
                loss_sum += loss;
                hits += argmax(cache.probs) == inst.label;
                backward(model, cache, inst.label, grads);
            }
            sgd_step(model, grads, hp.learning_rate / static_cast<double>(end - start));
        }
        const double n = static_cast<double>(instances.size());
        log.push_back({epoch + 1, loss_sum / n, static_cast<double>(hits) / n});
        if (on_epoch) on_epoch(log.back());
    }
    return log;
}

std::string to_hex_float(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value < 0 ? "-inf" : "inf";
    char buf[64];
    const bool negative = std::signbit(value);
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, std::fabs(value), std::chars_format::hex);
    return std::string(negative ? "-0x" : "0x") + std::string(buf, ptr);
}

double from_hex_float(std::string_view text) {
    if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    bool negative = false;
    if (!text.empty() && text.front() == '-') {
        negative = true;
        text.remove_prefix(1);
    }
    if (text.size() < 3 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X'))
        throw DataError("not a hex float: '" + std::string(text) + "'");
    text.remove_prefix(2);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, std::chars_format::hex);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw DataError("not a hex float: '" + std::string(text) + "'");
    return negative ? -v : v;
}

namespace detail {

namespace {

ojson hex_array(const std::vector<double>& values) {
    ojson arr = ojson::array();
    for (double v : values) arr.push_back(to_hex_float(v));
    return arr;
}

std::vector<double> parse_hex_array(const ojson& arr, const char* what) {
    if (!arr.is_array()) throw DataError(std::string(what) + " must be an array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_string()) throw DataError(std::string(what) + " entries must be hex-float strings");
        out.push_back(from_hex_float(v.get<std::string>()));
    }
    return out;
}

template <class T>
T field(const ojson& j, const char* key) {
    if (!j.contains(key)) throw DataError(std::string("model file is missing \"") + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError(std::string("model field \"") + key + "\" has the wrong type");
    }
}

} // namespace

ojson hyperparams_to_json(const Hyperparams& hp) {
    ojson j;
    j["embed_dim"] = hp.embed_dim;
    j["window"] = hp.window;
    j["layer_count"] = hp.layer_count;
    j["dropout_rate"] = to_hex_float(hp.dropout_rate);
    j["epochs"] = hp.epochs;
    j["learning_rate"] = to_hex_float(hp.learning_rate);
    j["batch_size"] = hp.batch_size;
    j["hidden_dim"] = hp.hidden_dim;
    j["seed"] = hp.seed;
    j["negative_rate"] = to_hex_float(hp.negative_rate);
    j["init"] = "glorot_uniform";
    j["dropout"] = "inverted, after hidden activations";
    return j;
}

Hyperparams hyperparams_from_json(const ojson& j) {
    if (!j.is_object()) throw DataError("\"hyperparams\" must be an object");
    Hyperparams hp;
    hp.embed_dim = field<std::size_t>(j, "embed_dim");
    hp.window = field<std::size_t>(j, "window");
    hp.layer_count = field<std::size_t>(j, "layer_count");
    hp.dropout_rate = from_hex_float(field<std::string>(j, "dropout_rate"));
    hp.epochs = field<std::size_t>(j, "epochs");
    hp.learning_rate = from_hex_float(field<std::string>(j, "learning_rate"));
    hp.batch_size = field<std::size_t>(j, "batch_size");
    hp.hidden_dim = field<std::size_t>(j, "hidden_dim");
    hp.seed = field<std::uint64_t>(j, "seed");
    hp.negative_rate = from_hex_float(field<std::string>(j, "negative_rate"));
    return hp;
}

ojson model_to_json(const MlpModel& model) {
    ojson j;
    j["format"] = "dpr-mlp";
    j["version"] = kModelFormatVersion;
    j["label_set"] = model.label_set_name();
    j["input_dim"] = model.input_dim();
    j["num_classes"] = model.num_classes();
    j["hyperparams"] = hyperparams_to_json(model.hyperparams());
    ojson layers = ojson::array();
    for (const auto& l : model.layers()) {
        ojson lj;
        lj["in_dim"] = l.in_dim;
        lj["out_dim"] = l.out_dim;
        lj["weights"] = hex_array(l.weights);
        lj["bias"] = hex_array(l.bias);
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

MlpModel model_from_json(const ojson& j) {
    if (!j.is_object() || field<std::string>(j, "format") != "dpr-mlp")
        throw DataError("not a dpr-mlp model file");
    const auto version = field<int>(j, "version");
    if (version != kModelFormatVersion)
        throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    const auto hp = hyperparams_from_json(j.at("hyperparams"));
    const auto& lj = j.contains("layers") ? j.at("layers") : ojson();
    if (!lj.is_array() || lj.empty()) throw DataError("model file has no layers");
    std::vector<DenseLayer> layers;
    for (const auto& l : lj) {
        DenseLayer layer;
        layer.in_dim = field<std::size_t>(l, "in_dim");
        layer.out_dim = field<std::size_t>(l, "out_dim");
        layer.weights = parse_hex_array(l.contains("weights") ? l.at("weights") : ojson(), "weights");
        layer.bias = parse_hex_array(l.contains("bias") ? l.at("bias") : ojson(), "bias");
        layers.push_back(std::move(layer));
    }
    MlpModel model(std::move(layers), hp, field<std::string>(j, "label_set"));
    if (model.input_dim() != field<std::size_t>(j, "input_dim") ||
        model.num_classes() != field<std::size_t>(j, "num_classes"))
        throw DataError("model header dimensions disagree with its layers");
    if (model.layer_count() != hp.layer_count)
        throw DataError("model has " + std::to_string(model.layer_count()) + " layers, hyperparams say " +
                        std::to_string(hp.layer_count));
    return model;
}

} // namespace detail

std::string serialize_model(const MlpModel& model) { return detail::model_to_json(model).dump(1) + '\n'; }

MlpModel deserialize_model(std::string_view text) {
    detail::ojson j;
    try {
        j = detail::ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("corrupt model file: ") + e.what());
    }
    return detail::model_from_json(j);
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model '" + path.string() + "'");
    out << serialize_model(model);
    if (!out) throw DataError("write failed for model '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

MlpModel load_model(const std::filesystem::path& path, std::size_t label_count) {
    auto model = load_model(path);
    if (model.num_classes() != label_count)
        throw DataError("model predicts " + std::to_string(model.num_classes()) + " classes but the label set has " +
                        std::to_string(label_count));
    return model;
}

} // namespace dpr
