#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace polynn {

enum class Activation { Identity, Relu, Tanh, Square };
enum class OutputKind { Linear, Softmax };

[[nodiscard]] std::string_view to_string(Activation a);
[[nodiscard]] Activation parse_activation(std::string_view text);
[[nodiscard]] std::string_view to_string(OutputKind k);
[[nodiscard]] OutputKind parse_output_kind(std::string_view text);

[[nodiscard]] double activate(Activation a, double t);

struct MLPConfig {
    // Widths of the dense layers; the last entry is the output width.
    std::vector<std::size_t> layer_widths;
    // One per hidden dense layer (all but the last).
    std::vector<Activation> activations;
    // One per hidden dense layer, or empty. A positive rate inserts a dropout
    // layer right after that dense layer.
    std::vector<double> dropout_rates;
    OutputKind output = OutputKind::Linear;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class LayerKind { Dense, Dropout };

struct Layer {
    LayerKind kind = LayerKind::Dense;
    std::string label;            // dense_1, dropout_1, ...
    Eigen::MatrixXd weights;      // out x in
    Eigen::VectorXd bias;         // out
    Activation activation = Activation::Identity;
    bool softmax = false;         // output layer only
    double dropout_rate = 0.0;
    std::size_t width = 0;        // output width of this layer
};

class MLP {
public:
    MLP() = default;
    MLP(std::size_t input_width, std::vector<Layer> layers);

    // Fresh network with weights drawn uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)]
    // and zero biases.
    [[nodiscard]] static MLP initialize(std::size_t input_width, const MLPConfig& config);

    [[nodiscard]] std::size_t input_width() const { return input_width_; }
    [[nodiscard]] std::size_t output_width() const;
    [[nodiscard]] const std::vector<Layer>& layers() const { return layers_; }
    [[nodiscard]] std::vector<Layer>& layers() { return layers_; }
    [[nodiscard]] std::size_t layer_count() const { return layers_.size(); }

    // Inference: dropout layers pass their input through unchanged.
    [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    [[nodiscard]] Eigen::MatrixXd layer_activations(const Eigen::MatrixXd& x, std::size_t layer_index) const;
    [[nodiscard]] std::vector<Eigen::MatrixXd> all_activations(const Eigen::MatrixXd& x) const;

private:
    void check_input(const Eigen::MatrixXd& x) const;

    std::size_t input_width_ = 0;
    std::vector<Layer> layers_;
};

// Mean squared-error loss 0.5 * |out - target|^2 per row (linear output) or
// mean cross-entropy (softmax output), in inference mode.
[[nodiscard]] double mlp_loss(const MLP& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets);

struct MLPGradients {
    double loss = 0.0;
    std::vector<Eigen::MatrixXd> weights;  // per layer; empty for dropout layers
    std::vector<Eigen::VectorXd> biases;
};

// Analytic gradients of mlp_loss (dropout disabled).
[[nodiscard]] MLPGradients mlp_gradients(const MLP& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets);

struct TrainResult {
    MLP net;
    double initial_loss = 0.0;
    std::vector<double> epoch_losses;  // full-data inference loss after each epoch
};

// Minibatch SGD with inverted dropout. Throws on a non-finite loss.
[[nodiscard]] TrainResult train_mlp(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets, const MLPConfig& config);

[[nodiscard]] Eigen::MatrixXd one_hot(const std::vector<std::size_t>& labels, std::size_t classes);

// Text container:
//
//     mlp v1
//     input <width>
//     dense <in> <out> <identity|relu|tanh|square|softmax>
//     W <out*in reals, row-major: all inputs of unit 0, then unit 1, ...>
//     b <out reals>
//     dropout <rate>
//     end
void write_mlp(std::ostream& out, const MLP& net);
[[nodiscard]] MLP read_mlp(std::istream& in);
void save_mlp(const std::string& path, const MLP& net);
[[nodiscard]] MLP load_mlp(const std::string& path);

}  // namespace polynn
