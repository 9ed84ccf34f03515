#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace polynn {

// 28x28 grey images flattened to 784 columns scaled to [0, 1], with 0-9 labels.
struct ImageSet {
    Eigen::MatrixXd x;
    std::vector<std::size_t> labels;

    [[nodiscard]] std::size_t rows() const { return labels.size(); }
    [[nodiscard]] ImageSet head(std::size_t n) const;
};

inline constexpr std::size_t kMnistPixels = 784;
inline constexpr std::size_t kMnistClasses = 10;

// Uncompressed IDX pair (train-images-idx3-ubyte / train-labels-idx1-ubyte).
[[nodiscard]] ImageSet load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                                      std::size_t max_rows = SIZE_MAX);

// CSV with 785 integer columns (pixels 0-255 plus a label column), with or
// without a header row. label_first selects where the label sits.
[[nodiscard]] ImageSet load_mnist_csv(const std::string& path, bool label_first, std::size_t max_rows = SIZE_MAX);

// Looks in $POLYNN_MNIST_DIR for train-images-idx3-ubyte + train-labels-idx1-ubyte,
// or mnist_train.csv (label first). Returns nullopt when nothing usable exists.
[[nodiscard]] std::optional<ImageSet> find_mnist(std::size_t max_rows = SIZE_MAX);

// Synthetic digit-like images: each class is a fixed polyline stroke drawn
// with per-sample jitter in position, thickness and intensity plus pixel
// noise. Class shapes do not depend on the seed; the samples do.
[[nodiscard]] ImageSet mnist_surrogate(std::size_t n, std::uint64_t seed);

}  // namespace polynn
