#include "polynn/mnist.hpp"

#include "polynn/error.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

namespace polynn {

ImageSet ImageSet::head(std::size_t n) const
{
    n = std::min(n, rows());
    return {x.topRows(static_cast<Eigen::Index>(n)), {labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n)}};
}

namespace {

std::uint32_t read_be32(std::istream& in)
{
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::Data, "IDX header truncated");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

}  // namespace

ImageSet load_mnist_idx(const std::string& images_path, const std::string& labels_path, std::size_t max_rows)
{
    std::ifstream img(images_path, std::ios::binary);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!img) throw Error(ErrorCode::Io, "cannot open '" + images_path + "'");
    if (!lab) throw Error(ErrorCode::Io, "cannot open '" + labels_path + "'");
    if (read_be32(img) != 0x00000803u) throw Error(ErrorCode::Data, "not an IDX image file: " + images_path);
    if (read_be32(lab) != 0x00000801u) throw Error(ErrorCode::Data, "not an IDX label file: " + labels_path);
    const std::size_t count = read_be32(img);
    const std::size_t rows = read_be32(img);
    const std::size_t cols = read_be32(img);
    if (read_be32(lab) != count) throw Error(ErrorCode::Data, "IDX image and label counts differ");
    if (rows * cols != kMnistPixels) throw Error(ErrorCode::Data, "IDX images are not 28x28");

    const std::size_t n = std::min(count, max_rows);
    ImageSet out;
    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kMnistPixels));
    out.labels.resize(n);
    std::vector<unsigned char> buf(kMnistPixels);
    for (std::size_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
            throw Error(ErrorCode::Data, "IDX image data truncated");
        for (std::size_t j = 0; j < kMnistPixels; ++j)
            out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = buf[j] / 255.0;
        char l = 0;
        if (!lab.read(&l, 1)) throw Error(ErrorCode::Data, "IDX label data truncated");
        out.labels[i] = static_cast<unsigned char>(l);
    }
    return out;
}

ImageSet load_mnist_csv(const std::string& path, bool label_first, std::size_t max_rows)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    std::vector<std::array<unsigned char, kMnistPixels>> pixels;
    std::vector<std::size_t> labels;
    std::string line;
    while (labels.size() < max_rows && std::getline(in, line)) {
        std::vector<long> vals;
        vals.reserve(kMnistPixels + 1);
        const char* p = line.c_str();
        char* end = nullptr;
        bool numeric = true;
        while (*p != '\0') {
            const long v = std::strtol(p, &end, 10);
            if (end == p) {
                numeric = false;
                break;
            }
            vals.push_back(v);
            p = end;
            while (*p == ',' || *p == ' ' || *p == '\r') ++p;
        }
        if (!numeric) {
            if (labels.empty() && pixels.empty()) continue;  // header row
            throw Error(ErrorCode::Data, "non-numeric MNIST CSV row");
        }
        if (vals.size() != kMnistPixels + 1) throw Error(ErrorCode::Data, "MNIST CSV rows need 785 values");
        const long label = label_first ? vals.front() : vals.back();
        if (label < 0 || label > 9) throw Error(ErrorCode::Data, "MNIST label out of range");
        std::array<unsigned char, kMnistPixels> row{};
        for (std::size_t j = 0; j < kMnistPixels; ++j)
            row[j] = static_cast<unsigned char>(std::clamp(vals[j + (label_first ? 1 : 0)], 0L, 255L));
        pixels.push_back(row);
        labels.push_back(static_cast<std::size_t>(label));
    }
    ImageSet out;
    out.labels = std::move(labels);
    out.x.resize(static_cast<Eigen::Index>(out.labels.size()), static_cast<Eigen::Index>(kMnistPixels));
    for (std::size_t i = 0; i < pixels.size(); ++i)
        for (std::size_t j = 0; j < kMnistPixels; ++j)
            out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pixels[i][j] / 255.0;
    return out;
}

std::optional<ImageSet> find_mnist(std::size_t max_rows)
{
    const char* dir = std::getenv("POLYNN_MNIST_DIR");
    if (dir == nullptr || *dir == '\0') return std::nullopt;
    namespace fs = std::filesystem;
    const fs::path root(dir);
    if (fs::exists(root / "train-images-idx3-ubyte") && fs::exists(root / "train-labels-idx1-ubyte"))
        return load_mnist_idx((root / "train-images-idx3-ubyte").string(), (root / "train-labels-idx1-ubyte").string(),
                              max_rows);
    if (fs::exists(root / "mnist_train.csv")) return load_mnist_csv((root / "mnist_train.csv").string(), true, max_rows);
    return std::nullopt;
}

namespace {

constexpr int kSide = 28;
constexpr std::size_t kStrokePoints = 5;

using Stroke = std::array<std::array<double, 2>, kStrokePoints>;

// Fixed class shapes, independent of the sample seed.
std::array<Stroke, kMnistClasses> class_strokes()
{
    std::array<Stroke, kMnistClasses> strokes{};
    std::mt19937_64 rng(20190101);
    for (auto& s : strokes)
        for (auto& pt : s)
            for (auto& v : pt) v = 6.0 + 16.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    return strokes;
}

double segment_distance(double px, double py, const std::array<double, 2>& a, const std::array<double, 2>& b)
{
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - a[0]) * dx + (py - a[1]) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a[0] + t * dx - px, ey = a[1] + t * dy - py;
    return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

ImageSet mnist_surrogate(std::size_t n, std::uint64_t seed)
{
    static const auto strokes = class_strokes();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    ImageSet out;
    out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kMnistPixels));
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = static_cast<std::size_t>(rng() % kMnistClasses);
        out.labels[i] = cls;
        Stroke s = strokes[cls];
        const double shift_x = 1.5 * gauss(rng), shift_y = 1.5 * gauss(rng);
        const double scale = 0.85 + 0.3 * uniform();
        for (auto& pt : s) {
            pt[0] = 14.0 + scale * (pt[0] - 14.0) + shift_x + 1.0 * gauss(rng);
            pt[1] = 14.0 + scale * (pt[1] - 14.0) + shift_y + 1.0 * gauss(rng);
        }
        const double width = 0.9 + 0.8 * uniform();
        const double ink = 0.7 + 0.3 * uniform();
        for (int r = 0; r < kSide; ++r)
            for (int c = 0; c < kSide; ++c) {
                double d = 1e9;
                for (std::size_t k = 0; k + 1 < kStrokePoints; ++k) d = std::min(d, segment_distance(c, r, s[k], s[k + 1]));
                double v = ink * std::exp(-0.5 * (d / width) * (d / width));
                if (v < 0.02) v = 0.0;
                v += 0.05 * uniform() * (v > 0.0 ? 1.0 : 0.0);
                out.x(static_cast<Eigen::Index>(i), r * kSide + c) = std::min(1.0, v);
            }
    }
    return out;
}

}  // namespace polynn
