#include "polynn/model_io.hpp"

#include "polynn/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace polynn {

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename Vec>
void write_reals(std::ostream& out, const char* key, const Vec& v)
{
    out << key;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << fmt(v(i));
    out << '\n';
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string line()
    {
        std::string s;
        if (!std::getline(in_, s)) throw Error(ErrorCode::ModelFormat, "model file truncated");
        if (!s.empty() && s.back() == '\r') s.pop_back();
        return s;
    }

    // Reads "<key> rest..." and returns a stream positioned after the key.
    std::istringstream keyed(const std::string& key)
    {
        auto s = line();
        std::istringstream ls(s);
        std::string k;
        ls >> k;
        if (k != key) throw Error(ErrorCode::ModelFormat, "expected '" + key + "', found '" + s + "'");
        return ls;
    }

    Eigen::VectorXd reals(const std::string& key, Eigen::Index count)
    {
        auto ls = keyed(key);
        Eigen::VectorXd v(count);
        for (Eigen::Index i = 0; i < count; ++i) {
            std::string tok;
            if (!(ls >> tok)) throw Error(ErrorCode::ModelFormat, "too few values after '" + key + "'");
            v(i) = std::strtod(tok.c_str(), nullptr);
        }
        return v;
    }

    std::istream& stream() { return in_; }

private:
    std::istream& in_;
};

}  // namespace

void write_model(std::ostream& out, const PolyModel& model)
{
    out << kModelVersion << '\n';
    out << "method " << to_string(model.method) << '\n';
    out << "lambda " << fmt(model.lambda) << '\n';

    std::ostringstream schema_text;
    write_schema(schema_text, model.schema);
    out << "schema " << model.schema.size() << '\n' << schema_text.str();

    out << "design " << model.design_names.size() << '\n';
    for (const auto& n : model.design_names) out << n << '\n';

    out << "classes " << model.class_levels.size() << '\n';
    for (const auto& c : model.class_levels) out << c << '\n';

    if (model.pca) {
        const auto& p = *model.pca;
        out << "pca " << p.components.rows() << ' ' << p.components.cols() << ' ' << fmt(p.retained_fraction) << '\n';
        write_reals(out, "means", p.means);
        write_reals(out, "variances", p.variances);
        for (Eigen::Index j = 0; j < p.components.cols(); ++j) write_reals(out, "component", p.components.col(j));
    } else {
        out << "pca none\n";
    }

    write_termset(out, model.terms);
    write_reals(out, "std_means", model.standardization.means);
    write_reals(out, "std_scales", model.standardization.scales);
    write_reals(out, "intercepts", model.intercepts);
    out << "coefficients " << model.coefficients.rows() << ' ' << model.coefficients.cols() << '\n';
    for (Eigen::Index i = 0; i < model.coefficients.rows(); ++i) write_reals(out, "c", model.coefficients.row(i));
    out << "end\n";
}

PolyModel read_model(std::istream& in)
{
    Reader rd(in);
    const auto version = rd.line();
    if (version != kModelVersion)
        throw Error(ErrorCode::ModelFormat, "unsupported model container version '" + version + "' (expected '" +
                                                kModelVersion + "')");
    PolyModel m;
    {
        auto ls = rd.keyed("method");
        std::string method;
        ls >> method;
        m.method = parse_fit_method(method);
    }
    m.lambda = rd.reals("lambda", 1)(0);

    {
        auto ls = rd.keyed("schema");
        std::size_t count = 0;
        ls >> count;
        std::ostringstream text;
        for (std::size_t i = 0; i < count; ++i) text << rd.line() << '\n';
        std::istringstream sin(text.str());
        m.schema = parse_schema(sin);
    }
    {
        auto ls = rd.keyed("design");
        std::size_t count = 0;
        ls >> count;
        for (std::size_t i = 0; i < count; ++i) m.design_names.push_back(rd.line());
    }
    {
        auto ls = rd.keyed("classes");
        std::size_t count = 0;
        ls >> count;
        for (std::size_t i = 0; i < count; ++i) m.class_levels.push_back(rd.line());
    }
    {
        auto ls = rd.keyed("pca");
        std::string first;
        ls >> first;
        if (first != "none") {
            const auto rows = static_cast<Eigen::Index>(std::stol(first));
            Eigen::Index cols = 0;
            double retained = 0.0;
            ls >> cols >> retained;
            PCABasis p;
            p.retained_fraction = retained;
            p.means = rd.reals("means", rows);
            p.variances = rd.reals("variances", cols);
            p.components.resize(rows, cols);
            for (Eigen::Index j = 0; j < cols; ++j) p.components.col(j) = rd.reals("component", rows);
            m.pca = std::move(p);
        }
    }
    m.terms = read_termset(rd.stream());
    const auto l = static_cast<Eigen::Index>(m.terms.size());
    m.standardization.means = rd.reals("std_means", l);
    m.standardization.scales = rd.reals("std_scales", l);
    const Eigen::Index k = m.is_classifier() ? static_cast<Eigen::Index>(m.class_levels.size()) : 1;
    m.intercepts = rd.reals("intercepts", k);
    {
        auto ls = rd.keyed("coefficients");
        Eigen::Index rows = 0, cols = 0;
        ls >> rows >> cols;
        if (rows != l || cols != k) throw Error(ErrorCode::ModelFormat, "coefficient block has the wrong shape");
        m.coefficients.resize(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) m.coefficients.row(i) = rd.reals("c", cols).transpose();
    }
    if (rd.line() != "end") throw Error(ErrorCode::ModelFormat, "model file missing 'end'");
    if ((m.standardization.scales.array() <= 0.0).any())
        throw Error(ErrorCode::ModelFormat, "model standardization has non-positive scales");
    return m;
}

void save_model(const std::string& path, const PolyModel& model)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    write_model(out, model);
    if (!out) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

PolyModel load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open model '" + path + "'");
    return read_model(in);
}

}  // namespace polynn
