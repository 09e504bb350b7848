#include "spintok/analysis.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "spintok/config.hpp"
#include "spintok/util.hpp"

namespace spintok {

MetricMatrix MetricMatrix::from_reports(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw ValidationError("metric matrix needs at least one report");
    MetricMatrix m;
    for (const auto& [name, o] : reports.front().orientations) {
        m.metric_names.push_back(name);
        m.orientations[name] = o;
    }
    m.values.resize(static_cast<Eigen::Index>(reports.size()), static_cast<Eigen::Index>(m.metric_names.size()));
    for (std::size_t r = 0; r < reports.size(); ++r) {
        const auto& report = reports[r];
        if (report.values.size() != m.metric_names.size())
            throw ValidationError("report '" + report.tokenizer_id + "' does not cover the common metric set");
        for (const auto& id : m.tokenizer_ids)
            if (id == report.tokenizer_id)
                throw ValidationError("duplicate tokenizer id '" + report.tokenizer_id + "'");
        m.tokenizer_ids.push_back(report.tokenizer_id);
        for (std::size_t c = 0; c < m.metric_names.size(); ++c) {
            const auto& name = m.metric_names[c];
            auto it = report.values.find(name);
            if (it == report.values.end())
                throw ValidationError("report '" + report.tokenizer_id + "' is missing metric '" + name + "'");
            auto ot = report.orientations.find(name);
            if (ot == report.orientations.end() || ot->second != m.orientations[name])
                throw ValidationError("report '" + report.tokenizer_id + "' disagrees on orientation of '" + name + "'");
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = it->second;
        }
    }
    return m;
}

void sign_adjust(MetricMatrix& matrix) {
    if (matrix.sign_adjusted) throw ConfigError("sign_adjust applied twice; values would flip back");
    for (std::size_t c = 0; c < matrix.metric_names.size(); ++c) {
        auto it = matrix.orientations.find(matrix.metric_names[c]);
        if (it == matrix.orientations.end())
            throw ConfigError("metric '" + matrix.metric_names[c] + "' has no orientation");
        if (it->second == Orientation::LowerBetter)
            matrix.values.col(static_cast<Eigen::Index>(c)) *= -1.0;
    }
    matrix.sign_adjusted = true;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw LengthError("pearson inputs must have equal length");
    if (x.size() < 3) throw ValidationError("pearson needs at least 3 points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pearson input is constant");
    return sxy / std::sqrt(sxx * syy);
}

CorrelationResult correlation_matrix(const MetricMatrix& matrix) {
    if (!matrix.sign_adjusted) throw ConfigError("correlation_matrix requires a sign-adjusted metric matrix");
    if (matrix.values.rows() < 3) throw ValidationError("correlation needs at least 3 tokenizers");
    const auto n = static_cast<Eigen::Index>(matrix.metric_names.size());
    CorrelationResult result;
    result.metric_names = matrix.metric_names;
    result.r = MatrixD::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    result.flagged.assign(n, std::vector<bool>(n, false));

    std::vector<bool> degenerate(n, false);
    for (Eigen::Index c = 0; c < n; ++c) {
        double first = matrix.values(0, c);
        bool constant = true;
        for (Eigen::Index r = 1; r < matrix.values.rows(); ++r)
            if (matrix.values(r, c) != first) constant = false;
        degenerate[c] = constant;
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            if (i == j && !degenerate[i]) {
                result.r(i, i) = 1.0;
                continue;
            }
            if (degenerate[i] || degenerate[j]) {
                result.flagged[i][j] = result.flagged[j][i] = true;
                continue;
            }
            std::vector<double> x(matrix.values.rows()), y(matrix.values.rows());
            for (Eigen::Index r = 0; r < matrix.values.rows(); ++r) {
                x[r] = matrix.values(r, i);
                y[r] = matrix.values(r, j);
            }
            double v = pearson(x, y);
            result.r(i, j) = v;
            result.r(j, i) = v;
        }
    }
    return result;
}

namespace {

std::string fixed(double v, int width) {
    std::ostringstream os;
    os << std::setw(width) << std::fixed << std::setprecision(3) << v;
    return os.str();
}

}  // namespace

std::string CorrelationResult::render_table() const {
    std::size_t name_w = 6;
    for (const auto& n : metric_names) name_w = std::max(name_w, n.size());
    std::ostringstream os;
    os << std::string(name_w, ' ');
    for (const auto& n : metric_names) os << ' ' << std::setw(static_cast<int>(std::max<std::size_t>(8, n.size()))) << n;
    os << "\n";
    for (std::size_t i = 0; i < metric_names.size(); ++i) {
        os << std::setw(static_cast<int>(name_w)) << metric_names[i];
        for (std::size_t j = 0; j < metric_names.size(); ++j) {
            int w = static_cast<int>(std::max<std::size_t>(8, metric_names[j].size()));
            if (flagged[i][j])
                os << ' ' << std::setw(w) << "--";
            else
                os << ' ' << fixed(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), w);
        }
        os << "\n";
    }
    return os.str();
}

void CorrelationResult::save(const std::filesystem::path& path) const {
    KeyValueFile kv;
    for (std::size_t i = 0; i < metric_names.size(); ++i) {
        for (std::size_t j = 0; j < metric_names.size(); ++j) {
            std::string key = "corr." + metric_names[i] + "." + metric_names[j];
            kv.set(key, flagged[i][j]
                            ? "degenerate"
                            : format_double(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
    }
    kv.save(path);
}

std::string render_metric_table(const MetricMatrix& matrix) {
    std::size_t id_w = 9;
    for (const auto& id : matrix.tokenizer_ids) id_w = std::max(id_w, id.size());
    std::ostringstream os;
    os << std::setw(static_cast<int>(id_w)) << "tokenizer";
    for (const auto& n : matrix.metric_names)
        os << ' ' << std::setw(static_cast<int>(std::max<std::size_t>(10, n.size()))) << n;
    os << "\n";
    for (std::size_t r = 0; r < matrix.tokenizer_ids.size(); ++r) {
        os << std::setw(static_cast<int>(id_w)) << matrix.tokenizer_ids[r];
        for (std::size_t c = 0; c < matrix.metric_names.size(); ++c) {
            int w = static_cast<int>(std::max<std::size_t>(10, matrix.metric_names[c].size()));
            os << ' ' << fixed(matrix.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)), w);
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace spintok
