#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spintok/metrics.hpp"
#include "spintok/types.hpp"

namespace spintok {

// Tokenizers x metrics value matrix assembled from per-tokenizer reports.
// All reports must cover the same metric set with the same orientations.
struct MetricMatrix {
    std::vector<std::string> tokenizer_ids;
    std::vector<std::string> metric_names;
    MatrixD values;  // tokenizers x metrics
    std::map<std::string, Orientation> orientations;
    bool sign_adjusted = false;

    static MetricMatrix from_reports(const std::vector<MetricReport>& reports);
};

// Negates lower-better columns so that "larger is better" holds everywhere.
// Refuses to run twice on the same matrix.
void sign_adjust(MetricMatrix& matrix);

// Sample Pearson correlation. Inputs must have equal length >= 3 and must not
// be constant.
double pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationResult {
    std::vector<std::string> metric_names;
    MatrixD r;                              // metrics x metrics, NaN where degenerate
    std::vector<std::vector<bool>> flagged; // degenerate cells

    std::string render_table() const;
    void save(const std::filesystem::path& path) const;
};

// Pairwise metric correlations over tokenizers. Requires a sign-adjusted
// matrix; degenerate (constant) columns yield flagged cells, not zeros.
CorrelationResult correlation_matrix(const MetricMatrix& matrix);

// Aligned text table of raw metric values per tokenizer.
std::string render_metric_table(const MetricMatrix& matrix);

}  // namespace spintok
