#pragma once

// Dense design matrices and the internal feature standardization shared by the
// trainers. Persisted coefficients are always in raw feature space.

#include "notifsurv/errors.hpp"
#include "notifsurv/pipeline.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace notifsurv {

/// Neumaier-compensated running sum; keeps large reductions reproducible and
/// accurate enough for line searches near the optimum.
class CompensatedSum {
public:
    void add(double v) noexcept
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct Standardization {
    std::vector<double> mean;  // per slot; 0 for the intercept
    std::vector<double> scale; // per slot; 1 for the intercept and constant slots
};

struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // row-major

    [[nodiscard]] std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

inline std::size_t checked_width(const std::vector<Observation>& data)
{
    if (data.empty()) {
        throw DataError("no observations");
    }
    const std::size_t p = data.front().features.values.size();
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].features.values.size() != p) {
            throw DataError("observation " + std::to_string(i) + " has " + std::to_string(data[i].features.values.size())
                            + " feature slots, expected " + std::to_string(p));
        }
    }
    return p;
}

inline Standardization compute_standardization(const std::vector<Observation>& data, std::size_t intercept)
{
    const std::size_t p = checked_width(data);
    Standardization st{std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)};
    const double n = static_cast<double>(data.size());
    for (std::size_t j = 0; j < p; ++j) {
        if (j == intercept) {
            continue;
        }
        CompensatedSum s;
        for (const auto& o : data) {
            s.add(o.features.values[j]);
        }
        const double m = s.value() / n;
        CompensatedSum v;
        for (const auto& o : data) {
            const double d = o.features.values[j] - m;
            v.add(d * d);
        }
        const double sd = std::sqrt(v.value() / n);
        if (sd > 1e-12 * std::max(1.0, std::abs(m))) {
            st.mean[j] = m;
            st.scale[j] = sd;
        }
    }
    return st;
}

inline Standardization identity_standardization(std::size_t p)
{
    return {std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)};
}

inline DesignMatrix build_design(const std::vector<Observation>& data, const Standardization& st)
{
    DesignMatrix d;
    d.rows = data.size();
    d.cols = checked_width(data);
    d.values.resize(d.rows * d.cols);
    for (std::size_t i = 0; i < d.rows; ++i) {
        const auto& x = data[i].features.values;
        for (std::size_t j = 0; j < d.cols; ++j) {
            d.values[i * d.cols + j] = (x[j] - st.mean[j]) / st.scale[j];
        }
    }
    return d;
}

/// Maps coefficients fitted on standardized columns back to raw columns.
inline std::vector<double> unstandardize(std::span<const double> b_std, const Standardization& st, std::size_t intercept)
{
    std::vector<double> b(b_std.begin(), b_std.end());
    double shift = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
        if (j == intercept) {
            continue;
        }
        b[j] = b_std[j] / st.scale[j];
        shift += b[j] * st.mean[j];
    }
    b[intercept] = b_std[intercept] - shift;
    return b;
}

} // namespace notifsurv
