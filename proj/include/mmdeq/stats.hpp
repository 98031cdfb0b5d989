#pragma once

#include <cmath>
#include <cstddef>

namespace mmdeq {

// Quantile of the standard normal distribution (Wichura's AS 241,
// double-precision branch).
double normal_quantile(double p);

// P(chi^2_1 > x).
double chisq1_sf(double x);

// Neumaier compensated summation; permutation of inputs changes the result
// only at the level of the compensation term.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace mmdeq
