#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace spicov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error taxonomy. Every failure mode the library reports maps onto one of
// these; they all derive from spicov::error so callers can catch broadly.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model description is structurally invalid (empty dimension, bad kappa, ...).
struct invalid_model_error : error { using error::error; };
// Sample-size regime violated (n < p, n < p+1, ...).
struct regime_error : error { using error::error; };
// Matrix input has the wrong shape or is not symmetric.
struct shape_error : error { using error::error; };
// Spectrum contains nonpositive eigenvalues.
struct degenerate_spectrum_error : error { using error::error; };
// Eigenvalue gaps below the genericity tolerance; divided differences
// would amplify cancellation noise.
struct near_degenerate_error : error { using error::error; };
// Rank argument out of range for the operation.
struct rank_error : error { using error::error; };
// A denominator (B, a linear solve pivot) is numerically zero.
struct ill_posed_error : error { using error::error; };
// Eigenvalue below the bulk edge where a shrinker is undefined.
struct below_bulk_error : error { using error::error; };
// Scalar parameter outside the closed-form's domain.
struct domain_error : error { using error::error; };
// Experiment configuration invalid.
struct config_error : error { using error::error; };
// Filesystem failure.
struct io_error : error { using error::error; };

namespace detail {

// Neumaier compensated accumulator. The URE sums mix terms of very
// different magnitude (divided differences next to O(1) constants), so
// plain left-to-right accumulation loses digits at large p.
class Accumulator {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace detail

} // namespace spicov
