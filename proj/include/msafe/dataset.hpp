#pragma once
#include <msafe/piecewise.hpp>

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace msafe {

/// Continuous piecewise-linear interpolant of a sampled signal.
class LinearInterpolant
{
public:
    LinearInterpolant(std::vector<double> times, std::vector<double> values);

    double operator()(double t) const;
    double front_time() const { return times_.front(); }
    double back_time() const { return times_.back(); }
    std::span<const double> times() const { return times_; }
    std::span<const double> values() const { return values_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

LinearInterpolant interpolate_signal(std::span<const double> times, std::span<const double> values);

/// Time-reversed, rescaled window X(t - width * tau) for tau in [0,1], as a
/// piecewise-linear function on [0,1].
PiecewisePolynomial historical_window(const LinearInterpolant& signal, double t, double width);

/// Affine map of raw positions onto [0,1] from the observed range.
struct PositionMap
{
    double lo = 0.0;
    double hi = 1.0;

    double operator()(double z) const;
    static PositionMap from_range(std::span<const double> positions);
};

/// Sensor signals sampled on a shared, strictly increasing time grid.
struct SignalSet
{
    std::vector<double> time;
    Eigen::MatrixXd values;  // time.size() x sensors

    std::size_t sensors() const { return static_cast<std::size_t>(values.cols()); }
    LinearInterpolant interpolant(std::size_t sensor) const;
};

struct Dataset
{
    SignalSet signals;
    std::vector<double> times;      // t_i
    std::vector<double> positions;  // raw z_i
    std::vector<double> responses;  // y_i
    double window = 1.0 / 3.0;      // delta, seconds

    std::size_t rows() const { return times.size(); }
    std::size_t sensors() const { return signals.sensors(); }
    PositionMap position_map() const { return PositionMap::from_range(positions); }
    std::vector<double> normalized_positions() const;

    /// Checks sizes, monotone grids, finiteness and window containment.
    /// Throws DataError.
    void validate() const;

    /// Copy restricted to the given rows (signals are shared data).
    Dataset subset(std::span<const std::size_t> rows) const;
};

} // namespace msafe
