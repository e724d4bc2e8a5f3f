#include <msafe/dataset.hpp>
#include <msafe/error.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace msafe {
namespace {

// Relative slack for floating-point window endpoints.
constexpr double window_slack = 1e-12;

} // namespace

LinearInterpolant::LinearInterpolant(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values))
{
    if (times_.size() != values_.size()) throw DataError("signal: time and value counts differ");
    if (times_.size() < 2) throw DataError("signal: need at least two samples");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!std::isfinite(times_[i]) || !std::isfinite(values_[i])) {
            throw DataError("signal: non-finite sample at index " + std::to_string(i));
        }
        if (i > 0 && !(times_[i] > times_[i - 1])) {
            throw DataError("signal: sample times must be strictly increasing (index " + std::to_string(i) + ")");
        }
    }
}

double LinearInterpolant::operator()(double t) const
{
    const double span = times_.back() - times_.front();
    if (t < times_.front() - window_slack * span || t > times_.back() + window_slack * span) {
        throw DataError("signal: time " + std::to_string(t) + " outside sampled range");
    }
    t = std::clamp(t, times_.front(), times_.back());
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t j = it == times_.end() ? times_.size() - 2 : static_cast<std::size_t>(it - times_.begin()) - 1;
    j = std::min(j, times_.size() - 2);
    const double a = times_[j];
    const double b = times_[j + 1];
    const double s = (t - a) / (b - a);
    return values_[j] + s * (values_[j + 1] - values_[j]);
}

LinearInterpolant interpolate_signal(std::span<const double> times, std::span<const double> values)
{
    return LinearInterpolant({times.begin(), times.end()}, {values.begin(), values.end()});
}

PiecewisePolynomial historical_window(const LinearInterpolant& signal, double t, double width)
{
    if (!(width > 0.0)) throw DataError("historical window: width must be positive");
    const double span = signal.back_time() - signal.front_time();
    const double start = t - width;
    if (start < signal.front_time() - window_slack * span || t > signal.back_time() + window_slack * span) {
        std::ostringstream os;
        os << "historical window [" << start << ", " << t << "] lies outside the signal range ["
           << signal.front_time() << ", " << signal.back_time() << "]";
        throw DataError(os.str());
    }

    // Interior sample times in (start, t), visited from t backwards so that
    // tau = (t - T_j) / width is ascending.
    const auto times = signal.times();
    std::vector<double> breaks{0.0};
    std::vector<double> nodes{signal(std::clamp(t, signal.front_time(), signal.back_time()))};
    auto hi = std::lower_bound(times.begin(), times.end(), t);
    auto lo = std::upper_bound(times.begin(), times.end(), start);
    constexpr double min_gap = 1e-13;
    for (auto it = hi; it != lo;) {
        --it;
        const double tau = (t - *it) / width;
        if (tau <= breaks.back() + min_gap || tau >= 1.0 - min_gap) continue;
        breaks.push_back(tau);
        nodes.push_back(signal.values()[static_cast<std::size_t>(it - times.begin())]);
    }
    breaks.push_back(1.0);
    nodes.push_back(signal(std::clamp(start, signal.front_time(), signal.back_time())));

    std::vector<double> coeffs;
    coeffs.reserve(2 * (breaks.size() - 1));
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        coeffs.push_back(nodes[i]);
        coeffs.push_back(nodes[i + 1] - nodes[i]);
    }
    return PiecewisePolynomial(std::move(breaks), 1, std::move(coeffs));
}

double PositionMap::operator()(double z) const
{
    if (hi <= lo) return 0.5;
    return std::clamp((z - lo) / (hi - lo), 0.0, 1.0);
}

PositionMap PositionMap::from_range(std::span<const double> positions)
{
    if (positions.empty()) return {};
    const auto [mn, mx] = std::minmax_element(positions.begin(), positions.end());
    return {*mn, *mx};
}

LinearInterpolant SignalSet::interpolant(std::size_t sensor) const
{
    if (sensor >= sensors()) throw DataError("sensor index " + std::to_string(sensor) + " out of range");
    std::vector<double> v(time.size());
    for (std::size_t i = 0; i < time.size(); ++i) v[i] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(sensor));
    return LinearInterpolant(time, std::move(v));
}

std::vector<double> Dataset::normalized_positions() const
{
    const PositionMap map = position_map();
    std::vector<double> out(positions.size());
    std::transform(positions.begin(), positions.end(), out.begin(), map);
    return out;
}

void Dataset::validate() const
{
    if (times.size() != positions.size() || times.size() != responses.size()) {
        throw DataError("dataset: times, positions and responses must have equal length");
    }
    if (times.empty()) throw DataError("dataset: no response instants");
    if (signals.time.size() < 2) throw DataError("dataset: signal grid needs at least two samples");
    if (static_cast<std::size_t>(signals.values.rows()) != signals.time.size()) {
        throw DataError("dataset: signal matrix rows do not match the time grid");
    }
    if (signals.sensors() == 0) throw DataError("dataset: no sensors");
    if (!(window > 0.0)) throw DataError("dataset: window must be positive");
    for (std::size_t i = 1; i < signals.time.size(); ++i) {
        if (!(signals.time[i] > signals.time[i - 1])) {
            throw DataError("dataset: signal times must be strictly increasing");
        }
    }
    if (!signals.values.allFinite()) throw DataError("dataset: non-finite signal values");
    const double span = signals.time.back() - signals.time.front();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || !std::isfinite(positions[i]) || !std::isfinite(responses[i])) {
            throw DataError("dataset: non-finite value in row " + std::to_string(i));
        }
        if (times[i] - window < signals.time.front() - window_slack * span
            || times[i] > signals.time.back() + window_slack * span) {
            std::ostringstream os;
            os << "dataset: window [" << times[i] - window << ", " << times[i] << "] for row " << i
               << " is outside the signal range";
            throw DataError(os.str());
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
    Dataset out;
    out.signals = signals;
    out.window = window;
    for (std::size_t r : rows) {
        out.times.push_back(times.at(r));
        out.positions.push_back(positions.at(r));
        out.responses.push_back(responses.at(r));
    }
    return out;
}

} // namespace msafe
