#pragma once
#include <msafe/dataset.hpp>
#include <msafe/smoothing.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace msafe {

/// Displacement track at the response instants; `responses` is empty unless
/// the file carries a response column.
struct PositionTable
{
    std::vector<double> times;
    std::vector<double> positions;
    std::vector<double> responses;
};

/// Sampled signals and displacement before velocity estimation.
struct RawRecording
{
    SignalSet signals;
    PositionTable track;
    double window = 1.0 / 3.0;
};

/// Velocities from an order-6 penalized spline fit of the displacement,
/// differentiated analytically. A response column in the track is used
/// verbatim instead.
Dataset preprocess(const RawRecording& raw, const SmootherOptions& options = {});

/// Header `time,<sensor>...`; one row per sample.
SignalSet read_signals_csv(std::istream& in, const std::string& name);
SignalSet read_signals_csv(const std::filesystem::path& path);

/// Header `time,position[,response]`.
PositionTable read_positions_csv(std::istream& in, const std::string& name);
PositionTable read_positions_csv(const std::filesystem::path& path);

void write_signals_csv(std::ostream& out, const SignalSet& signals);
void write_positions_csv(std::ostream& out, const PositionTable& table);

Dataset load_dataset(const std::filesystem::path& signals_path, const std::filesystem::path& positions_path,
                     double window = 1.0 / 3.0, const SmootherOptions& options = {});

/// Writes both files; the positions file includes the response column.
void save_dataset(const Dataset& data, const std::filesystem::path& signals_path,
                  const std::filesystem::path& positions_path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

} // namespace msafe
