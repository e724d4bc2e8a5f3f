#include <msafe/error.hpp>
#include <msafe/io.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msafe {
namespace {

struct CsvTable
{
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> lines;  // source line of each row
};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

CsvTable parse_csv(std::istream& in, const std::string& name)
{
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw DataError(name + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (t.header.empty()) {
            if (line_no == 1 && fields[0].size() >= 3 && static_cast<unsigned char>(fields[0][0]) == 0xEF) {
                fields[0] = fields[0].substr(3);  // UTF-8 byte order mark
            }
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            fail("expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto& f = fields[j];
            const char* end = f.data() + f.size();
            const auto [ptr, ec] = std::from_chars(f.data(), end, row[j]);
            if (ec != std::errc() || ptr != end) fail("cannot parse '" + f + "' in column '" + t.header[j] + "'");
            if (!std::isfinite(row[j])) fail("non-finite value in column '" + t.header[j] + "'");
        }
        t.rows.push_back(std::move(row));
        t.lines.push_back(line_no);
    }
    if (t.header.empty()) throw DataError(name + ": empty file");
    if (t.rows.empty()) throw DataError(name + ": no data rows");
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        if (!(t.rows[i][0] > t.rows[i - 1][0])) {
            throw DataError(name + ":" + std::to_string(t.lines[i]) + ": time column is not strictly increasing");
        }
    }
    return t;
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw DataError(path.string() + ": cannot write file");
    return out;
}

} // namespace

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

Dataset preprocess(const RawRecording& raw, const SmootherOptions& options)
{
    Dataset d;
    d.signals = raw.signals;
    d.window = raw.window;
    d.times = raw.track.times;
    d.positions = raw.track.positions;
    if (!raw.track.responses.empty()) {
        d.responses = raw.track.responses;
    } else {
        const SmoothingSpline fit = SmoothingSpline::fit(d.times, d.positions, options);
        d.responses.reserve(d.times.size());
        for (double t : d.times) d.responses.push_back(fit.derivative(t));
    }
    d.validate();
    return d;
}

SignalSet read_signals_csv(std::istream& in, const std::string& name)
{
    const CsvTable t = parse_csv(in, name);
    if (t.header.size() < 2) throw DataError(name + ": need a time column and at least one sensor column");
    if (t.rows.size() < 2) throw DataError(name + ": need at least two samples");
    SignalSet s;
    const auto k = static_cast<Eigen::Index>(t.header.size() - 1);
    s.values.resize(static_cast<Eigen::Index>(t.rows.size()), k);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        s.time.push_back(t.rows[i][0]);
        for (Eigen::Index j = 0; j < k; ++j) s.values(static_cast<Eigen::Index>(i), j) = t.rows[i][static_cast<std::size_t>(j) + 1];
    }
    return s;
}

SignalSet read_signals_csv(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_signals_csv(in, path.string());
}

PositionTable read_positions_csv(std::istream& in, const std::string& name)
{
    const CsvTable t = parse_csv(in, name);
    if (t.header.size() != 2 && t.header.size() != 3) {
        throw DataError(name + ": expected columns time,position[,response]");
    }
    PositionTable p;
    for (const auto& row : t.rows) {
        p.times.push_back(row[0]);
        p.positions.push_back(row[1]);
        if (row.size() == 3) p.responses.push_back(row[2]);
    }
    return p;
}

PositionTable read_positions_csv(const std::filesystem::path& path)
{
    auto in = open_input(path);
    return read_positions_csv(in, path.string());
}

void write_signals_csv(std::ostream& out, const SignalSet& signals)
{
    out << "time";
    for (std::size_t k = 0; k < signals.sensors(); ++k) out << ",s" << k + 1;
    out << '\n';
    for (std::size_t i = 0; i < signals.time.size(); ++i) {
        out << format_double(signals.time[i]);
        for (Eigen::Index k = 0; k < signals.values.cols(); ++k) {
            out << ',' << format_double(signals.values(static_cast<Eigen::Index>(i), k));
        }
        out << '\n';
    }
}

void write_positions_csv(std::ostream& out, const PositionTable& table)
{
    const bool with_response = !table.responses.empty();
    out << (with_response ? "time,position,response\n" : "time,position\n");
    for (std::size_t i = 0; i < table.times.size(); ++i) {
        out << format_double(table.times[i]) << ',' << format_double(table.positions[i]);
        if (with_response) out << ',' << format_double(table.responses[i]);
        out << '\n';
    }
}

Dataset load_dataset(const std::filesystem::path& signals_path, const std::filesystem::path& positions_path,
                     double window, const SmootherOptions& options)
{
    RawRecording raw;
    raw.signals = read_signals_csv(signals_path);
    raw.track = read_positions_csv(positions_path);
    raw.window = window;
    return preprocess(raw, options);
}

void save_dataset(const Dataset& data, const std::filesystem::path& signals_path,
                  const std::filesystem::path& positions_path)
{
    auto s = open_output(signals_path);
    write_signals_csv(s, data.signals);
    auto p = open_output(positions_path);
    write_positions_csv(p, {data.times, data.positions, data.responses});
    if (!s || !p) throw DataError("failed writing dataset files");
}

} // namespace msafe
