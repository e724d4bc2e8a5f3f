#include <msafe/assembly.hpp>
#include <msafe/error.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace msafe {

std::vector<Eigen::Index> DesignBlock::occupied_columns() const
{
    std::vector<Eigen::Index> out;
    for (Eigen::Index c = 0; c < matrix.outerSize(); ++c) {
        if (matrix.outerIndexPtr()[c + 1] > matrix.outerIndexPtr()[c]) out.push_back(c);
    }
    return out;
}

Eigen::MatrixXd window_coefficients(const Dataset& data, std::size_t sensor, const BasisSet& t_basis,
                                    std::size_t count)
{
    if (count > t_basis.size()) throw UsageError("window coefficients: more columns requested than basis functions");
    const LinearInterpolant signal = data.signals.interpolant(sensor);
    Eigen::MatrixXd c(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const PiecewisePolynomial window = historical_window(signal, data.times[i], data.window);
        for (std::size_t j = 0; j < count; ++j) {
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inner_product(window, t_basis.functions[j]);
        }
    }
    return c;
}

Eigen::MatrixXd position_values(const BasisSet& z_basis, std::span<const double> z)
{
    Eigen::MatrixXd s(static_cast<Eigen::Index>(z.size()), static_cast<Eigen::Index>(z_basis.size()));
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t l = 0; l < z_basis.size(); ++l) {
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = z_basis.functions[l](z[i]);
        }
    }
    return s;
}

DesignBlock tensor_block(std::size_t sensor, const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& z_values,
                         std::size_t t_dim, int truncation_level)
{
    if (coefficients.rows() != z_values.rows()) {
        throw UsageError("tensor block: coefficient and position rows differ");
    }
    if (static_cast<std::size_t>(coefficients.cols()) > t_dim) {
        throw UsageError("tensor block: more coefficient columns than t dimension");
    }
    DesignBlock block;
    block.sensor = sensor;
    block.t_dim = t_dim;
    block.z_dim = static_cast<std::size_t>(z_values.cols());
    block.truncation_level = truncation_level;

    const Eigen::Index rows = coefficients.rows();
    const auto cols = static_cast<Eigen::Index>(t_dim * block.z_dim);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(rows * coefficients.cols() * 4));
    for (Eigen::Index l = 0; l < z_values.cols(); ++l) {
        for (Eigen::Index j = 0; j < coefficients.cols(); ++j) {
            const Eigen::Index col = l * static_cast<Eigen::Index>(t_dim) + j;
            for (Eigen::Index i = 0; i < rows; ++i) {
                const double v = z_values(i, l) * coefficients(i, j);
                if (v != 0.0) triplets.emplace_back(i, col, v);
            }
        }
    }
    block.matrix.resize(rows, cols);
    block.matrix.setFromTriplets(triplets.begin(), triplets.end());
    block.matrix.makeCompressed();
    return block;
}

DesignBlock assemble_block(const Dataset& data, std::size_t sensor, const BasisSet& t_basis,
                           const BasisSet& z_basis, int m)
{
    if (sensor >= data.sensors()) {
        throw UsageError("assemble: sensor " + std::to_string(sensor) + " out of range");
    }
    int level = -1;
    std::size_t count = t_basis.size();
    if (t_basis.kind == BasisKind::multiscale && m >= 0 && m < t_basis.level) {
        level = m;
        count = t_basis.count_through_level(m);
    }
    const Eigen::MatrixXd c = window_coefficients(data, sensor, t_basis, count);
    const Eigen::MatrixXd s = position_values(z_basis, data.normalized_positions());
    return tensor_block(sensor, c, s, t_basis.size(), level);
}

DesignBlock sparsify(const DesignBlock& block, double keep)
{
    if (!(keep > 0.0) || keep > 1.0) throw UsageError("sparsify: keep fraction must lie in (0, 1]");
    const double total = static_cast<double>(block.rows()) * static_cast<double>(block.cols());
    const auto quota = static_cast<std::size_t>(std::ceil(keep * total - 1e-9));

    struct Entry
    {
        Eigen::Index row, col;
        double value;
    };
    std::vector<Entry> entries;
    entries.reserve(block.nonzeros());
    for (Eigen::Index c = 0; c < block.matrix.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(block.matrix, c); it; ++it) {
            if (it.value() != 0.0) entries.push_back({it.row(), it.col(), it.value()});
        }
    }

    DesignBlock out = block;
    if (entries.size() > quota) {
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            const double ma = std::abs(a.value);
            const double mb = std::abs(b.value);
            if (ma != mb) return ma > mb;
            if (a.row != b.row) return a.row < b.row;
            return a.col < b.col;
        });
        entries.resize(quota);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(entries.size());
    for (const auto& e : entries) triplets.emplace_back(e.row, e.col, e.value);
    out.matrix.setZero();
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    out.matrix.makeCompressed();
    out.kept_fraction = total > 0 ? static_cast<double>(out.nonzeros()) / total : 1.0;
    return out;
}

double spectral_norm(const SparseMatrix& a, int max_iter, double tol)
{
    if (a.nonZeros() == 0) return 0.0;
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    Eigen::VectorXd v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
    v.normalize();

    double estimate = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd av = a * v;
        Eigen::VectorXd w = a.transpose() * av;
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        v = w / next;
        if (std::abs(next - estimate) <= tol * next) {
            estimate = next;
            break;
        }
        estimate = next;
    }
    return std::sqrt(estimate);
}

double truncation_error(const DesignBlock& full, const BasisSet& t_basis, int m)
{
    if (full.t_dim != t_basis.size()) throw UsageError("truncation error: block does not match the t basis");
    if (full.truncation_level >= 0) throw UsageError("truncation error: block is already truncated");
    const std::size_t keep = t_basis.count_through_level(m);
    if (keep >= full.t_dim) return 0.0;

    std::vector<Eigen::Triplet<double>> dropped;
    for (Eigen::Index c = 0; c < full.matrix.outerSize(); ++c) {
        if (static_cast<std::size_t>(c) % full.t_dim < keep) continue;
        for (SparseMatrix::InnerIterator it(full.matrix, c); it; ++it) {
            dropped.emplace_back(it.row(), it.col(), it.value());
        }
    }
    SparseMatrix d(full.matrix.rows(), full.matrix.cols());
    d.setFromTriplets(dropped.begin(), dropped.end());
    return spectral_norm(d);
}

void write_block(std::ostream& out, const DesignBlock& block)
{
    // CSR order: rows ascending, columns ascending within a row.
    Eigen::SparseMatrix<double, Eigen::RowMajor> csr = block.matrix;
    csr.makeCompressed();
    out << "# sensor=" << block.sensor << " t_dim=" << block.t_dim << " z_dim=" << block.z_dim
        << " truncation=" << block.truncation_level << " kept_fraction=" << std::setprecision(17)
        << block.kept_fraction << '\n';
    out << csr.rows() << ',' << csr.cols() << ',' << csr.nonZeros() << '\n';
    for (Eigen::Index r = 0; r < csr.outerSize(); ++r) {
        for (decltype(csr)::InnerIterator it(csr, r); it; ++it) {
            out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
        }
    }
}

DesignBlock read_block(std::istream& in)
{
    DesignBlock block;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw DataError("block file line " + std::to_string(line_no) + ": " + msg);
    };

    bool have_header = false;
    long long rows = 0, cols = 0, nnz = 0;
    std::vector<Eigen::Triplet<double>> triplets;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string kv;
            while (meta >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = kv.substr(0, eq);
                const std::string value = kv.substr(eq + 1);
                if (key == "sensor") block.sensor = std::stoul(value);
                else if (key == "t_dim") block.t_dim = std::stoul(value);
                else if (key == "z_dim") block.z_dim = std::stoul(value);
                else if (key == "truncation") block.truncation_level = std::stoi(value);
                else if (key == "kept_fraction") block.kept_fraction = std::stod(value);
            }
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        if (!have_header) {
            if (!(fields >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) fail("bad header");
            have_header = true;
            triplets.reserve(static_cast<std::size_t>(nnz));
            continue;
        }
        long long r = 0, c = 0;
        double v = 0.0;
        if (!(fields >> r >> c >> v)) fail("bad record");
        if (r < 0 || r >= rows || c < 0 || c >= cols) fail("index out of range");
        triplets.emplace_back(r, c, v);
    }
    if (!have_header) throw DataError("block file: missing header");
    if (static_cast<long long>(triplets.size()) != nnz) throw DataError("block file: record count does not match nnz");
    if (block.t_dim == 0) block.t_dim = static_cast<std::size_t>(cols);
    if (block.z_dim == 0) block.z_dim = block.t_dim ? static_cast<std::size_t>(cols) / block.t_dim : 0;
    block.matrix.resize(rows, cols);
    block.matrix.setFromTriplets(triplets.begin(), triplets.end());
    block.matrix.makeCompressed();
    return block;
}

} // namespace msafe
