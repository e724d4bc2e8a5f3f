#include <msafe/quadrature.hpp>
#include <msafe/error.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace msafe {
namespace {

struct RuleTable
{
    std::array<std::vector<double>, max_gauss_points + 1> nodes;
    std::array<std::vector<double>, max_gauss_points + 1> weights;

    RuleTable()
    {
        for (int n = 1; n <= max_gauss_points; ++n) {
            build(n);
        }
    }

    // Newton iteration on P_n starting from the Chebyshev-like guess, then
    // an affine map from [-1,1] to [0,1].
    void build(int n)
    {
        auto& x = nodes[n];
        auto& w = weights[n];
        x.assign(n, 0.0);
        w.assign(n, 0.0);
        const int half = (n + 1) / 2;
        for (int i = 0; i < half; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = 0.0;
                for (int k = 1; k <= n; ++k) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            // recompute derivative at the converged node
            {
                double p0 = 1.0;
                double p1 = 0.0;
                for (int k = 1; k <= n; ++k) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
            }
            const double weight = 2.0 / ((1.0 - z * z) * dp * dp);
            // nodes ascending on [0,1]
            x[i] = 0.5 * (1.0 - z);
            x[n - 1 - i] = 0.5 * (1.0 + z);
            w[i] = 0.5 * weight;
            w[n - 1 - i] = 0.5 * weight;
        }
        if (n % 2 == 1) x[n / 2] = 0.5;
    }
};

const RuleTable& table()
{
    static const RuleTable t;
    return t;
}

} // namespace

GaussRule gauss_legendre(int n)
{
    if (n < 1 || n > max_gauss_points) {
        throw UsageError("gauss_legendre: unsupported point count " + std::to_string(n));
    }
    const auto& t = table();
    return {t.nodes[n], t.weights[n]};
}

GaussRule gauss_legendre_for_degree(int degree)
{
    return gauss_legendre(degree < 0 ? 1 : degree / 2 + 1);
}

} // namespace msafe
