#include "polysched/linprog.hpp"

#include <cmath>
#include <limits>

namespace polysched {

LpResult solve_lp_max(const std::vector<std::vector<double>>& A,
                      const std::vector<double>& b,
                      const std::vector<double>& c) {
    const int m = static_cast<int>(A.size());
    const int n = static_cast<int>(c.size());
    for (double bi : b)
        if (bi < 0) throw Error("solve_lp_max requires b >= 0");

    // Tableau: m rows x (n + m + 1) columns, slack basis.
    std::vector<std::vector<double>> T(static_cast<size_t>(m),
                                       std::vector<double>(static_cast<size_t>(n + m + 1), 0.0));
    std::vector<int> basis(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) T[i][j] = A[i][j];
        T[i][n + i] = 1.0;
        T[i][n + m] = b[i];
        basis[i] = n + i;
    }
    std::vector<double> obj(static_cast<size_t>(n + m + 1), 0.0);
    for (int j = 0; j < n; ++j) obj[j] = -c[j];  // minimize -c.x

    const double eps = 1e-10;
    const int max_pivots = 20000 + 50 * (n + m);
    for (int iter = 0; iter < max_pivots; ++iter) {
        // Bland: entering = lowest-index column with negative reduced cost.
        int enter = -1;
        for (int j = 0; j < n + m; ++j)
            if (obj[j] < -eps) {
                enter = j;
                break;
            }
        if (enter < 0) break;

        // Ratio test, Bland tie-break on basis index.
        int leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (T[i][enter] > eps) {
                double ratio = T[i][n + m] / T[i][enter];
                if (ratio < best - eps ||
                    (ratio < best + eps && (leave < 0 || basis[i] < basis[leave]))) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) {
            LpResult r;
            r.status = LpResult::Status::unbounded;
            return r;
        }

        double piv = T[leave][enter];
        for (int j = 0; j <= n + m; ++j) T[leave][j] /= piv;
        for (int i = 0; i < m; ++i) {
            if (i == leave) continue;
            double f = T[i][enter];
            if (f == 0.0) continue;
            for (int j = 0; j <= n + m; ++j) T[i][j] -= f * T[leave][j];
        }
        {
            double f = obj[enter];
            if (f != 0.0) {
                for (int j = 0; j < n + m; ++j) obj[j] -= f * T[leave][j];
                obj[n + m] -= f * T[leave][n + m];
            }
        }
        basis[leave] = enter;
    }

    LpResult r;
    r.x.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) r.x[static_cast<size_t>(basis[i])] = T[i][n + m];
    r.objective = 0;
    for (int j = 0; j < n; ++j) r.objective += c[j] * r.x[static_cast<size_t>(j)];
    return r;
}

}  // namespace polysched
