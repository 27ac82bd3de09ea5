#pragma once

// Exact Kantorovich-Rubinstein (W1) distance between two N-point empirical
// measures with equal weights. By Birkhoff, an optimal plan is a permutation,
// so the problem is a dense linear assignment on Euclidean costs.
//
// Solver: Jonker-Volgenant (column reduction, reduction transfer, augmenting
// row reduction, then Dijkstra-style shortest augmenting paths). It keeps
// dual potentials (u, w) with u_i + w_j <= c_ij and equality on the matching,
// which are returned as an optimality certificate.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "kinetic/errors.hpp"
#include "kinetic/velocity.hpp"

namespace kinetic {

using PointCloud = std::vector<Velocity>;

struct DualPotentials {
    std::vector<double> u;  // rows (points of A)
    std::vector<double> w;  // columns (points of B)
};

struct TransportPlan {
    std::vector<int> matching;  // A[i] is sent to B[matching[i]]
    double cost = 0.0;          // (1/N) sum_i |A[i] - B[matching[i]]|
    std::optional<DualPotentials> potentials;

    std::size_t size() const noexcept { return matching.size(); }
};

namespace detail {

inline void check_sizes(const PointCloud& A, const PointCloud& B) {
    if (A.size() != B.size()) throw SizeMismatch("point clouds differ in size");
    if (A.empty()) throw SizeMismatch("point clouds must be nonempty");
    const int d = A.front().dim();
    for (const auto& p : A) {
        if (p.dim() != d) throw SizeMismatch("mixed dimensions in first cloud");
    }
    for (const auto& p : B) {
        if (p.dim() != d) throw SizeMismatch("mixed dimensions in second cloud");
    }
}

inline double plan_cost(const PointCloud& A, const PointCloud& B, std::span<const int> match) {
    double s = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) s += distance(A[i], B[static_cast<std::size_t>(match[i])]);
    return s / static_cast<double>(A.size());
}

// Dense row-major cost matrix.
class CostMatrix {
public:
    CostMatrix(const PointCloud& A, const PointCloud& B) : n_(A.size()), c_(n_ * n_) {
        for (std::size_t i = 0; i < n_; ++i) {
            double* row = &c_[i * n_];
            for (std::size_t j = 0; j < n_; ++j) row[j] = distance(A[i], B[j]);
        }
    }
    std::size_t size() const noexcept { return n_; }
    const double* row(std::size_t i) const noexcept { return &c_[i * n_]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return c_[i * n_ + j]; }
    double max_entry() const noexcept { return c_.empty() ? 0.0 : *std::max_element(c_.begin(), c_.end()); }

private:
    std::size_t n_;
    std::vector<double> c_;
};

// Returns row -> column assignment; fills column potentials v.
inline std::vector<int> lapjv(const CostMatrix& cost, std::vector<double>& v) {
    const int n = static_cast<int>(cost.size());
    constexpr double kBig = std::numeric_limits<double>::infinity();
    std::vector<int> rowsol(n, -1), colsol(n, -1), matches(n, 0), freerows(n), collist(n), pred(n);
    std::vector<double> d(n);
    v.assign(n, 0.0);

    // column reduction
    for (int j = n - 1; j >= 0; --j) {
        double mn = cost(0, j);
        int imin = 0;
        for (int i = 1; i < n; ++i) {
            if (cost(i, j) < mn) {
                mn = cost(i, j);
                imin = i;
            }
        }
        v[j] = mn;
        if (++matches[imin] == 1) {
            rowsol[imin] = j;
            colsol[j] = imin;
        } else if (v[j] < v[rowsol[imin]]) {
            const int j1 = rowsol[imin];
            rowsol[imin] = j;
            colsol[j] = imin;
            colsol[j1] = -1;
        } else {
            colsol[j] = -1;
        }
    }

    // reduction transfer
    int numfree = 0;
    for (int i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            freerows[numfree++] = i;
        } else if (matches[i] == 1) {
            const int j1 = rowsol[i];
            double mn = kBig;
            const double* ci = cost.row(i);
            for (int j = 0; j < n; ++j) {
                if (j != j1 && ci[j] - v[j] < mn) mn = ci[j] - v[j];
            }
            if (mn < kBig) v[j1] -= mn;
        }
    }

    // augmenting row reduction, two passes; the step cap guards against
    // floating-point cycling and leaves remaining rows to the Dijkstra phase
    long long budget = 64LL * n + 1024;
    for (int pass = 0; pass < 2 && n > 1; ++pass) {
        int k = 0;
        const int prvnumfree = numfree;
        numfree = 0;
        while (k < prvnumfree) {
            const int i = freerows[k++];
            const double* ci = cost.row(i);
            double umin = ci[0] - v[0];
            int j1 = 0;
            int j2 = -1;
            double usubmin = kBig;
            for (int j = 1; j < n; ++j) {
                const double h = ci[j] - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            int i0 = colsol[j1];
            const bool strict = umin < usubmin;
            if (strict) {
                v[j1] -= usubmin - umin;
            } else if (i0 > -1 && j2 >= 0) {
                j1 = j2;
                i0 = colsol[j2];
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if (i0 > -1) {
                rowsol[i0] = -1;
                if (strict && --budget > 0) {
                    freerows[--k] = i0;
                } else {
                    freerows[numfree++] = i0;
                }
            }
        }
    }

    // shortest augmenting paths
    for (int f = 0; f < numfree; ++f) {
        const int freerow = freerows[f];
        const double* cf = cost.row(freerow);
        for (int j = 0; j < n; ++j) {
            d[j] = cf[j] - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        int low = 0;
        int up = 0;
        int last = 0;
        int endofpath = -1;
        double mn = 0.0;
        bool found = false;
        while (!found) {
            if (up == low) {
                last = low - 1;
                mn = d[collist[up++]];
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double h = d[j];
                    if (h <= mn) {
                        if (h < mn) {
                            up = low;
                            mn = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (int k = low; k < up; ++k) {
                    if (colsol[collist[k]] < 0) {
                        endofpath = collist[k];
                        found = true;
                        break;
                    }
                }
            }
            if (!found) {
                const int j1 = collist[low++];
                const int i = colsol[j1];
                const double* ci = cost.row(i);
                const double h = ci[j1] - v[j1] - mn;
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double v2 = ci[j] - v[j] - h;
                    if (v2 < d[j]) {
                        pred[j] = i;
                        if (v2 == mn) {
                            if (colsol[j] < 0) {
                                endofpath = j;
                                found = true;
                                break;
                            }
                            collist[k] = collist[up];
                            collist[up++] = j;
                        }
                        d[j] = v2;
                    }
                }
            }
        }
        for (int k = 0; k <= last; ++k) {
            const int j1 = collist[k];
            v[j1] += d[j1] - mn;
        }
        int i = -1;
        do {
            i = pred[endofpath];
            colsol[endofpath] = i;
            const int j1 = endofpath;
            endofpath = rowsol[i];
            rowsol[i] = j1;
        } while (i != freerow);
    }
    return rowsol;
}

// Among optimal matchings (perfect matchings on tight edges), move to the
// lexicographically smallest one. Row i is fixed in increasing order; for
// each smaller tight column we look for an alternating path through
// unfixed rows that frees it.
inline void lexicographic_repair(const CostMatrix& cost, const std::vector<double>& u, const std::vector<double>& w,
                                 std::vector<int>& rowsol, double tol) {
    const int n = static_cast<int>(rowsol.size());
    std::vector<std::vector<int>> tight(n);
    bool any_extra = false;
    for (int i = 0; i < n; ++i) {
        const double* ci = cost.row(i);
        for (int j = 0; j < n; ++j) {
            if (ci[j] - u[i] - w[j] <= tol) {
                tight[i].push_back(j);
                if (j != rowsol[i]) any_extra = true;
            }
        }
    }
    if (!any_extra) return;

    std::vector<int> colsol(n);
    for (int i = 0; i < n; ++i) colsol[rowsol[i]] = i;
    std::vector<int> col_from(n), row_seen(n);
    int stamp = 0;

    for (int i = 0; i < n; ++i) {
        for (int j : tight[i]) {
            if (j >= rowsol[i]) break;
            // Reassign i -> j. Row r = colsol[j] must reach column rowsol[i]
            // along tight edges, touching only rows > i.
            const int target = rowsol[i];
            const int r0 = colsol[j];
            if (r0 <= i) continue;
            ++stamp;
            std::vector<int> queue{r0};
            std::fill(col_from.begin(), col_from.end(), -1);
            row_seen[r0] = stamp;
            bool reached = false;
            for (std::size_t q = 0; q < queue.size() && !reached; ++q) {
                const int r = queue[q];
                for (int c : tight[r]) {
                    if (c == rowsol[r] || c == j || col_from[c] >= 0) continue;
                    col_from[c] = r;
                    if (c == target) {
                        reached = true;
                        break;
                    }
                    const int nr = colsol[c];
                    if (nr > i && row_seen[nr] != stamp) {
                        row_seen[nr] = stamp;
                        queue.push_back(nr);
                    }
                }
            }
            if (!reached) continue;
            // shift columns back along the path
            int c = target;
            while (true) {
                const int r = col_from[c];
                const int prev = rowsol[r];
                rowsol[r] = c;
                colsol[c] = r;
                if (r == r0) break;
                c = prev;
            }
            rowsol[i] = j;
            colsol[j] = i;
            break;
        }
    }
}

}  // namespace detail

/// Optimal plan with dual certificate. Ties are broken toward the
/// lexicographically smallest matching.
inline TransportPlan w1_exact(const PointCloud& A, const PointCloud& B) {
    detail::check_sizes(A, B);
    const std::size_t n = A.size();
    const detail::CostMatrix cost(A, B);

    std::vector<double> w;
    std::vector<int> rowsol = detail::lapjv(cost, w);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = cost(i, static_cast<std::size_t>(rowsol[i])) - w[static_cast<std::size_t>(rowsol[i])];

    // Row duals from the matching may exceed a row minimum by roundoff;
    // lowering u_i to the row minimum keeps feasibility exact.
    for (std::size_t i = 0; i < n; ++i) {
        const double* ci = cost.row(i);
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) m = std::min(m, ci[j] - w[j]);
        u[i] = std::min(u[i], m);
    }

    const double tol = 1e-12 * std::max(1.0, cost.max_entry());
    detail::lexicographic_repair(cost, u, w, rowsol, tol);

    TransportPlan plan;
    plan.matching = std::move(rowsol);
    plan.cost = detail::plan_cost(A, B, plan.matching);
    plan.potentials = DualPotentials{std::move(u), std::move(w)};
    return plan;
}

/// Exhaustive minimum over all N! permutations (N <= 9). Among plans within
/// 1e-12 of the best cost the lexicographically first is kept.
inline TransportPlan w1_bruteforce(const PointCloud& A, const PointCloud& B) {
    detail::check_sizes(A, B);
    if (A.size() > 9) throw TooLarge("brute-force transport is limited to N <= 9");
    const std::size_t n = A.size();
    std::vector<double> c(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] = distance(A[i], B[j]);
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_sum = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += c[i * n + static_cast<std::size_t>(perm[i])];
        if (s < best_sum - 1e-12) {
            best_sum = s;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    TransportPlan plan;
    plan.matching = best;
    plan.cost = detail::plan_cost(A, B, best);
    return plan;
}

/// W1 on the line by monotone rearrangement.
inline double w1_sorted_1d(std::vector<double> a, std::vector<double> b) {
    if (a.size() != b.size()) throw SizeMismatch("scalar samples differ in size");
    if (a.empty()) return 0.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

/// Checks dual feasibility (u_i + w_j <= c_ij + tol) and primal = dual
/// within tol, both on the raw per-pair costs.
inline bool verify_duality(const TransportPlan& plan, const PointCloud& A, const PointCloud& B, double tol = 1e-9) {
    if (!plan.potentials) throw MissingCertificate("plan carries no dual potentials");
    detail::check_sizes(A, B);
    const auto& [u, w] = *plan.potentials;
    const std::size_t n = A.size();
    if (plan.matching.size() != n || u.size() != n || w.size() != n) throw PlanMismatch("plan size differs from N");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (u[i] + w[j] > distance(A[i], B[j]) + tol) return false;
        }
    }
    double primal = 0.0;
    for (std::size_t i = 0; i < n; ++i) primal += distance(A[i], B[static_cast<std::size_t>(plan.matching[i])]);
    const double dual = std::accumulate(u.begin(), u.end(), 0.0) + std::accumulate(w.begin(), w.end(), 0.0);
    const double nn = static_cast<double>(n);
    return std::abs(primal / nn - dual / nn) <= tol && std::abs(plan.cost - primal / nn) <= tol;
}

/// CSV rows (i, j, cost_ij) with a header line.
inline void write_plan_csv(std::ostream& os, const TransportPlan& plan, const PointCloud& A, const PointCloud& B) {
    os << "i,j,cost_ij\n";
    char buf[64];
    for (std::size_t i = 0; i < plan.matching.size(); ++i) {
        const auto j = static_cast<std::size_t>(plan.matching[i]);
        std::snprintf(buf, sizeof buf, "%.17g", distance(A[i], B[j]));
        os << i << ',' << j << ',' << buf << '\n';
    }
}

}  // namespace kinetic
