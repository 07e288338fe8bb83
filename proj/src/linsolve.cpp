#include "npheat/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "npheat/errors.hpp"

namespace npheat {

int CsrPattern::find(int row, int column) const {
    const int lo = row_ptr[row];
    const int hi = row_ptr[row + 1];
    auto begin = col.begin() + lo;
    auto end = col.begin() + hi;
    auto it = std::lower_bound(begin, end, column);
    if (it == end || *it != column)
        return -1;
    return static_cast<int>(lo + (it - begin));
}

PatternBuilder::PatternBuilder(int n) : n_(n), adjacency_(n) {}

void PatternBuilder::add_clique(std::span<const int> dofs) {
    for (int r : dofs)
        for (int c : dofs)
            adjacency_[r].push_back(c);
}

std::shared_ptr<const CsrPattern> PatternBuilder::finalize() {
    auto pattern = std::make_shared<CsrPattern>();
    pattern->n = n_;
    pattern->row_ptr.resize(n_ + 1, 0);
    for (int r = 0; r < n_; ++r) {
        auto& row = adjacency_[r];
        row.push_back(r);
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        pattern->row_ptr[r + 1] = pattern->row_ptr[r] + static_cast<int>(row.size());
    }
    pattern->col.reserve(pattern->row_ptr[n_]);
    for (int r = 0; r < n_; ++r)
        pattern->col.insert(pattern->col.end(), adjacency_[r].begin(), adjacency_[r].end());
    return pattern;
}

CsrMatrix::CsrMatrix(std::shared_ptr<const CsrPattern> pattern)
    : pattern_(std::move(pattern)), values_(pattern_->col.size(), 0.0) {}

void CsrMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

void CsrMatrix::add(int row, int column, double value) {
    const int idx = pattern_->find(row, column);
    if (idx < 0)
        throw NumericalError("matrix entry (" + std::to_string(row) + "," +
                             std::to_string(column) + ") outside the assembled pattern");
    values_[idx] += value;
}

double CsrMatrix::get(int row, int column) const {
    const int idx = pattern_->find(row, column);
    return idx < 0 ? 0.0 : values_[idx];
}

void CsrMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
    const int n = pattern_->n;
    y.assign(n, 0.0);
    for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int idx = pattern_->row_ptr[r]; idx < pattern_->row_ptr[r + 1]; ++idx)
            acc += values_[idx] * x[pattern_->col[idx]];
        y[r] = acc;
    }
}

void apply_dirichlet(CsrMatrix& a, std::vector<double>& b, std::vector<DirichletBc> bcs) {
    if (bcs.empty())
        return;
    const int n = a.n();
    std::vector<char> constrained(n, 0);
    std::vector<double> value(n, 0.0);
    for (const auto& bc : bcs) {
        if (bc.dof < 0 || bc.dof >= n)
            throw ConfigError("dirichlet dof " + std::to_string(bc.dof) + " out of range");
        if (constrained[bc.dof] && value[bc.dof] != bc.value)
            throw ConfigError("conflicting dirichlet values on dof " + std::to_string(bc.dof));
        constrained[bc.dof] = 1;
        value[bc.dof] = bc.value;
    }

    const CsrPattern& pattern = a.pattern();
    std::vector<double>& vals = a.mutable_values();
    for (int r = 0; r < n; ++r) {
        if (constrained[r]) {
            for (int idx = pattern.row_ptr[r]; idx < pattern.row_ptr[r + 1]; ++idx)
                vals[idx] = (pattern.col[idx] == r) ? 1.0 : 0.0;
            b[r] = value[r];
            continue;
        }
        for (int idx = pattern.row_ptr[r]; idx < pattern.row_ptr[r + 1]; ++idx) {
            const int c = pattern.col[idx];
            if (constrained[c]) {
                b[r] -= vals[idx] * value[c];
                vals[idx] = 0.0;
            }
        }
    }
}

namespace {

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v)
        acc += x * x;
    return std::sqrt(acc);
}

// ILU(0) factors stored in CSR layout of the original pattern; unit lower
// triangle below the diagonal, U on and above.
struct Ilu0 {
    std::vector<double> lu;
    std::vector<int> diag;
    bool ok = false;

    void factor(const CsrMatrix& a) {
        const CsrPattern& p = a.pattern();
        const int n = p.n;
        lu = a.values();
        diag.assign(n, -1);
        ok = true;
        for (int i = 0; i < n; ++i)
            diag[i] = p.find(i, i);
        for (int i = 0; i < n && ok; ++i) {
            for (int idx = p.row_ptr[i]; idx < p.row_ptr[i + 1]; ++idx) {
                const int k = p.col[idx];
                if (k >= i)
                    break;
                const double dk = (diag[k] >= 0) ? lu[diag[k]] : 0.0;
                if (dk == 0.0) {
                    ok = false;
                    break;
                }
                lu[idx] /= dk;
                for (int idx2 = idx + 1; idx2 < p.row_ptr[i + 1]; ++idx2) {
                    const int kj = p.find(k, p.col[idx2]);
                    if (kj >= 0)
                        lu[idx2] -= lu[idx] * lu[kj];
                }
            }
            if (ok && (diag[i] < 0 || lu[diag[i]] == 0.0))
                ok = false;
        }
    }

    void apply(const CsrPattern& p, const std::vector<double>& r, std::vector<double>& z) const {
        const int n = p.n;
        z = r;
        for (int i = 0; i < n; ++i) {
            double acc = z[i];
            for (int idx = p.row_ptr[i]; idx < p.row_ptr[i + 1] && p.col[idx] < i; ++idx)
                acc -= lu[idx] * z[p.col[idx]];
            z[i] = acc;
        }
        for (int i = n - 1; i >= 0; --i) {
            double acc = z[i];
            for (int idx = p.row_ptr[i + 1] - 1; idx >= p.row_ptr[i] && p.col[idx] > i; --idx)
                acc -= lu[idx] * z[p.col[idx]];
            z[i] = acc / lu[diag[i]];
        }
    }
};

} // namespace

struct LinearSolver::Impl {
    std::shared_ptr<const CsrPattern> cached_pattern;
    std::vector<double> cached_values;

    bool lu_valid = false;
    Eigen::SparseMatrix<double> lu_matrix;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

    bool ilu_valid = false;
    Ilu0 ilu;
    std::vector<double> jacobi; // fallback preconditioner when ILU(0) breaks down

    bool matches_cache(const CsrMatrix& a) const {
        return cached_pattern == a.pattern_ptr() && cached_values == a.values();
    }

    void refresh_cache(const CsrMatrix& a) {
        if (matches_cache(a))
            return;
        cached_pattern = a.pattern_ptr();
        cached_values = a.values();
        lu_valid = false;
        ilu_valid = false;
    }

    void ensure_lu(const CsrMatrix& a) {
        if (lu_valid)
            return;
        const CsrPattern& p = a.pattern();
        for (int r = 0; r < p.n; ++r) {
            bool empty = true;
            for (int idx = p.row_ptr[r]; idx < p.row_ptr[r + 1] && empty; ++idx)
                if (a.values()[idx] != 0.0)
                    empty = false;
            if (empty)
                throw NumericalError("singular matrix: row " + std::to_string(r) + " is zero");
        }
        Eigen::Map<const Eigen::SparseMatrix<double, Eigen::RowMajor, int>> map(
            p.n, p.n, static_cast<int>(p.col.size()), p.row_ptr.data(), p.col.data(),
            a.values().data());
        lu_matrix = map;
        lu.compute(lu_matrix);
        if (lu.info() != Eigen::Success)
            throw NumericalError("direct factorisation failed: singular matrix");
        lu_valid = true;
    }

    void ensure_ilu(const CsrMatrix& a) {
        if (ilu_valid)
            return;
        ilu.factor(a);
        if (!ilu.ok) {
            const CsrPattern& p = a.pattern();
            jacobi.assign(p.n, 1.0);
            for (int i = 0; i < p.n; ++i) {
                const double d = a.get(i, i);
                jacobi[i] = (d != 0.0) ? 1.0 / d : 1.0;
            }
        }
        ilu_valid = true;
    }

    void precondition(const CsrMatrix& a, const std::vector<double>& r, std::vector<double>& z) {
        if (ilu.ok)
            ilu.apply(a.pattern(), r, z);
        else {
            z.resize(r.size());
            for (std::size_t i = 0; i < r.size(); ++i)
                z[i] = r[i] * jacobi[i];
        }
    }

    std::vector<double> solve_direct(const CsrMatrix& a, const std::vector<double>& b) {
        ensure_lu(a);
        Eigen::Map<const Eigen::VectorXd> rhs(b.data(), b.size());
        Eigen::VectorXd x = lu.solve(rhs);
        if (lu.info() != Eigen::Success)
            throw NumericalError("direct solve failed");
        return std::vector<double>(x.data(), x.data() + x.size());
    }

    // Right-preconditioned restarted GMRES; the Givens-recurrence residual is
    // then the true residual norm, so the tolerance applies to ||b - A x||.
    bool solve_gmres(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                     const SolveOptions& opts, SolveStats& stats) {
        ensure_ilu(a);
        const int n = a.n();
        const int m = std::max(1, opts.restart);
        const double bnorm = norm2(b);
        x.assign(n, 0.0);
        if (bnorm == 0.0)
            return true;

        std::vector<std::vector<double>> v(m + 1, std::vector<double>(n));
        std::vector<std::vector<double>> h(m + 1, std::vector<double>(m, 0.0));
        std::vector<double> cs(m), sn(m), g(m + 1), z(n), w(n), r(n);

        double previous_cycle_residual = 1.0;
        while (stats.iterations < opts.max_iterations) {
            a.multiply(x, r);
            for (int i = 0; i < n; ++i)
                r[i] = b[i] - r[i];
            double beta = norm2(r);
            double rel = beta / bnorm;
            if (rel <= opts.tol)
                return true;
            if (!stats.history.empty() && rel > previous_cycle_residual / 1.05)
                return false; // stagnated across a restart cycle
            previous_cycle_residual = rel;

            for (int i = 0; i < n; ++i)
                v[0][i] = r[i] / beta;
            std::fill(g.begin(), g.end(), 0.0);
            g[0] = beta;

            int j = 0;
            for (; j < m && stats.iterations < opts.max_iterations; ++j) {
                precondition(a, v[j], z);
                a.multiply(z, w);
                for (int i = 0; i <= j; ++i) {
                    double dot = 0.0;
                    for (int k = 0; k < n; ++k)
                        dot += w[k] * v[i][k];
                    h[i][j] = dot;
                    for (int k = 0; k < n; ++k)
                        w[k] -= dot * v[i][k];
                }
                h[j + 1][j] = norm2(w);
                if (h[j + 1][j] > 0.0)
                    for (int k = 0; k < n; ++k)
                        v[j + 1][k] = w[k] / h[j + 1][j];
                for (int i = 0; i < j; ++i) {
                    const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                    h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                    h[i][j] = t;
                }
                const double denom = std::hypot(h[j][j], h[j + 1][j]);
                if (denom == 0.0) {
                    ++j;
                    break;
                }
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
                h[j][j] = denom;
                h[j + 1][j] = 0.0;
                g[j + 1] = -sn[j] * g[j];
                g[j] = cs[j] * g[j];
                ++stats.iterations;
                stats.history.push_back(std::abs(g[j + 1]) / bnorm);
                if (std::abs(g[j + 1]) / bnorm <= opts.tol) {
                    ++j;
                    break;
                }
            }

            // y = H^{-1} g, x += M^{-1} (V y)
            std::vector<double> y(j, 0.0);
            for (int i = j - 1; i >= 0; --i) {
                double acc = g[i];
                for (int k = i + 1; k < j; ++k)
                    acc -= h[i][k] * y[k];
                y[i] = acc / h[i][i];
            }
            std::fill(w.begin(), w.end(), 0.0);
            for (int i = 0; i < j; ++i)
                for (int k = 0; k < n; ++k)
                    w[k] += y[i] * v[i][k];
            precondition(a, w, z);
            for (int k = 0; k < n; ++k)
                x[k] += z[k];

            a.multiply(x, r);
            for (int i = 0; i < n; ++i)
                r[i] = b[i] - r[i];
            if (norm2(r) / bnorm <= opts.tol)
                return true;
        }
        return false;
    }
};

LinearSolver::LinearSolver() : impl_(std::make_unique<Impl>()) {}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

std::vector<double> LinearSolver::solve(const CsrMatrix& a, const std::vector<double>& b,
                                        const SolveOptions& opts, SolveStats* stats) {
    if (static_cast<int>(b.size()) != a.n())
        throw NumericalError("solve: rhs size does not match matrix");
    SolveStats local;
    SolveStats& st = stats ? *stats : local;
    st = SolveStats{};

    impl_->refresh_cache(a);

    const double bnorm = norm2(b);
    std::vector<double> x;
    if (bnorm == 0.0) {
        x.assign(a.n(), 0.0);
        return x;
    }

    const bool prefer_direct = !opts.force_iterative && a.n() <= opts.direct_threshold;
    if (prefer_direct) {
        st.used_direct = true;
        x = impl_->solve_direct(a, b);
    } else {
        const bool converged = impl_->solve_gmres(a, b, x, opts, st);
        if (!converged) {
            st.fallback_direct = true;
            st.used_direct = true;
            x = impl_->solve_direct(a, b);
        }
    }

    std::vector<double> r(a.n());
    a.multiply(x, r);
    for (int i = 0; i < a.n(); ++i)
        r[i] = b[i] - r[i];
    st.residual = norm2(r) / bnorm;
    for (double xi : x)
        if (!std::isfinite(xi))
            throw NumericalError("solve produced a non-finite solution");
    return x;
}

} // namespace npheat
