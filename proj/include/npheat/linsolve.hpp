#ifndef NPHEAT_LINSOLVE_HPP
#define NPHEAT_LINSOLVE_HPP

#include <memory>
#include <span>
#include <vector>

namespace npheat {

// Immutable sparsity pattern, shared between matrices assembled on the same
// connectivity. Column indices are sorted within each row, so assembly order
// cannot change the stored layout (reproducible bitwise output).
struct CsrPattern {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;

    int find(int row, int column) const; // index into values, or -1
};

// Builds a pattern from cliques of coupled dofs (element node sets, network
// segment end pairs, ...). Diagonal entries are always included.
class PatternBuilder {
public:
    explicit PatternBuilder(int n);
    void add_clique(std::span<const int> dofs);
    std::shared_ptr<const CsrPattern> finalize();

private:
    int n_;
    std::vector<std::vector<int>> adjacency_;
};

class CsrMatrix {
public:
    explicit CsrMatrix(std::shared_ptr<const CsrPattern> pattern);

    int n() const { return pattern_->n; }
    const CsrPattern& pattern() const { return *pattern_; }
    const std::shared_ptr<const CsrPattern>& pattern_ptr() const { return pattern_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }

    void set_zero();
    void add(int row, int column, double value);
    double get(int row, int column) const;

    void multiply(const std::vector<double>& x, std::vector<double>& y) const;

private:
    std::shared_ptr<const CsrPattern> pattern_;
    std::vector<double> values_;
};

struct DirichletBc {
    int dof;
    double value;
};

// Symmetric elimination: constrained rows become identity, coupled rows move
// A_ic * value to the right-hand side and zero the column. Duplicate
// constraints on one dof must agree, otherwise this is a configuration error.
void apply_dirichlet(CsrMatrix& a, std::vector<double>& b, std::vector<DirichletBc> bcs);

struct SolveOptions {
    double tol = 1e-10;        // relative residual ||b - A x|| / ||b||
    int restart = 50;
    int max_iterations = 2000; // total Krylov iterations across restarts
    int direct_threshold = 20000;
    bool force_iterative = false; // testing hook, ignores direct_threshold
};

struct SolveStats {
    bool used_direct = false;
    bool fallback_direct = false; // iterative stagnated, direct finished the job
    int iterations = 0;
    double residual = 0.0; // relative, of the returned solution
    std::vector<double> history;
};

// Sparse solve with a small amount of memory: systems below the direct
// threshold go straight to LU, larger ones run restarted GMRES with an ILU(0)
// preconditioner (Jacobi if the incomplete factorisation breaks down) and fall
// back to LU on stagnation. Factorisations are cached and reused while the
// matrix values stay bitwise identical, which makes repeated time steps with a
// frozen operator cost one factorisation total.
class LinearSolver {
public:
    LinearSolver();
    ~LinearSolver();
    LinearSolver(LinearSolver&&) noexcept;
    LinearSolver& operator=(LinearSolver&&) noexcept;

    std::vector<double> solve(const CsrMatrix& a, const std::vector<double>& b,
                              const SolveOptions& opts = {}, SolveStats* stats = nullptr);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace npheat

#endif
