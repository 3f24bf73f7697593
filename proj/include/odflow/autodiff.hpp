#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "odflow/errors.hpp"
#include "odflow/matrix.hpp"

// Minimal deterministic reverse-mode differentiation over dense 2-D
// tensors. A Tape owns the intermediates of one forward pass and replays
// the recorded ops in reverse; parameters live outside the tape and keep
// accumulating gradients until an optimizer step consumes them. Everything
// is single-threaded by design: one training context, one tape.

namespace odflow::ad {

struct Tensor {
    int rows = 0, cols = 0;
    std::vector<double> val;
    std::vector<double> grad;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(int r, int c, bool rg = false) { reshape(r, c, rg); }

    static Tensor constant(const Matrix& m) {
        Tensor t(m.rows(), m.cols(), false);
        t.val = m.values();
        return t;
    }
    static Tensor parameter(const Matrix& m) {
        Tensor t(m.rows(), m.cols(), true);
        t.val = m.values();
        return t;
    }

    void reshape(int r, int c, bool rg) {
        rows = r;
        cols = c;
        requires_grad = rg;
        val.assign(static_cast<std::size_t>(r) * c, 0.0);
        grad.assign(rg ? static_cast<std::size_t>(r) * c : 0, 0.0);
    }

    std::size_t size() const { return val.size(); }
    double& v(int i, int j) { return val[static_cast<std::size_t>(i) * cols + j]; }
    double v(int i, int j) const { return val[static_cast<std::size_t>(i) * cols + j]; }
    double& g(int i, int j) { return grad[static_cast<std::size_t>(i) * cols + j]; }

    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

    Matrix to_matrix() const {
        Matrix m(rows, cols);
        m.values() = val;
        return m;
    }
};

inline std::string shape_string(const Tensor& t) {
    return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

namespace kernels {

// C += A * B, row major, shapes m x k, k x n. Skips zero multipliers so
// masked operators (adjacency-supported products) cost what they touch.
inline void gemm_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * k;
        double* ci = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C += A * B^T, shapes m x n, k x n -> m x k.
inline void gemm_abT_acc(const double* a, const double* b, double* c, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * n;
        double* ci = c + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            const double* bj = b + static_cast<std::size_t>(j) * n;
            double s = 0.0;
            for (int p = 0; p < n; ++p) s += ai[p] * bj[p];
            ci[j] += s;
        }
    }
}

// C += A^T * B, shapes k x m, k x n -> m x n.
inline void gemm_aTb_acc(const double* a, const double* b, double* c, int k, int m, int n) {
    for (int p = 0; p < k; ++p) {
        const double* ap = a + static_cast<std::size_t>(p) * m;
        const double* bp = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = ap[i];
            if (av == 0.0) continue;
            double* ci = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

}  // namespace kernels

class Tape {
  public:
    Tensor* matmul(Tensor* a, Tensor* b) {
        if (a->cols != b->rows)
            throw ShapeError("matmul: " + shape_string(*a) + " incompatible with " +
                             shape_string(*b));
        Tensor* out = alloc(a->rows, b->cols, a->requires_grad || b->requires_grad);
        kernels::gemm_acc(a->val.data(), b->val.data(), out->val.data(), a->rows, a->cols,
                          b->cols);
        record({OpKind::matmul, out, a, b, 0.0}, "matmul");
        return out;
    }

    Tensor* hadamard(Tensor* a, Tensor* b) {
        if (a->rows != b->rows || a->cols != b->cols)
            throw ShapeError("hadamard: " + shape_string(*a) + " vs " + shape_string(*b));
        Tensor* out = alloc(a->rows, a->cols, a->requires_grad || b->requires_grad);
        for (std::size_t i = 0; i < out->size(); ++i) out->val[i] = a->val[i] * b->val[i];
        record({OpKind::hadamard, out, a, b, 0.0}, "hadamard");
        return out;
    }

    Tensor* transpose(Tensor* a) {
        Tensor* out = alloc(a->cols, a->rows, a->requires_grad);
        for (int i = 0; i < a->rows; ++i)
            for (int j = 0; j < a->cols; ++j) out->v(j, i) = a->v(i, j);
        record({OpKind::transpose, out, a, nullptr, 0.0}, "transpose");
        return out;
    }

    Tensor* tanh_elem(Tensor* a) {
        Tensor* out = alloc(a->rows, a->cols, a->requires_grad);
        for (std::size_t i = 0; i < out->size(); ++i) out->val[i] = std::tanh(a->val[i]);
        record({OpKind::tanh_elem, out, a, nullptr, 0.0}, "tanh_elem");
        return out;
    }

    Tensor* add(Tensor* a, Tensor* b) {
        if (a->rows != b->rows || a->cols != b->cols)
            throw ShapeError("add: " + shape_string(*a) + " vs " + shape_string(*b));
        Tensor* out = alloc(a->rows, a->cols, a->requires_grad || b->requires_grad);
        for (std::size_t i = 0; i < out->size(); ++i) out->val[i] = a->val[i] + b->val[i];
        record({OpKind::add, out, a, b, 0.0}, "add");
        return out;
    }

    Tensor* scale(Tensor* a, double factor) {
        Tensor* out = alloc(a->rows, a->cols, a->requires_grad);
        for (std::size_t i = 0; i < out->size(); ++i) out->val[i] = factor * a->val[i];
        record({OpKind::scale, out, a, nullptr, factor}, "scale");
        return out;
    }

    /// Mean over entries of the squared difference; scalar output.
    Tensor* mse_loss(Tensor* pred, Tensor* target) {
        if (pred->rows != target->rows || pred->cols != target->cols)
            throw ShapeError("mse_loss: " + shape_string(*pred) + " vs " + shape_string(*target));
        Tensor* out = alloc(1, 1, pred->requires_grad || target->requires_grad);
        double s = 0.0;
        for (std::size_t i = 0; i < pred->size(); ++i) {
            const double d = pred->val[i] - target->val[i];
            s += d * d;
        }
        out->val[0] = s / static_cast<double>(pred->size());
        record({OpKind::mse_loss, out, pred, target, 0.0}, "mse_loss");
        return out;
    }

    /// Reverse-topological gradient accumulation from a scalar loss. The
    /// seed weights the whole pass; summing seeded passes over samples
    /// yields batch-mean gradients without extra graph nodes.
    void backward(Tensor* loss, double seed = 1.0) {
        if (loss->rows != 1 || loss->cols != 1)
            throw ShapeError("backward: loss must be scalar, got " + shape_string(*loss));
        if (!loss->requires_grad)
            throw StateError("backward: loss does not require gradients");
        if (consumed_) throw StateError("backward called twice on one forward pass");
        consumed_ = true;
        loss->grad[0] += seed;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) step_back(*it);
    }

    /// Clears the recorded graph and recycles intermediate storage;
    /// re-arms backward.
    void reset() {
        nodes_.clear();
        used_ = 0;
        consumed_ = false;
    }

    std::size_t node_count() const { return nodes_.size(); }

  private:
    enum class OpKind { matmul, hadamard, transpose, tanh_elem, add, scale, mse_loss };
    struct Node {
        OpKind kind;
        Tensor* out;
        Tensor* a;
        Tensor* b;
        double factor;
    };

    // Reused slots start from zero in both value and gradient: the matmul
    // kernel accumulates into its output.
    Tensor* alloc(int r, int c, bool rg) {
        if (used_ == pool_.size()) pool_.emplace_back();
        Tensor* t = &pool_[used_++];
        if (t->rows != r || t->cols != c || t->requires_grad != rg) {
            t->reshape(r, c, rg);
        } else {
            std::fill(t->val.begin(), t->val.end(), 0.0);
            std::fill(t->grad.begin(), t->grad.end(), 0.0);
        }
        return t;
    }

    void record(Node n, const char* name) {
        for (double v : n.out->val)
            if (!std::isfinite(v))
                throw NumericError(std::string(name) + ": non-finite value in output");
        nodes_.push_back(n);
    }

    void step_back(const Node& n) {
        if (!n.out->requires_grad) return;
        switch (n.kind) {
            case OpKind::matmul:
                if (n.a->requires_grad)
                    kernels::gemm_abT_acc(n.out->grad.data(), n.b->val.data(), n.a->grad.data(),
                                          n.out->rows, n.out->cols, n.b->rows);
                if (n.b->requires_grad)
                    kernels::gemm_aTb_acc(n.a->val.data(), n.out->grad.data(), n.b->grad.data(),
                                          n.a->rows, n.a->cols, n.out->cols);
                break;
            case OpKind::hadamard:
                if (n.a->requires_grad)
                    for (std::size_t i = 0; i < n.out->size(); ++i)
                        n.a->grad[i] += n.out->grad[i] * n.b->val[i];
                if (n.b->requires_grad)
                    for (std::size_t i = 0; i < n.out->size(); ++i)
                        n.b->grad[i] += n.out->grad[i] * n.a->val[i];
                break;
            case OpKind::transpose:
                if (n.a->requires_grad)
                    for (int i = 0; i < n.out->rows; ++i)
                        for (int j = 0; j < n.out->cols; ++j) n.a->g(j, i) += n.out->g(i, j);
                break;
            case OpKind::tanh_elem:
                if (n.a->requires_grad)
                    for (std::size_t i = 0; i < n.out->size(); ++i) {
                        const double y = n.out->val[i];
                        n.a->grad[i] += n.out->grad[i] * (1.0 - y * y);
                    }
                break;
            case OpKind::add:
                if (n.a->requires_grad)
                    for (std::size_t i = 0; i < n.out->size(); ++i)
                        n.a->grad[i] += n.out->grad[i];
                if (n.b->requires_grad)
                    for (std::size_t i = 0; i < n.out->size(); ++i)
                        n.b->grad[i] += n.out->grad[i];
                break;
            case OpKind::scale:
                if (n.a->requires_grad)
                    for (std::size_t i = 0; i < n.out->size(); ++i)
                        n.a->grad[i] += n.factor * n.out->grad[i];
                break;
            case OpKind::mse_loss: {
                const double w = 2.0 * n.out->grad[0] / static_cast<double>(n.a->size());
                if (n.a->requires_grad)
                    for (std::size_t i = 0; i < n.a->size(); ++i)
                        n.a->grad[i] += w * (n.a->val[i] - n.b->val[i]);
                if (n.b->requires_grad)
                    for (std::size_t i = 0; i < n.b->size(); ++i)
                        n.b->grad[i] -= w * (n.a->val[i] - n.b->val[i]);
                break;
            }
        }
    }

    // deque keeps addresses stable while the pool grows; slots are reused
    // across reset() so a steady-state iteration allocates nothing.
    std::deque<Tensor> pool_;
    std::size_t used_ = 0;
    std::vector<Node> nodes_;
    bool consumed_ = false;
};

}  // namespace odflow::ad
