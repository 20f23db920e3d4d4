#include "hpcde/ad/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hpcde::ad {

namespace scalar {

double elu(double x) noexcept { return x >= 0.0 ? x : std::expm1(x); }

double elu_grad(double x) noexcept { return x >= 0.0 ? 1.0 : std::exp(x); }

double softplus(double x) noexcept {
    // log(1 + e^x) = x + log(1 + e^-x) once e^x would dominate.
    return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_beta(double x, double beta) noexcept {
    // Floored at the smallest normal double so the output stays strictly positive
    // where beta * e^(x / beta) would underflow.
    return std::max(beta * softplus(x / beta), std::numeric_limits<double>::min());
}

}  // namespace scalar

namespace {

std::string dims(std::size_t r, std::size_t c) {
    return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

}  // namespace

const char* op_name(Op op) noexcept {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::matmul: return "matmul";
        case Op::affine: return "affine";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::scale: return "scale";
        case Op::lincomb: return "lincomb";
        case Op::concat: return "concat";
        case Op::slice: return "slice";
        case Op::reshape: return "reshape";
        case Op::neg: return "neg";
        case Op::square: return "square";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::tanh: return "tanh";
        case Op::elu: return "elu";
        case Op::softplus: return "softplus";
        case Op::softplus_beta: return "softplus_beta";
        case Op::sum: return "sum";
        case Op::dot: return "dot";
        case Op::softmax: return "softmax";
        case Op::log_softmax: return "log_softmax";
        case Op::pick: return "pick";
    }
    return "unknown";
}

// ---- Var -------------------------------------------------------------------

std::size_t Var::size() const { return graph_->node(*this).size(); }
std::size_t Var::rows() const { return graph_->node(*this).rows; }
std::size_t Var::cols() const { return graph_->node(*this).cols; }
std::size_t Var::rank() const { return graph_->node(*this).rank; }
std::span<const double> Var::value() const { return graph_->value(*this); }
double Var::item() const {
    if (size() != 1) {
        throw ShapeError("item() on non-scalar of size " + std::to_string(size()));
    }
    return value()[0];
}
Tensor Var::tensor() const { return graph_->value_tensor(*this); }

Var concat(std::initializer_list<Var> parts) {
    if (parts.size() == 0) {
        throw ShapeError("concat of zero tensors");
    }
    std::vector<Var> v(parts);
    return v.front().graph().concat(v);
}

Var lincomb(std::initializer_list<std::pair<double, Var>> terms) {
    if (terms.size() == 0) {
        throw ShapeError("lincomb of zero terms");
    }
    std::vector<std::pair<double, Var>> v(terms);
    return v.front().second.graph().lincomb(v);
}

// ---- Graph bookkeeping -----------------------------------------------------

Graph::Graph(GraphOptions options) : options_(options) {
    vals_.reserve(options_.reserve_values);
    nodes_.reserve(options_.reserve_values / 8);
}

void Graph::clear() noexcept {
    nodes_.clear();
    vals_.clear();
    grads_.clear();
    extra_ids_.clear();
    extra_coefs_.clear();
}

std::size_t Graph::bytes() const noexcept {
    return (vals_.size() + grads_.size() + extra_coefs_.size()) * sizeof(double) +
           nodes_.size() * sizeof(Node) + extra_ids_.size() * sizeof(std::int32_t);
}

void Graph::check_owner(Var v, const char* what) const {
    if (v.graph_ != this || v.id_ >= nodes_.size()) {
        throw std::invalid_argument(std::string(what) + ": operand belongs to another graph");
    }
}

void Graph::check_finite(const Node& n) const {
    const double* p = vals_.data() + n.off;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!std::isfinite(p[i])) {
            throw NumericalError(std::string("non-finite value produced by ") + op_name(n.op) +
                                 " (node " + std::to_string(nodes_.size() - 1) + ")");
        }
    }
}

Var Graph::push(Node n) {
    nodes_.push_back(n);
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::leaf(const Tensor& t, bool needs_grad) {
    if (t.rank() > 2) {
        throw ShapeError("graph tensors are limited to rank 2, got " + t.shape_string());
    }
    Node n;
    n.op = Op::leaf;
    n.rank = static_cast<std::uint8_t>(t.rank());
    n.rows = static_cast<std::uint32_t>(t.rows());
    n.cols = static_cast<std::uint32_t>(t.cols());
    n.needs_grad = needs_grad;
    n.off = vals_.size();
    vals_.insert(vals_.end(), t.data().begin(), t.data().end());
    Var v = push(n);
    if (options_.checked) {
        check_finite(nodes_.back());
    }
    return v;
}

Var Graph::parameter(const Tensor& t) { return leaf(t, true); }
Var Graph::constant(const Tensor& t) { return leaf(t, false); }
Var Graph::constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }
Var Graph::constant_vector(std::span<const double> v) {
    return leaf(Tensor({v.size()}, std::vector<double>(v.begin(), v.end())), false);
}

std::span<const double> Graph::value(Var v) const {
    check_owner(v, "value");
    const Node& n = nodes_[v.id_];
    return {vals_.data() + n.off, n.size()};
}

std::span<const double> Graph::grad(Var v) const {
    check_owner(v, "grad");
    const Node& n = nodes_[v.id_];
    if (grads_.size() < n.off + n.size()) {
        throw std::logic_error("grad requested before backward()");
    }
    return {grads_.data() + n.off, n.size()};
}

namespace {

std::vector<std::size_t> shape_of(std::uint8_t rank, std::size_t rows, std::size_t cols) {
    if (rank == 0) {
        return {};
    }
    if (rank == 1) {
        return {rows};
    }
    return {rows, cols};
}

}  // namespace

Tensor Graph::value_tensor(Var v) const {
    const Node& n = nodes_[v.id_];
    auto s = value(v);
    return Tensor(shape_of(n.rank, n.rows, n.cols), std::vector<double>(s.begin(), s.end()));
}

Tensor Graph::grad_tensor(Var v) const {
    const Node& n = nodes_[v.id_];
    auto s = grad(v);
    return Tensor(shape_of(n.rank, n.rows, n.cols), std::vector<double>(s.begin(), s.end()));
}

// ---- forward ops -----------------------------------------------------------

#define HPCDE_NEW_NODE(n, op_, rank_, rows_, cols_)          \
    Node n;                                                  \
    n.op = (op_);                                            \
    n.rank = static_cast<std::uint8_t>(rank_);               \
    n.rows = static_cast<std::uint32_t>(rows_);              \
    n.cols = static_cast<std::uint32_t>(cols_);              \
    n.off = vals_.size();                                    \
    vals_.resize(vals_.size() + n.size())

Var Graph::matmul(Var a, Var b) {
    check_owner(a, "matmul");
    check_owner(b, "matmul");
    const Node na = nodes_[a.id_];
    const Node nb = nodes_[b.id_];
    if (na.rank != 2) {
        throw ShapeError("matmul: left operand must be a matrix, got rank " +
                         std::to_string(na.rank));
    }
    const std::size_t m = na.rows;
    const std::size_t k = na.cols;
    const std::size_t kb = nb.rank == 2 ? nb.rows : nb.size();
    const std::size_t ncols = nb.rank == 2 ? nb.cols : 1;
    if (kb != k) {
        throw ShapeError("matmul: inner dimensions differ, " + dims(m, k) + " x " +
                         dims(kb, ncols));
    }
    HPCDE_NEW_NODE(n, Op::matmul, nb.rank == 2 ? 2 : 1, m, ncols);
    n.a = static_cast<std::int32_t>(a.id_);
    n.b = static_cast<std::int32_t>(b.id_);
    n.needs_grad = na.needs_grad || nb.needs_grad;
    const double* A = vals_.data() + na.off;
    const double* B = vals_.data() + nb.off;
    double* C = vals_.data() + n.off;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < ncols; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                s += A[i * k + p] * B[p * ncols + j];
            }
            C[i * ncols + j] = s;
        }
    }
    Var v = push(n);
    if (options_.checked) check_finite(nodes_.back());
    return v;
}

Var Graph::affine(Var w, Var x, Var bias) {
    check_owner(w, "affine");
    check_owner(x, "affine");
    check_owner(bias, "affine");
    const Node nw = nodes_[w.id_];
    const Node nx = nodes_[x.id_];
    const Node nbias = nodes_[bias.id_];
    if (nw.rank != 2 || nx.size() != nw.cols || nbias.size() != nw.rows) {
        throw ShapeError("affine: weight " + dims(nw.rows, nw.cols) + ", input of size " +
                         std::to_string(nx.size()) + ", bias of size " +
                         std::to_string(nbias.size()));
    }
    const std::size_t m = nw.rows;
    const std::size_t k = nw.cols;
    HPCDE_NEW_NODE(n, Op::affine, 1, m, 1);
    n.a = static_cast<std::int32_t>(w.id_);
    n.b = static_cast<std::int32_t>(x.id_);
    n.c = static_cast<std::int32_t>(bias.id_);
    n.needs_grad = nw.needs_grad || nx.needs_grad || nbias.needs_grad;
    const double* W = vals_.data() + nw.off;
    const double* X = vals_.data() + nx.off;
    const double* Bv = vals_.data() + nbias.off;
    double* Y = vals_.data() + n.off;
    for (std::size_t i = 0; i < m; ++i) {
        double s = Bv[i];
        const double* wr = W + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            s += wr[p] * X[p];
        }
        Y[i] = s;
    }
    Var v = push(n);
    if (options_.checked) check_finite(nodes_.back());
    return v;
}

Var Graph::add(Var a, Var b) { return lincomb(std::array{std::pair{1.0, a}, std::pair{1.0, b}}); }

Var Graph::sub(Var a, Var b) { return lincomb(std::array{std::pair{1.0, a}, std::pair{-1.0, b}}); }

Var Graph::mul(Var a, Var b) {
    check_owner(a, "mul");
    check_owner(b, "mul");
    const Node na = nodes_[a.id_];
    const Node nb = nodes_[b.id_];
    if (na.size() != nb.size()) {
        throw ShapeError("mul: sizes differ, " + dims(na.rows, na.cols) + " vs " +
                         dims(nb.rows, nb.cols));
    }
    HPCDE_NEW_NODE(n, Op::mul, na.rank, na.rows, na.cols);
    n.a = static_cast<std::int32_t>(a.id_);
    n.b = static_cast<std::int32_t>(b.id_);
    n.needs_grad = na.needs_grad || nb.needs_grad;
    const double* A = vals_.data() + na.off;
    const double* B = vals_.data() + nb.off;
    double* C = vals_.data() + n.off;
    for (std::size_t i = 0; i < n.size(); ++i) {
        C[i] = A[i] * B[i];
    }
    Var v = push(n);
    if (options_.checked) check_finite(nodes_.back());
    return v;
}

Var Graph::scale(Var a, double k) { return lincomb(std::array{std::pair{k, a}}); }

Var Graph::lincomb(std::span<const std::pair<double, Var>> terms) {
    if (terms.empty()) {
        throw ShapeError("lincomb of zero terms");
    }
    const Node first = nodes_.at(terms.front().second.id_);
    bool needs = false;
    for (const auto& [c, v] : terms) {
        check_owner(v, "lincomb");
        const Node& nv = nodes_[v.id_];
        if (nv.size() != first.size()) {
            throw ShapeError("lincomb: sizes differ, " + dims(first.rows, first.cols) + " vs " +
                             dims(nv.rows, nv.cols));
        }
        needs = needs || nv.needs_grad;
    }
    HPCDE_NEW_NODE(n, Op::lincomb, first.rank, first.rows, first.cols);
    n.needs_grad = needs;
    n.extra_begin = static_cast<std::uint32_t>(extra_ids_.size());
    n.extra_count = static_cast<std::uint32_t>(terms.size());
    double* Y = vals_.data() + n.off;
    const std::size_t len = n.size();
    std::fill(Y, Y + len, 0.0);
    for (const auto& [c, v] : terms) {
        extra_ids_.push_back(static_cast<std::int32_t>(v.id_));
        extra_coefs_.push_back(c);
        const double* X = vals_.data() + nodes_[v.id_].off;
        for (std::size_t i = 0; i < len; ++i) {
            Y[i] += c * X[i];
        }
    }
    Var out = push(n);
    if (options_.checked) check_finite(nodes_.back());
    return out;
}

Var Graph::concat(std::span<const Var> parts) {
    if (parts.empty()) {
        throw ShapeError("concat of zero tensors");
    }
    const Node first = nodes_.at(parts.front().id_);
    std::size_t rows = 0;
    bool needs = false;
    for (const Var& p : parts) {
        check_owner(p, "concat");
        const Node& np = nodes_[p.id_];
        // Scalars and vectors stack as vectors; matrices stack by rows.
        const bool mixed = (np.rank == 2) != (first.rank == 2);
        if (mixed || (first.rank == 2 && np.cols != first.cols)) {
            throw ShapeError("concat: incompatible parts " + dims(first.rows, first.cols) + " and " +
                             dims(np.rows, np.cols));
        }
        rows += first.rank == 2 ? np.rows : np.size();
        needs = needs || np.needs_grad;
    }
    const std::uint8_t rank = first.rank == 2 ? 2 : 1;
    HPCDE_NEW_NODE(n, Op::concat, rank, rows, rank == 2 ? first.cols : 1);
    n.needs_grad = needs;
    n.extra_begin = static_cast<std::uint32_t>(extra_ids_.size());
    n.extra_count = static_cast<std::uint32_t>(parts.size());
    std::size_t pos = n.off;
    for (const Var& p : parts) {
        extra_ids_.push_back(static_cast<std::int32_t>(p.id_));
        extra_coefs_.push_back(0.0);
        const Node& np = nodes_[p.id_];
        std::copy_n(vals_.begin() + static_cast<std::ptrdiff_t>(np.off), np.size(),
                    vals_.begin() + static_cast<std::ptrdiff_t>(pos));
        pos += np.size();
    }
    return push(n);
}

Var Graph::slice(Var a, std::size_t begin, std::size_t count) {
    check_owner(a, "slice");
    const Node na = nodes_[a.id_];
    const std::size_t extent = na.rank == 2 ? na.rows : na.size();
    if (begin + count > extent || count == 0) {
        throw ShapeError("slice [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for extent " +
                         std::to_string(extent));
    }
    const std::size_t stride = na.rank == 2 ? na.cols : 1;
    HPCDE_NEW_NODE(n, Op::slice, na.rank == 2 ? 2 : 1, count, na.rank == 2 ? na.cols : 1);
    n.a = static_cast<std::int32_t>(a.id_);
    n.aux = begin * stride;
    n.needs_grad = na.needs_grad;
    std::copy_n(vals_.begin() + static_cast<std::ptrdiff_t>(na.off + n.aux), n.size(),
                vals_.begin() + static_cast<std::ptrdiff_t>(n.off));
    return push(n);
}

Var Graph::row(Var a, std::size_t r) {
    check_owner(a, "row");
    const Node na = nodes_[a.id_];
    if (na.rank != 2) {
        throw ShapeError("row: operand must be a matrix");
    }
    if (r >= na.rows) {
        throw ShapeError("row " + std::to_string(r) + " out of range for " +
                         dims(na.rows, na.cols));
    }
    HPCDE_NEW_NODE(n, Op::slice, 1, na.cols, 1);
    n.a = static_cast<std::int32_t>(a.id_);
    n.aux = r * na.cols;
    n.needs_grad = na.needs_grad;
    std::copy_n(vals_.begin() + static_cast<std::ptrdiff_t>(na.off + n.aux), n.size(),
                vals_.begin() + static_cast<std::ptrdiff_t>(n.off));
    return push(n);
}

Var Graph::reshape(Var a, std::vector<std::size_t> shape) {
    check_owner(a, "reshape");
    const Node na = nodes_[a.id_];
    if (shape.size() > 2 || shape_product(shape) != na.size()) {
        throw ShapeError("reshape: cannot view " + std::to_string(na.size()) +
                         " elements as " + shape_to_string(shape));
    }
    const std::size_t r = shape.empty() ? 1 : shape[0];
    const std::size_t c = shape.size() < 2 ? 1 : shape[1];
    HPCDE_NEW_NODE(n, Op::reshape, shape.size(), r, c);
    n.a = static_cast<std::int32_t>(a.id_);
    n.needs_grad = na.needs_grad;
    std::copy_n(vals_.begin() + static_cast<std::ptrdiff_t>(na.off), n.size(),
                vals_.begin() + static_cast<std::ptrdiff_t>(n.off));
    return push(n);
}

Var Graph::unary(Op op, Var a) {
    check_owner(a, "unary");
    switch (op) {
        case Op::neg:
        case Op::square:
        case Op::exp:
        case Op::log:
        case Op::tanh:
        case Op::elu:
        case Op::softplus:
            break;
        default:
            throw std::invalid_argument(std::string("unary: not an elementwise op: ") +
                                        op_name(op));
    }
    const Node na = nodes_[a.id_];
    HPCDE_NEW_NODE(n, op, na.rank, na.rows, na.cols);
    n.a = static_cast<std::int32_t>(a.id_);
    n.needs_grad = na.needs_grad;
    const double* X = vals_.data() + na.off;
    double* Y = vals_.data() + n.off;
    const std::size_t len = n.size();
    switch (op) {
        case Op::neg:
            for (std::size_t i = 0; i < len; ++i) Y[i] = -X[i];
            break;
        case Op::square:
            for (std::size_t i = 0; i < len; ++i) Y[i] = X[i] * X[i];
            break;
        case Op::exp:
            for (std::size_t i = 0; i < len; ++i) Y[i] = std::exp(X[i]);
            break;
        case Op::log:
            for (std::size_t i = 0; i < len; ++i) Y[i] = std::log(X[i]);
            break;
        case Op::tanh:
            for (std::size_t i = 0; i < len; ++i) Y[i] = std::tanh(X[i]);
            break;
        case Op::elu:
            for (std::size_t i = 0; i < len; ++i) Y[i] = scalar::elu(X[i]);
            break;
        case Op::softplus:
            for (std::size_t i = 0; i < len; ++i) Y[i] = scalar::softplus(X[i]);
            break;
        default:
            break;
    }
    Var v = push(n);
    if (options_.checked) check_finite(nodes_.back());
    return v;
}

Var Graph::softplus_beta(Var x, Var log_beta) {
    check_owner(x, "softplus_beta");
    check_owner(log_beta, "softplus_beta");
    const Node nx = nodes_[x.id_];
    const Node nb = nodes_[log_beta.id_];
    if (nb.size() != 1 && nb.size() != nx.size()) {
        throw ShapeError("softplus_beta: beta must be scalar or match input size " +
                         std::to_string(nx.size()) + ", got " + std::to_string(nb.size()));
    }
    HPCDE_NEW_NODE(n, Op::softplus_beta, nx.rank, nx.rows, nx.cols);
    n.a = static_cast<std::int32_t>(x.id_);
    n.b = static_cast<std::int32_t>(log_beta.id_);
    n.needs_grad = nx.needs_grad || nb.needs_grad;
    const double* X = vals_.data() + nx.off;
    const double* LB = vals_.data() + nb.off;
    double* Y = vals_.data() + n.off;
    const bool broadcast = nb.size() == 1;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double beta = std::exp(LB[broadcast ? 0 : i]);
        Y[i] = scalar::softplus_beta(X[i], beta);
    }
    Var v = push(n);
    if (options_.checked) check_finite(nodes_.back());
    return v;
}

Var Graph::sum(Var a) {
    check_owner(a, "sum");
    const Node na = nodes_[a.id_];
    HPCDE_NEW_NODE(n, Op::sum, 0, 1, 1);
    n.a = static_cast<std::int32_t>(a.id_);
    n.needs_grad = na.needs_grad;
    const double* X = vals_.data() + na.off;
    vals_[n.off] = std::accumulate(X, X + na.size(), 0.0);
    return push(n);
}

Var Graph::dot(Var a, Var b) {
    check_owner(a, "dot");
    check_owner(b, "dot");
    const Node na = nodes_[a.id_];
    const Node nb = nodes_[b.id_];
    if (na.size() != nb.size()) {
        throw ShapeError("dot: sizes differ, " + std::to_string(na.size()) + " vs " +
                         std::to_string(nb.size()));
    }
    HPCDE_NEW_NODE(n, Op::dot, 0, 1, 1);
    n.a = static_cast<std::int32_t>(a.id_);
    n.b = static_cast<std::int32_t>(b.id_);
    n.needs_grad = na.needs_grad || nb.needs_grad;
    const double* A = vals_.data() + na.off;
    const double* B = vals_.data() + nb.off;
    double s = 0.0;
    for (std::size_t i = 0; i < na.size(); ++i) {
        s += A[i] * B[i];
    }
    vals_[n.off] = s;
    Var v = push(n);
    if (options_.checked) check_finite(nodes_.back());
    return v;
}

Var Graph::softmax(Var a) {
    check_owner(a, "softmax");
    const Node na = nodes_[a.id_];
    if (na.rank > 1) {
        throw ShapeError("softmax expects a vector");
    }
    HPCDE_NEW_NODE(n, Op::softmax, na.rank, na.rows, na.cols);
    n.a = static_cast<std::int32_t>(a.id_);
    n.needs_grad = na.needs_grad;
    const double* X = vals_.data() + na.off;
    double* Y = vals_.data() + n.off;
    const double mx = *std::max_element(X, X + na.size());
    double z = 0.0;
    for (std::size_t i = 0; i < na.size(); ++i) {
        Y[i] = std::exp(X[i] - mx);
        z += Y[i];
    }
    for (std::size_t i = 0; i < na.size(); ++i) {
        Y[i] /= z;
    }
    return push(n);
}

Var Graph::log_softmax(Var a) {
    check_owner(a, "log_softmax");
    const Node na = nodes_[a.id_];
    if (na.rank > 1) {
        throw ShapeError("log_softmax expects a vector");
    }
    HPCDE_NEW_NODE(n, Op::log_softmax, na.rank, na.rows, na.cols);
    n.a = static_cast<std::int32_t>(a.id_);
    n.needs_grad = na.needs_grad;
    const double* X = vals_.data() + na.off;
    double* Y = vals_.data() + n.off;
    const double mx = *std::max_element(X, X + na.size());
    double z = 0.0;
    for (std::size_t i = 0; i < na.size(); ++i) {
        z += std::exp(X[i] - mx);
    }
    const double lse = mx + std::log(z);
    for (std::size_t i = 0; i < na.size(); ++i) {
        Y[i] = X[i] - lse;
    }
    return push(n);
}

Var Graph::pick(Var a, std::size_t index) {
    check_owner(a, "pick");
    const Node na = nodes_[a.id_];
    if (index >= na.size()) {
        throw ShapeError("pick index " + std::to_string(index) + " out of range for size " +
                         std::to_string(na.size()));
    }
    HPCDE_NEW_NODE(n, Op::pick, 0, 1, 1);
    n.a = static_cast<std::int32_t>(a.id_);
    n.aux = index;
    n.needs_grad = na.needs_grad;
    vals_[n.off] = vals_[na.off + index];
    return push(n);
}

#undef HPCDE_NEW_NODE

// ---- backward --------------------------------------------------------------

void Graph::backward(Var root) {
    check_owner(root, "backward");
    const Node& nr = nodes_[root.id_];
    if (nr.size() != 1) {
        throw ShapeError("backward: root must be a scalar, got size " +
                         std::to_string(nr.size()));
    }
    grads_.assign(vals_.size(), 0.0);
    grads_[nr.off] = 1.0;
    for (std::size_t id = root.id_ + 1; id-- > 0;) {
        const Node& n = nodes_[id];
        if (!n.needs_grad || n.op == Op::leaf) {
            continue;
        }
        backward_node(n, id);
    }
}

void Graph::backward_node(const Node& n, std::size_t /*id*/) {
    const double* G = grads_.data() + n.off;
    const double* Y = vals_.data() + n.off;
    const std::size_t len = n.size();

    auto pa = [&]() -> const Node& { return nodes_[static_cast<std::size_t>(n.a)]; };
    auto pb = [&]() -> const Node& { return nodes_[static_cast<std::size_t>(n.b)]; };

    switch (n.op) {
        case Op::leaf:
            return;
        case Op::matmul: {
            const Node& na = pa();
            const Node& nb = pb();
            const std::size_t m = na.rows;
            const std::size_t k = na.cols;
            const std::size_t nc = n.cols;
            const double* A = vals_.data() + na.off;
            const double* B = vals_.data() + nb.off;
            if (na.needs_grad) {
                double* dA = grads_.data() + na.off;
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < nc; ++j) s += G[i * nc + j] * B[p * nc + j];
                        dA[i * k + p] += s;
                    }
                }
            }
            if (nb.needs_grad) {
                double* dB = grads_.data() + nb.off;
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        const double aip = A[i * k + p];
                        for (std::size_t j = 0; j < nc; ++j) dB[p * nc + j] += aip * G[i * nc + j];
                    }
                }
            }
            return;
        }
        case Op::affine: {
            const Node& nw = pa();
            const Node& nx = pb();
            const Node& nbias = nodes_[static_cast<std::size_t>(n.c)];
            const std::size_t m = nw.rows;
            const std::size_t k = nw.cols;
            const double* W = vals_.data() + nw.off;
            const double* X = vals_.data() + nx.off;
            if (nw.needs_grad) {
                double* dW = grads_.data() + nw.off;
                for (std::size_t i = 0; i < m; ++i) {
                    const double gi = G[i];
                    double* row = dW + i * k;
                    for (std::size_t p = 0; p < k; ++p) row[p] += gi * X[p];
                }
            }
            if (nx.needs_grad) {
                double* dX = grads_.data() + nx.off;
                for (std::size_t i = 0; i < m; ++i) {
                    const double gi = G[i];
                    const double* row = W + i * k;
                    for (std::size_t p = 0; p < k; ++p) dX[p] += gi * row[p];
                }
            }
            if (nbias.needs_grad) {
                double* dB = grads_.data() + nbias.off;
                for (std::size_t i = 0; i < m; ++i) dB[i] += G[i];
            }
            return;
        }
        case Op::mul: {
            const Node& na = pa();
            const Node& nb = pb();
            const double* A = vals_.data() + na.off;
            const double* B = vals_.data() + nb.off;
            if (na.needs_grad) {
                double* dA = grads_.data() + na.off;
                for (std::size_t i = 0; i < len; ++i) dA[i] += G[i] * B[i];
            }
            if (nb.needs_grad) {
                double* dB = grads_.data() + nb.off;
                for (std::size_t i = 0; i < len; ++i) dB[i] += G[i] * A[i];
            }
            return;
        }
        case Op::lincomb: {
            for (std::uint32_t e = 0; e < n.extra_count; ++e) {
                const Node& np = nodes_[static_cast<std::size_t>(extra_ids_[n.extra_begin + e])];
                if (!np.needs_grad) continue;
                const double c = extra_coefs_[n.extra_begin + e];
                double* dP = grads_.data() + np.off;
                for (std::size_t i = 0; i < len; ++i) dP[i] += c * G[i];
            }
            return;
        }
        case Op::concat: {
            std::size_t pos = 0;
            for (std::uint32_t e = 0; e < n.extra_count; ++e) {
                const Node& np = nodes_[static_cast<std::size_t>(extra_ids_[n.extra_begin + e])];
                if (np.needs_grad) {
                    double* dP = grads_.data() + np.off;
                    for (std::size_t i = 0; i < np.size(); ++i) dP[i] += G[pos + i];
                }
                pos += np.size();
            }
            return;
        }
        case Op::slice: {
            double* dA = grads_.data() + pa().off + n.aux;
            for (std::size_t i = 0; i < len; ++i) dA[i] += G[i];
            return;
        }
        case Op::reshape: {
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += G[i];
            return;
        }
        case Op::neg: {
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] -= G[i];
            return;
        }
        case Op::square: {
            const double* X = vals_.data() + pa().off;
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += 2.0 * X[i] * G[i];
            return;
        }
        case Op::exp: {
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += Y[i] * G[i];
            return;
        }
        case Op::log: {
            const double* X = vals_.data() + pa().off;
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += G[i] / X[i];
            return;
        }
        case Op::tanh: {
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += (1.0 - Y[i] * Y[i]) * G[i];
            return;
        }
        case Op::elu: {
            const double* X = vals_.data() + pa().off;
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += (X[i] >= 0.0 ? 1.0 : Y[i] + 1.0) * G[i];
            return;
        }
        case Op::softplus: {
            const double* X = vals_.data() + pa().off;
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += scalar::sigmoid(X[i]) * G[i];
            return;
        }
        case Op::softplus_beta: {
            const Node& nx = pa();
            const Node& nb = pb();
            const double* X = vals_.data() + nx.off;
            const double* LB = vals_.data() + nb.off;
            const bool broadcast = nb.size() == 1;
            for (std::size_t i = 0; i < len; ++i) {
                const std::size_t bi = broadcast ? 0 : i;
                const double beta = std::exp(LB[bi]);
                const double r = X[i] / beta;
                const double sig = scalar::sigmoid(r);
                if (nx.needs_grad) {
                    grads_[nx.off + i] += sig * G[i];
                }
                if (nb.needs_grad) {
                    // d/d(log beta) of beta * sp(x / beta) = beta * (sp(r) - r * sigmoid(r))
                    grads_[nb.off + bi] += beta * (scalar::softplus(r) - r * sig) * G[i];
                }
            }
            return;
        }
        case Op::sum: {
            const Node& na = pa();
            double* dA = grads_.data() + na.off;
            for (std::size_t i = 0; i < na.size(); ++i) dA[i] += G[0];
            return;
        }
        case Op::dot: {
            const Node& na = pa();
            const Node& nb = pb();
            const double* A = vals_.data() + na.off;
            const double* B = vals_.data() + nb.off;
            if (na.needs_grad) {
                double* dA = grads_.data() + na.off;
                for (std::size_t i = 0; i < na.size(); ++i) dA[i] += G[0] * B[i];
            }
            if (nb.needs_grad) {
                double* dB = grads_.data() + nb.off;
                for (std::size_t i = 0; i < nb.size(); ++i) dB[i] += G[0] * A[i];
            }
            return;
        }
        case Op::softmax: {
            double gy = 0.0;
            for (std::size_t i = 0; i < len; ++i) gy += G[i] * Y[i];
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += Y[i] * (G[i] - gy);
            return;
        }
        case Op::log_softmax: {
            double gs = 0.0;
            for (std::size_t i = 0; i < len; ++i) gs += G[i];
            double* dA = grads_.data() + pa().off;
            for (std::size_t i = 0; i < len; ++i) dA[i] += G[i] - std::exp(Y[i]) * gs;
            return;
        }
        case Op::pick: {
            grads_[pa().off + n.aux] += G[0];
            return;
        }
        case Op::add:
        case Op::sub:
        case Op::scale:
            // Lowered to lincomb at record time.
            return;
    }
}

}  // namespace hpcde::ad
