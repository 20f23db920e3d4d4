#pragma once

#include "hpcde/ad/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace hpcde::ad {

class Graph;

/// Handle to a node on a Graph. Cheap to copy; only valid while its graph lives.
class Var {
public:
    Var() = default;

    [[nodiscard]] bool valid() const noexcept { return graph_ != nullptr; }
    [[nodiscard]] Graph& graph() const noexcept { return *graph_; }
    [[nodiscard]] std::uint32_t id() const noexcept { return id_; }

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t rows() const;
    [[nodiscard]] std::size_t cols() const;
    [[nodiscard]] std::size_t rank() const;
    [[nodiscard]] std::span<const double> value() const;
    [[nodiscard]] double item() const;
    [[nodiscard]] Tensor tensor() const;

private:
    friend class Graph;
    Var(Graph* g, std::uint32_t id) : graph_(g), id_(id) {}

    Graph* graph_ = nullptr;
    std::uint32_t id_ = 0;
};

enum class Op : std::uint8_t {
    leaf,
    matmul,
    affine,
    add,
    sub,
    mul,
    scale,
    lincomb,
    concat,
    slice,
    reshape,
    neg,
    square,
    exp,
    log,
    tanh,
    elu,
    softplus,
    softplus_beta,
    sum,
    dot,
    softmax,
    log_softmax,
    pick,
};

[[nodiscard]] const char* op_name(Op op) noexcept;

struct GraphOptions {
    /// Throw NumericalError as soon as any op produces NaN or Inf.
    bool checked = false;
    std::size_t reserve_values = 1 << 14;
};

/// Define-by-run tape. Every op computes its forward value eagerly and appends
/// one node; backward() walks the tape once in reverse order.
class Graph {
public:
    explicit Graph(GraphOptions options = {});

    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var parameter(const Tensor& t);
    Var constant(const Tensor& t);
    Var constant_scalar(double v);
    Var constant_vector(std::span<const double> v);

    Var matmul(Var a, Var b);
    Var affine(Var weight, Var x, Var bias);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double k);
    Var lincomb(std::span<const std::pair<double, Var>> terms);
    Var concat(std::span<const Var> parts);
    Var slice(Var a, std::size_t begin, std::size_t count);
    Var row(Var a, std::size_t r);
    Var reshape(Var a, std::vector<std::size_t> shape);
    Var unary(Op op, Var a);
    Var softplus_beta(Var x, Var log_beta);
    Var sum(Var a);
    Var dot(Var a, Var b);
    Var softmax(Var a);
    Var log_softmax(Var a);
    Var pick(Var a, std::size_t index);

    /// Reverse sweep from a scalar root. Gradients from a previous sweep are discarded.
    void backward(Var root);

    [[nodiscard]] std::span<const double> value(Var v) const;
    [[nodiscard]] std::span<const double> grad(Var v) const;
    [[nodiscard]] Tensor value_tensor(Var v) const;
    [[nodiscard]] Tensor grad_tensor(Var v) const;
    [[nodiscard]] bool requires_grad(Var v) const { return nodes_[v.id_].needs_grad; }

    /// Drop every node but keep the allocated storage for the next tape.
    void clear() noexcept;

    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    /// Bytes used by the current tape (not reserved capacity, which depends on earlier
    /// tapes); used for peak-memory reporting.
    [[nodiscard]] std::size_t bytes() const noexcept;

private:
    friend class Var;

    struct Node {
        std::size_t off = 0;
        std::uint32_t rows = 1;
        std::uint32_t cols = 1;
        std::uint8_t rank = 0;
        Op op = Op::leaf;
        bool needs_grad = false;
        std::int32_t a = -1;
        std::int32_t b = -1;
        std::int32_t c = -1;
        std::uint32_t extra_begin = 0;
        std::uint32_t extra_count = 0;
        std::size_t aux = 0;
        double k = 0.0;

        [[nodiscard]] std::size_t size() const noexcept {
            return static_cast<std::size_t>(rows) * cols;
        }
    };

    Var push(Node node);
    Var leaf(const Tensor& t, bool needs_grad);
    void check_owner(Var v, const char* what) const;
    void check_finite(const Node& n) const;
    void backward_node(const Node& n, std::size_t id);
    const Node& node(Var v) const { return nodes_[v.id_]; }

    GraphOptions options_;
    std::vector<Node> nodes_;
    std::vector<double> vals_;
    std::vector<double> grads_;
    std::vector<std::int32_t> extra_ids_;
    std::vector<double> extra_coefs_;
};

// Free-function spellings; the graph is taken from the operands.
inline Var matmul(Var a, Var b) { return a.graph().matmul(a, b); }
inline Var affine(Var w, Var x, Var b) { return w.graph().affine(w, x, b); }
inline Var operator+(Var a, Var b) { return a.graph().add(a, b); }
inline Var operator-(Var a, Var b) { return a.graph().sub(a, b); }
inline Var operator*(Var a, Var b) { return a.graph().mul(a, b); }
inline Var operator*(double k, Var a) { return a.graph().scale(a, k); }
inline Var operator-(Var a) { return a.graph().unary(Op::neg, a); }
inline Var square(Var a) { return a.graph().unary(Op::square, a); }
inline Var exp(Var a) { return a.graph().unary(Op::exp, a); }
inline Var log(Var a) { return a.graph().unary(Op::log, a); }
inline Var tanh(Var a) { return a.graph().unary(Op::tanh, a); }
inline Var elu(Var a) { return a.graph().unary(Op::elu, a); }
inline Var softplus(Var a) { return a.graph().unary(Op::softplus, a); }
inline Var softplus_beta(Var x, Var log_beta) { return x.graph().softplus_beta(x, log_beta); }
inline Var sum(Var a) { return a.graph().sum(a); }
inline Var dot(Var a, Var b) { return a.graph().dot(a, b); }
inline Var softmax(Var a) { return a.graph().softmax(a); }
inline Var log_softmax(Var a) { return a.graph().log_softmax(a); }
inline Var pick(Var a, std::size_t i) { return a.graph().pick(a, i); }
inline Var slice(Var a, std::size_t begin, std::size_t count) {
    return a.graph().slice(a, begin, count);
}
inline Var row(Var a, std::size_t r) { return a.graph().row(a, r); }
inline Var reshape(Var a, std::vector<std::size_t> shape) {
    return a.graph().reshape(a, std::move(shape));
}
Var concat(std::initializer_list<Var> parts);
Var lincomb(std::initializer_list<std::pair<double, Var>> terms);

/// Scalar reference implementations of the activations, shared by the graph
/// kernels and by callers that evaluate without a tape.
namespace scalar {
[[nodiscard]] double elu(double x) noexcept;
[[nodiscard]] double elu_grad(double x) noexcept;
[[nodiscard]] double softplus(double x) noexcept;
[[nodiscard]] double sigmoid(double x) noexcept;
[[nodiscard]] double softplus_beta(double x, double beta) noexcept;
}  // namespace scalar

}  // namespace hpcde::ad
