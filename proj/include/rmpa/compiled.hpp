#ifndef RMPA_COMPILED_HPP
#define RMPA_COMPILED_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmpa/expr.hpp"

namespace rmpa {

//! Reusable evaluation buffers. One per worker thread.
struct EvalScratch {
    std::vector<double> val;
    std::vector<double> adj;
};

//! Expression flattened to a straight-line tape over a fixed input vector.
//! Semantics match the tree interpreter exactly (including domain errors);
//! constant subtrees are folded at compile time. Instances are immutable
//! and safe for concurrent use with per-thread scratch.
class CompiledExpr {
public:
    CompiledExpr() = default;

    //! Every free symbol of `e` must appear in `inputs`.
    CompiledExpr(const Expr& e, std::span<const std::string> inputs);

    size_t num_inputs() const { return n_inputs_; }
    size_t tape_size() const { return ops_.size(); }

    double eval(std::span<const double> x, EvalScratch& scratch) const;

    //! Reverse pass reusing the tape state of the immediately preceding
    //! eval() on this same tape and scratch; accumulates weight * d/dx
    //! into `grad` (size num_inputs, caller-initialized). Lets callers pick
    //! the weight after seeing the value without a second forward pass.
    void reverse_into(double weight, std::span<double> grad, EvalScratch& scratch) const;

    //! Forward + reverse pass: returns the value and accumulates
    //! weight * d/dx into `grad` (size num_inputs, caller-initialized).
    double eval_grad(std::span<const double> x, double weight, std::span<double> grad,
                     EvalScratch& scratch) const;

private:
    struct Op {
        ExprKind kind;
        int32_t a = -1;  // child slot / input index / sum range begin
        int32_t b = -1;  // child slot / sum range end (exclusive)
        double imm = 0.0;
    };

    void forward(std::span<const double> x, EvalScratch& scratch) const;

    std::vector<Op> ops_;
    std::vector<int32_t> sum_kids_;
    size_t n_inputs_ = 0;
};

}  // namespace rmpa

#endif
