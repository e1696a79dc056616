#include "rmpa/compiled.hpp"

#include <cmath>
#include <cstring>
#include <unordered_map>

namespace rmpa {

namespace {

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

[[noreturn]] void domain_fail(const char* what, double v) {
    throw DomainError(std::string(what) + " (value " + std::to_string(v) +
                      ") in compiled expression");
}

}  // namespace

CompiledExpr::CompiledExpr(const Expr& e, std::span<const std::string> inputs) {
    n_inputs_ = inputs.size();
    std::unordered_map<std::string, int32_t> input_index;
    for (size_t i = 0; i < inputs.size(); ++i) {
        if (!input_index.emplace(inputs[i], static_cast<int32_t>(i)).second)
            throw Error("duplicate compiled input: " + inputs[i]);
    }

    // Folded constants stay virtual until an op actually reads them, so
    // collapsed subtrees leave no dead ops behind.
    struct NodeRes {
        bool is_const = false;
        double value = 0.0;
        int32_t slot = -1;
    };
    std::unordered_map<const Expr::Node*, NodeRes> res_of;
    std::unordered_map<double, int32_t> const_slots;

    auto emit = [&](Op op) {
        ops_.push_back(op);
        return static_cast<int32_t>(ops_.size() - 1);
    };
    auto materialize = [&](const NodeRes& r) {
        if (!r.is_const) return r.slot;
        auto it = const_slots.find(r.value);
        if (it != const_slots.end()) return it->second;
        int32_t slot = emit({ExprKind::Constant, -1, -1, r.value});
        const_slots.emplace(r.value, slot);
        return slot;
    };

    // iterative post-order; shared subtrees compile once
    std::vector<std::pair<const Expr*, size_t>> stack;
    stack.push_back({&e, 0});
    while (!stack.empty()) {
        auto& [expr, next_kid] = stack.back();
        const Expr::Node* n = expr->raw();
        if (res_of.count(n)) {
            stack.pop_back();
            continue;
        }
        if (next_kid < n->kids.size()) {
            const Expr* kid = &n->kids[next_kid];
            ++next_kid;
            if (!res_of.count(kid->raw())) stack.push_back({kid, 0});
            continue;
        }

        NodeRes res;
        switch (n->kind) {
            case ExprKind::Constant:
                res = {true, n->value, -1};
                break;
            case ExprKind::SymbolRef: {
                auto it = input_index.find(n->sym.name);
                if (it == input_index.end()) throw UnboundSymbolError(n->sym.name);
                res.slot = emit({ExprKind::SymbolRef, it->second, -1, 0.0});
                break;
            }
            case ExprKind::Sum: {
                double const_part = 0.0;
                std::vector<int32_t> live;
                for (const Expr& k : n->kids) {
                    const NodeRes& kr = res_of.at(k.raw());
                    if (kr.is_const)
                        const_part += kr.value;
                    else
                        live.push_back(kr.slot);
                }
                if (live.empty()) {
                    res = {true, const_part, -1};
                    break;
                }
                if (const_part != 0.0) live.push_back(materialize({true, const_part, -1}));
                int32_t begin = static_cast<int32_t>(sum_kids_.size());
                sum_kids_.insert(sum_kids_.end(), live.begin(), live.end());
                res.slot =
                    emit({ExprKind::Sum, begin, static_cast<int32_t>(sum_kids_.size()), 0.0});
                break;
            }
            default: {
                const NodeRes& ra = res_of.at(n->kids[0].raw());
                const NodeRes* rb = n->kids.size() > 1 ? &res_of.at(n->kids[1].raw()) : nullptr;
                if (ra.is_const && (!rb || rb->is_const)) {
                    double va = ra.value, vb = rb ? rb->value : 0.0;
                    double v = 0.0;
                    switch (n->kind) {
                        case ExprKind::Negate: v = -va; break;
                        case ExprKind::Add: v = va + vb; break;
                        case ExprKind::Sub: v = va - vb; break;
                        case ExprKind::Mul: v = va * vb; break;
                        case ExprKind::Div:
                            if (vb == 0.0) domain_fail("division by zero", vb);
                            v = va / vb;
                            break;
                        case ExprKind::Pow:
                            if (va < 0.0 && !is_integer(vb))
                                domain_fail("fractional power of negative base", va);
                            if (va == 0.0 && vb < 0.0)
                                domain_fail("zero base raised to negative power", va);
                            v = std::pow(va, vb);
                            break;
                        case ExprKind::Log:
                            if (va <= 0.0) domain_fail("log of non-positive value", va);
                            v = std::log(va);
                            break;
                        default: break;
                    }
                    res = {true, v, -1};
                } else {
                    int32_t a = materialize(ra);
                    int32_t b = rb ? materialize(*rb) : -1;
                    res.slot = emit({n->kind, a, b, 0.0});
                }
                break;
            }
        }
        res_of.emplace(n, res);
        stack.pop_back();
    }

    const NodeRes& root = res_of.at(e.raw());
    if (root.is_const) materialize(root);
    // the root's value is ops_.back() by construction: the last emitted op
    // is either the root itself or its materialized constant
}

void CompiledExpr::forward(std::span<const double> x, EvalScratch& scratch) const {
    auto& v = scratch.val;
    v.resize(ops_.size());
    for (size_t i = 0; i < ops_.size(); ++i) {
        const Op& op = ops_[i];
        switch (op.kind) {
            case ExprKind::Constant: v[i] = op.imm; break;
            case ExprKind::SymbolRef: v[i] = x[op.a]; break;
            case ExprKind::Negate: v[i] = -v[op.a]; break;
            case ExprKind::Add: v[i] = v[op.a] + v[op.b]; break;
            case ExprKind::Sub: v[i] = v[op.a] - v[op.b]; break;
            case ExprKind::Mul: v[i] = v[op.a] * v[op.b]; break;
            case ExprKind::Div:
                if (v[op.b] == 0.0) domain_fail("division by zero", v[op.b]);
                v[i] = v[op.a] / v[op.b];
                break;
            case ExprKind::Pow: {
                double base = v[op.a], expo = v[op.b];
                if (base < 0.0 && !is_integer(expo))
                    domain_fail("fractional power of negative base", base);
                if (base == 0.0 && expo < 0.0)
                    domain_fail("zero base raised to negative power", base);
                v[i] = std::pow(base, expo);
                break;
            }
            case ExprKind::Log:
                if (v[op.a] <= 0.0) domain_fail("log of non-positive value", v[op.a]);
                v[i] = std::log(v[op.a]);
                break;
            case ExprKind::Sum: {
                double s = 0.0;
                for (int32_t k = op.a; k < op.b; ++k) s += v[sum_kids_[k]];
                v[i] = s;
                break;
            }
        }
    }
}

double CompiledExpr::eval(std::span<const double> x, EvalScratch& scratch) const {
    if (x.size() != n_inputs_) throw Error("compiled eval: input size mismatch");
    if (ops_.empty()) return 0.0;
    forward(x, scratch);
    return scratch.val.back();
}

double CompiledExpr::eval_grad(std::span<const double> x, double weight, std::span<double> grad,
                               EvalScratch& scratch) const {
    double value = eval(x, scratch);
    reverse_into(weight, grad, scratch);
    return value;
}

void CompiledExpr::reverse_into(double weight, std::span<double> grad,
                                EvalScratch& scratch) const {
    if (grad.size() != n_inputs_) throw Error("compiled reverse: gradient size mismatch");
    if (ops_.empty()) return;

    auto& v = scratch.val;
    auto& adj = scratch.adj;
    adj.assign(ops_.size(), 0.0);
    adj.back() = weight;

    for (size_t ii = ops_.size(); ii-- > 0;) {
        const Op& op = ops_[ii];
        const double a = adj[ii];
        if (a == 0.0) continue;
        switch (op.kind) {
            case ExprKind::Constant: break;
            case ExprKind::SymbolRef: grad[op.a] += a; break;
            case ExprKind::Negate: adj[op.a] -= a; break;
            case ExprKind::Add:
                adj[op.a] += a;
                adj[op.b] += a;
                break;
            case ExprKind::Sub:
                adj[op.a] += a;
                adj[op.b] -= a;
                break;
            case ExprKind::Mul:
                adj[op.a] += a * v[op.b];
                adj[op.b] += a * v[op.a];
                break;
            case ExprKind::Div: {
                double den = v[op.b];
                adj[op.a] += a / den;
                adj[op.b] -= a * v[op.a] / (den * den);
                break;
            }
            case ExprKind::Pow: {
                double base = v[op.a], expo = v[op.b], self = v[ii];
                double dbase;
                if (base == 0.0) {
                    if (expo == 0.0 || expo > 1.0) dbase = 0.0;
                    else if (expo == 1.0) dbase = 1.0;
                    else domain_fail("derivative of power with exponent < 1 at zero base", expo);
                } else {
                    dbase = expo * self / base;
                }
                adj[op.a] += a * dbase;
                if (ops_[op.b].kind != ExprKind::Constant) {
                    if (base <= 0.0) domain_fail("log of non-positive base in power", base);
                    adj[op.b] += a * self * std::log(base);
                }
                break;
            }
            case ExprKind::Log: adj[op.a] += a / v[op.a]; break;
            case ExprKind::Sum:
                for (int32_t k = op.a; k < op.b; ++k) adj[sum_kids_[k]] += a;
                break;
        }
    }
}

}  // namespace rmpa
