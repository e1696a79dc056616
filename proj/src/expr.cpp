#include "rmpa/expr.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

namespace rmpa {

std::string family_of(const std::string& symbol_name) {
    auto pos = symbol_name.find('[');
    return pos == std::string::npos ? symbol_name : symbol_name.substr(0, pos);
}

std::string indexed_name(const std::string& family, int index) {
    return family + "[" + std::to_string(index) + "]";
}

Expr Expr::make(Node n) {
    return Expr(std::make_shared<const Node>(std::move(n)));
}

Expr Expr::constant(double v) {
    if (!std::isfinite(v)) throw Error("expression constant must be finite");
    Node n;
    n.kind = ExprKind::Constant;
    n.value = v;
    return make(std::move(n));
}

Expr Expr::symbol(const Symbol& s) {
    Node n;
    n.kind = ExprKind::SymbolRef;
    n.sym = s;
    return make(std::move(n));
}

Expr Expr::symbol(const std::string& name, SymbolKind kind, int family_index) {
    return symbol(Symbol(name, kind, family_index));
}

Expr Expr::sum(std::vector<Expr> terms) {
    if (terms.empty()) return constant(0.0);
    Node n;
    n.kind = ExprKind::Sum;
    n.kids = std::move(terms);
    return make(std::move(n));
}

namespace {
Expr::Node node_of(ExprKind kind, std::vector<Expr> kids) {
    Expr::Node n;
    n.kind = kind;
    n.kids = std::move(kids);
    return n;
}
}  // namespace

Expr operator-(const Expr& a) { return Expr::make(node_of(ExprKind::Negate, {a})); }
Expr operator+(const Expr& a, const Expr& b) { return Expr::make(node_of(ExprKind::Add, {a, b})); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::make(node_of(ExprKind::Sub, {a, b})); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::make(node_of(ExprKind::Mul, {a, b})); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::make(node_of(ExprKind::Div, {a, b})); }
Expr pow(const Expr& base, const Expr& exponent) {
    return Expr::make(node_of(ExprKind::Pow, {base, exponent}));
}
Expr log(const Expr& arg) { return Expr::make(node_of(ExprKind::Log, {arg})); }

namespace {

std::string short_dump(const Expr& e) {
    std::string s = to_prefix_string(e);
    if (s.size() > 96) s = s.substr(0, 93) + "...";
    return s;
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

// Shared domain checks for the interpreter and the compiled tape.
double checked_pow(double base, double expo, const Expr& node) {
    if (base < 0.0 && !is_integer(expo))
        throw DomainError("fractional power of negative base " + std::to_string(base) +
                          " in " + short_dump(node));
    if (base == 0.0 && expo < 0.0)
        throw DomainError("zero base raised to negative power in " + short_dump(node));
    return std::pow(base, expo);
}

double checked_log(double arg, const Expr& node) {
    if (arg <= 0.0)
        throw DomainError("log of non-positive value " + std::to_string(arg) + " in " +
                          short_dump(node));
    return std::log(arg);
}

double checked_div(double num, double den, const Expr& node) {
    if (den == 0.0) throw DomainError("division by zero in " + short_dump(node));
    return num / den;
}

using ValueCache = std::unordered_map<const Expr::Node*, double>;

double eval_rec(const Expr& e, const Binding& b, ValueCache& cache) {
    const Expr::Node* n = e.raw();
    auto hit = cache.find(n);
    if (hit != cache.end()) return hit->second;
    double v = 0.0;
    switch (n->kind) {
        case ExprKind::Constant: v = n->value; break;
        case ExprKind::SymbolRef: {
            auto it = b.find(n->sym.name);
            if (it == b.end()) throw UnboundSymbolError(n->sym.name);
            v = it->second;
            break;
        }
        case ExprKind::Negate: v = -eval_rec(n->kids[0], b, cache); break;
        case ExprKind::Add: v = eval_rec(n->kids[0], b, cache) + eval_rec(n->kids[1], b, cache); break;
        case ExprKind::Sub: v = eval_rec(n->kids[0], b, cache) - eval_rec(n->kids[1], b, cache); break;
        case ExprKind::Mul: v = eval_rec(n->kids[0], b, cache) * eval_rec(n->kids[1], b, cache); break;
        case ExprKind::Div:
            v = checked_div(eval_rec(n->kids[0], b, cache), eval_rec(n->kids[1], b, cache), e);
            break;
        case ExprKind::Pow:
            v = checked_pow(eval_rec(n->kids[0], b, cache), eval_rec(n->kids[1], b, cache), e);
            break;
        case ExprKind::Log: v = checked_log(eval_rec(n->kids[0], b, cache), e); break;
        case ExprKind::Sum: {
            double s = 0.0;
            for (const Expr& k : n->kids) s += eval_rec(k, b, cache);
            v = s;
            break;
        }
    }
    cache.emplace(n, v);
    return v;
}

// Post-order over the DAG, each node once.
void topo_order(const Expr& root, std::vector<const Expr::Node*>& order,
                std::unordered_map<const Expr::Node*, const Expr*>& lookup) {
    std::unordered_set<const Expr::Node*> seen;
    std::vector<std::pair<const Expr*, size_t>> stack;
    stack.push_back({&root, 0});
    while (!stack.empty()) {
        auto& [expr, next_kid] = stack.back();
        const Expr::Node* n = expr->raw();
        if (seen.count(n)) {
            stack.pop_back();
            continue;
        }
        if (next_kid < n->kids.size()) {
            const Expr* kid = &n->kids[next_kid];
            ++next_kid;
            if (!seen.count(kid->raw())) stack.push_back({kid, 0});
        } else {
            seen.insert(n);
            order.push_back(n);
            lookup.emplace(n, expr);
            stack.pop_back();
        }
    }
}

}  // namespace

double evaluate(const Expr& e, const Binding& binding) {
    ValueCache cache;
    return eval_rec(e, binding, cache);
}

std::vector<double> gradient(const Expr& e, std::span<const std::string> symbols,
                             const Binding& binding) {
    std::vector<const Expr::Node*> order;
    std::unordered_map<const Expr::Node*, const Expr*> lookup;
    topo_order(e, order, lookup);

    ValueCache values;
    std::unordered_map<const Expr::Node*, double> adjoint;
    adjoint.reserve(order.size());
    for (const Expr::Node* n : order) eval_rec(*lookup.at(n), binding, values);

    adjoint[e.raw()] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Expr::Node* n = *it;
        auto a_it = adjoint.find(n);
        if (a_it == adjoint.end()) continue;
        const double a = a_it->second;
        auto val = [&](const Expr& kid) { return values.at(kid.raw()); };
        auto push = [&](const Expr& kid, double w) { adjoint[kid.raw()] += w; };
        switch (n->kind) {
            case ExprKind::Constant:
            case ExprKind::SymbolRef: break;
            case ExprKind::Negate: push(n->kids[0], -a); break;
            case ExprKind::Add:
                push(n->kids[0], a);
                push(n->kids[1], a);
                break;
            case ExprKind::Sub:
                push(n->kids[0], a);
                push(n->kids[1], -a);
                break;
            case ExprKind::Mul:
                push(n->kids[0], a * val(n->kids[1]));
                push(n->kids[1], a * val(n->kids[0]));
                break;
            case ExprKind::Div: {
                double den = val(n->kids[1]);
                push(n->kids[0], a / den);
                push(n->kids[1], -a * val(n->kids[0]) / (den * den));
                break;
            }
            case ExprKind::Pow: {
                double base = val(n->kids[0]);
                double expo = val(n->kids[1]);
                double self = values.at(n);
                // d/d(base): expo * base^(expo-1), valid for integer expo at
                // any base and for positive base otherwise.
                double dbase;
                if (base == 0.0) {
                    if (expo == 0.0 || expo > 1.0) dbase = 0.0;
                    else if (expo == 1.0) dbase = 1.0;
                    else
                        throw DomainError("derivative of power with exponent < 1 at zero base in " +
                                          short_dump(*lookup.at(n)));
                } else {
                    dbase = expo * self / base;
                }
                push(n->kids[0], a * dbase);
                if (n->kids[1].kind() != ExprKind::Constant) {
                    // exponent is a live expression; base must be positive
                    push(n->kids[1], a * self * checked_log(base, *lookup.at(n)));
                }
                break;
            }
            case ExprKind::Log: push(n->kids[0], a / val(n->kids[0])); break;
            case ExprKind::Sum:
                for (const Expr& k : n->kids) push(k, a);
                break;
        }
    }

    // Accumulate per-name contributions (a name may appear in many nodes).
    std::map<std::string, double> by_name;
    for (const Expr::Node* n : order)
        if (n->kind == ExprKind::SymbolRef) {
            auto a_it = adjoint.find(n);
            if (a_it != adjoint.end()) by_name[n->sym.name] += a_it->second;
        }

    std::vector<double> out;
    out.reserve(symbols.size());
    for (const std::string& s : symbols) {
        auto it = by_name.find(s);
        out.push_back(it == by_name.end() ? 0.0 : it->second);
    }
    return out;
}

namespace {

Expr substitute_impl(const Expr& e, const std::map<std::string, Expr>& repl,
                     std::unordered_map<const Expr::Node*, Expr>& memo) {
    const Expr::Node* n = e.raw();
    auto hit = memo.find(n);
    if (hit != memo.end()) return hit->second;

    Expr out = e;
    if (n->kind == ExprKind::SymbolRef) {
        auto it = repl.find(n->sym.name);
        if (it != repl.end()) out = it->second;
    } else if (!n->kids.empty()) {
        bool changed = false;
        std::vector<Expr> kids;
        kids.reserve(n->kids.size());
        for (const Expr& k : n->kids) {
            Expr nk = substitute_impl(k, repl, memo);
            changed = changed || nk.raw() != k.raw();
            kids.push_back(std::move(nk));
        }
        if (changed) {
            switch (n->kind) {
                case ExprKind::Negate: out = -kids[0]; break;
                case ExprKind::Add: out = kids[0] + kids[1]; break;
                case ExprKind::Sub: out = kids[0] - kids[1]; break;
                case ExprKind::Mul: out = kids[0] * kids[1]; break;
                case ExprKind::Div: out = kids[0] / kids[1]; break;
                case ExprKind::Pow: out = pow(kids[0], kids[1]); break;
                case ExprKind::Log: out = log(kids[0]); break;
                case ExprKind::Sum: out = Expr::sum(std::move(kids)); break;
                default: break;
            }
        }
    }
    memo.emplace(n, out);
    return out;
}

}  // namespace

Expr substitute(const Expr& e, const Binding& partial) {
    std::map<std::string, Expr> repl;
    for (const auto& [name, value] : partial) repl.emplace(name, Expr::constant(value));
    std::unordered_map<const Expr::Node*, Expr> memo;
    return substitute_impl(e, repl, memo);
}

Expr substitute_exprs(const Expr& e, const std::map<std::string, Expr>& replacements) {
    std::unordered_map<const Expr::Node*, Expr> memo;
    return substitute_impl(e, replacements, memo);
}

std::vector<Symbol> free_symbols(const Expr& e) {
    std::vector<const Expr::Node*> order;
    std::unordered_map<const Expr::Node*, const Expr*> lookup;
    topo_order(e, order, lookup);
    std::map<std::string, Symbol> found;
    for (const Expr::Node* n : order)
        if (n->kind == ExprKind::SymbolRef) found.emplace(n->sym.name, n->sym);
    std::vector<Symbol> out;
    out.reserve(found.size());
    for (auto& [name, sym] : found) out.push_back(sym);
    return out;
}

namespace {

void dump_rec(const Expr& e, std::string& out) {
    const Expr::Node* n = e.raw();
    switch (n->kind) {
        case ExprKind::Constant: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6g", n->value);
            out += buf;
            return;
        }
        case ExprKind::SymbolRef: out += n->sym.name; return;
        default: break;
    }
    static const char* names[] = {"const", "sym", "neg", "+", "-", "*", "/", "^", "log", "sum"};
    out += "(";
    out += names[static_cast<int>(n->kind)];
    for (const Expr& k : n->kids) {
        out += " ";
        dump_rec(k, out);
    }
    out += ")";
}

}  // namespace

std::string to_prefix_string(const Expr& e) {
    std::string out;
    dump_rec(e, out);
    return out;
}

}  // namespace rmpa
