#ifndef RMPA_EXPR_HPP
#define RMPA_EXPR_HPP

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmpa {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A symbol required by evaluation was not bound.
struct UnboundSymbolError : Error {
    explicit UnboundSymbolError(const std::string& symbol)
        : Error("unbound symbol: " + symbol), symbol(symbol) {}
    std::string symbol;
};

// log of a non-positive value, fractional power of a non-positive base,
// or division by zero. The message names the offending node.
struct DomainError : Error {
    using Error::Error;
};

enum class SymbolKind { Decision, Uncertain, Parameter };

//! Named scalar appearing in expressions. Members of a vectorized family
//! (E_i, m_i, ...) carry the family name plus a non-negative index and are
//! rendered as "family[index]".
struct Symbol {
    std::string name;
    SymbolKind kind = SymbolKind::Decision;
    int family_index = -1;  // < 0 for scalar symbols

    Symbol() = default;
    Symbol(std::string name, SymbolKind kind, int family_index = -1)
        : name(std::move(name)), kind(kind), family_index(family_index) {}

    bool operator==(const Symbol& o) const { return name == o.name; }
};

//! Family name of a symbol: "E[3]" -> "E", "eta" -> "eta".
std::string family_of(const std::string& symbol_name);

//! Render "family[index]".
std::string indexed_name(const std::string& family, int index);

using Binding = std::map<std::string, double>;

enum class ExprKind {
    Constant,
    SymbolRef,
    Negate,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Log,
    Sum,  // n-ary sum over a symbol family's terms
};

//! Immutable expression tree (shared-subtree DAG) over named symbols.
//! All model objectives and constraints are values of this type; copies are
//! cheap (shared ownership) and all instances are safe for concurrent reads.
class Expr {
public:
    struct Node {
        ExprKind kind;
        double value = 0.0;       // Constant
        Symbol sym;               // SymbolRef
        std::vector<Expr> kids;   // operands
    };

    Expr() : Expr(constant(0.0)) {}

    static Expr constant(double v);
    static Expr symbol(const Symbol& s);
    static Expr symbol(const std::string& name, SymbolKind kind = SymbolKind::Decision,
                       int family_index = -1);
    static Expr sum(std::vector<Expr> terms);

    const Node& node() const { return *node_; }
    const Node* raw() const { return node_.get(); }
    ExprKind kind() const { return node_->kind; }

    friend Expr operator-(const Expr& a);
    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator+(const Expr& a, double b) { return a + constant(b); }
    friend Expr operator+(double a, const Expr& b) { return constant(a) + b; }
    friend Expr operator-(const Expr& a, double b) { return a - constant(b); }
    friend Expr operator-(double a, const Expr& b) { return constant(a) - b; }
    friend Expr operator*(const Expr& a, double b) { return a * constant(b); }
    friend Expr operator*(double a, const Expr& b) { return constant(a) * b; }
    friend Expr operator/(const Expr& a, double b) { return a / constant(b); }
    friend Expr operator/(double a, const Expr& b) { return constant(a) / b; }
    friend Expr pow(const Expr& base, const Expr& exponent);
    friend Expr log(const Expr& arg);

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Expr make(Node n);
    std::shared_ptr<const Node> node_;
};

Expr pow(const Expr& base, const Expr& exponent);
inline Expr pow(const Expr& base, double exponent) {
    return pow(base, Expr::constant(exponent));
}
Expr log(const Expr& arg);

//! Exact value of the tree under the binding. Every free symbol must be
//! bound; log and fractional powers require positive arguments.
double evaluate(const Expr& e, const Binding& binding);

//! Exact partial derivatives (reverse propagation over the shared-subtree
//! DAG) with respect to the requested symbol names. Symbols not appearing
//! in the tree get component 0.
std::vector<double> gradient(const Expr& e, std::span<const std::string> symbols,
                             const Binding& binding);

//! Replace each bound symbol by a constant node; unbound symbols and the
//! tree structure are untouched. Shared subtrees stay shared.
Expr substitute(const Expr& e, const Binding& partial);

//! Replace symbols by whole expressions (cut re-parameterization and
//! normalized-coordinate changes of variables).
Expr substitute_exprs(const Expr& e, const std::map<std::string, Expr>& replacements);

//! Free symbols of the tree, deduplicated, sorted by name.
std::vector<Symbol> free_symbols(const Expr& e);

//! Debug-only prefix dump, e.g. "(+ (* 2 x) (log y))". Not a stable surface.
std::string to_prefix_string(const Expr& e);

}  // namespace rmpa

#endif
