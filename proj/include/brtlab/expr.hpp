#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace brt {

// Error thrown by Expr::parse; carries the offending token and its position
// so the CLI can print a useful diagnostic.
struct ExprError : std::runtime_error {
    ExprError(const std::string& msg, std::size_t pos, const std::string& token)
        : std::runtime_error(msg + " at position " + std::to_string(pos) +
                             (token.empty() ? "" : " near '" + token + "'")),
          position(pos), token(token) {}
    std::size_t position;
    std::string token;
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

// Flattened form of an expression bound to a fixed variable layout.
// eval() takes the variable values in the order given to Expr::bind and
// runs a small stack machine; no allocation on the hot path.
class CompiledExpr {
public:
    double eval(const double* vars) const;
    double operator()(double x) const { return eval(&x); }

    enum class Op : unsigned char {
        push_const, push_var, add, sub, mul, div, pow, neg, sin, cos, exp
    };
    struct Instr {
        Op op;
        double value = 0.0;  // push_const
        int slot = 0;        // push_var
    };

private:
    friend class Expr;
    std::vector<Instr> code_;
    std::size_t max_stack_ = 0;
};

// Arithmetic expressions over named variables: +, -, *, /, ^ (constant
// exponent for differentiation), sin, cos, exp, numeric literals and pi.
// Immutable; all operations return new values.
class Expr {
public:
    Expr() = default;

    static Expr parse(const std::string& src);
    static Expr constant(double c);
    static Expr variable(const std::string& name);

    bool empty() const { return root_ == nullptr; }

    // Variables are matched by name; unknown names throw.
    double eval(const std::vector<std::pair<std::string, double>>& env) const;
    double eval1(const std::string& var, double value) const;

    // Symbolic partial derivative. Exponents of '^' must be constant.
    Expr derivative(const std::string& var) const;

    // Canonical serialization; parse(str()) reproduces the same tree.
    std::string str() const;

    std::vector<std::string> variables() const;

    // Bind to a fixed variable order for fast repeated evaluation.
    CompiledExpr bind(const std::vector<std::string>& vars) const;

private:
    explicit Expr(ExprPtr r) : root_(std::move(r)) {}
    ExprPtr root_;
};

}  // namespace brt
