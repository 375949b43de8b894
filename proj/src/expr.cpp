#include "brtlab/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

namespace brt {

struct ExprNode {
    enum class Kind { constant, variable, add, sub, mul, div, pow, neg, call };
    Kind kind;
    double value = 0.0;   // constant
    std::string name;     // variable / function name
    ExprPtr a, b;
};

namespace {

using Kind = ExprNode::Kind;

ExprPtr make_const(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::constant;
    n->value = v;
    return n;
}

ExprPtr make_var(const std::string& name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::variable;
    n->name = name;
    return n;
}

bool is_const(const ExprPtr& e, double v) {
    return e->kind == Kind::constant && e->value == v;
}

// Light simplification at construction time keeps symbolic derivatives from
// ballooning; it folds constants and drops 0/1 identities, nothing clever.
ExprPtr make_bin(Kind k, ExprPtr a, ExprPtr b) {
    if (a->kind == Kind::constant && b->kind == Kind::constant) {
        switch (k) {
            case Kind::add: return make_const(a->value + b->value);
            case Kind::sub: return make_const(a->value - b->value);
            case Kind::mul: return make_const(a->value * b->value);
            case Kind::div:
                if (b->value != 0.0) return make_const(a->value / b->value);
                break;
            case Kind::pow: return make_const(std::pow(a->value, b->value));
            default: break;
        }
    }
    if (k == Kind::add) {
        if (is_const(a, 0)) return b;
        if (is_const(b, 0)) return a;
    }
    if (k == Kind::sub && is_const(b, 0)) return a;
    if (k == Kind::mul) {
        if (is_const(a, 0) || is_const(b, 0)) return make_const(0.0);
        if (is_const(a, 1)) return b;
        if (is_const(b, 1)) return a;
    }
    if (k == Kind::div && is_const(a, 0)) return make_const(0.0);
    if (k == Kind::div && is_const(b, 1)) return a;
    if (k == Kind::pow) {
        if (is_const(b, 1)) return a;
        if (is_const(b, 0)) return make_const(1.0);
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

ExprPtr make_neg(ExprPtr a) {
    if (a->kind == Kind::constant) return make_const(-a->value);
    if (a->kind == Kind::neg) return a->a;
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::neg;
    n->a = std::move(a);
    return n;
}

ExprPtr make_call(const std::string& name, ExprPtr a) {
    if (a->kind == Kind::constant) {
        if (name == "sin") return make_const(std::sin(a->value));
        if (name == "cos") return make_const(std::cos(a->value));
        if (name == "exp") return make_const(std::exp(a->value));
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::call;
    n->name = name;
    n->a = std::move(a);
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src) {}

    ExprPtr run() {
        ExprPtr e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("unexpected trailing input", current_token());
        return e;
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg, const std::string& tok) {
        throw ExprError(msg, pos_, tok);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    bool consume(char c) {
        if (peek() == c) { ++pos_; return true; }
        return false;
    }

    std::string current_token() {
        skip_ws();
        if (pos_ >= src_.size()) return "";
        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t e = pos_;
            while (e < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[e])) || src_[e] == '_')) ++e;
            return src_.substr(pos_, e - pos_);
        }
        return std::string(1, c);
    }

    ExprPtr expr() {
        ExprPtr e = term();
        while (true) {
            if (consume('+')) e = make_bin(Kind::add, e, term());
            else if (consume('-')) e = make_bin(Kind::sub, e, term());
            else return e;
        }
    }

    ExprPtr term() {
        ExprPtr e = factor();
        while (true) {
            if (consume('*')) e = make_bin(Kind::mul, e, factor());
            else if (consume('/')) e = make_bin(Kind::div, e, factor());
            else return e;
        }
    }

    ExprPtr factor() {
        ExprPtr base = unary();
        if (consume('^')) return make_bin(Kind::pow, base, factor());  // right assoc
        return base;
    }

    ExprPtr unary() {
        if (consume('-')) return make_neg(unary());
        return primary();
    }

    ExprPtr primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of expression", "");
        char c = src_[pos_];
        if (consume('(')) {
            ExprPtr e = expr();
            if (!consume(')')) fail("missing ')'", current_token());
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
        fail("unexpected character", std::string(1, c));
    }

    ExprPtr number() {
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        double v = 0.0;
        auto res = std::from_chars(begin, end, v);
        if (res.ec != std::errc())
            fail("malformed number", current_token());
        pos_ = static_cast<std::size_t>(res.ptr - src_.data());
        return make_const(v);
    }

    ExprPtr ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name = src_.substr(start, pos_ - start);
        if (name == "pi") return make_const(M_PI);
        if (name == "sin" || name == "cos" || name == "exp") {
            if (!consume('(')) fail("expected '(' after function", name);
            ExprPtr arg = expr();
            if (!consume(')')) fail("missing ')'", current_token());
            return make_call(name, arg);
        }
        return make_var(name);
    }
};

double eval_node(const ExprNode& n, const std::vector<std::pair<std::string, double>>& env) {
    switch (n.kind) {
        case Kind::constant: return n.value;
        case Kind::variable:
            for (const auto& [name, v] : env)
                if (name == n.name) return v;
            throw std::runtime_error("unbound variable '" + n.name + "'");
        case Kind::add: return eval_node(*n.a, env) + eval_node(*n.b, env);
        case Kind::sub: return eval_node(*n.a, env) - eval_node(*n.b, env);
        case Kind::mul: return eval_node(*n.a, env) * eval_node(*n.b, env);
        case Kind::div: return eval_node(*n.a, env) / eval_node(*n.b, env);
        case Kind::pow: return std::pow(eval_node(*n.a, env), eval_node(*n.b, env));
        case Kind::neg: return -eval_node(*n.a, env);
        case Kind::call: {
            double x = eval_node(*n.a, env);
            if (n.name == "sin") return std::sin(x);
            if (n.name == "cos") return std::cos(x);
            return std::exp(x);
        }
    }
    return 0.0;
}

ExprPtr deriv_node(const ExprPtr& n, const std::string& var) {
    switch (n->kind) {
        case Kind::constant: return make_const(0.0);
        case Kind::variable: return make_const(n->name == var ? 1.0 : 0.0);
        case Kind::add: return make_bin(Kind::add, deriv_node(n->a, var), deriv_node(n->b, var));
        case Kind::sub: return make_bin(Kind::sub, deriv_node(n->a, var), deriv_node(n->b, var));
        case Kind::mul:
            return make_bin(Kind::add,
                            make_bin(Kind::mul, deriv_node(n->a, var), n->b),
                            make_bin(Kind::mul, n->a, deriv_node(n->b, var)));
        case Kind::div:
            // (a/b)' = a'/b - a b'/b^2
            return make_bin(Kind::sub,
                            make_bin(Kind::div, deriv_node(n->a, var), n->b),
                            make_bin(Kind::div,
                                     make_bin(Kind::mul, n->a, deriv_node(n->b, var)),
                                     make_bin(Kind::pow, n->b, make_const(2.0))));
        case Kind::pow: {
            if (n->b->kind != Kind::constant)
                throw std::runtime_error("derivative of '^' requires a constant exponent");
            double p = n->b->value;
            return make_bin(Kind::mul,
                            make_bin(Kind::mul, make_const(p),
                                     make_bin(Kind::pow, n->a, make_const(p - 1.0))),
                            deriv_node(n->a, var));
        }
        case Kind::neg: return make_neg(deriv_node(n->a, var));
        case Kind::call: {
            ExprPtr inner = deriv_node(n->a, var);
            if (n->name == "sin") return make_bin(Kind::mul, make_call("cos", n->a), inner);
            if (n->name == "cos")
                return make_neg(make_bin(Kind::mul, make_call("sin", n->a), inner));
            return make_bin(Kind::mul, make_call("exp", n->a), inner);  // exp
        }
    }
    return make_const(0.0);
}

int precedence(Kind k) {
    switch (k) {
        case Kind::add: case Kind::sub: return 1;
        case Kind::mul: case Kind::div: return 2;
        case Kind::neg: return 3;
        case Kind::pow: return 4;
        default: return 5;
    }
}

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void print_node(const ExprNode& n, std::string& out) {
    auto child = [&out](const ExprNode& c, int parent_prec, bool strict) {
        bool parens = precedence(c.kind) < parent_prec ||
                      (strict && precedence(c.kind) == parent_prec);
        if (parens) out += '(';
        print_node(c, out);
        if (parens) out += ')';
    };
    switch (n.kind) {
        case Kind::constant:
            if (n.value < 0) { out += '('; out += fmt_double(n.value); out += ')'; }
            else out += fmt_double(n.value);
            break;
        case Kind::variable: out += n.name; break;
        case Kind::add: child(*n.a, 1, false); out += '+'; child(*n.b, 1, false); break;
        case Kind::sub: child(*n.a, 1, false); out += '-'; child(*n.b, 1, true); break;
        case Kind::mul: child(*n.a, 2, false); out += '*'; child(*n.b, 2, false); break;
        case Kind::div: child(*n.a, 2, false); out += '/'; child(*n.b, 2, true); break;
        case Kind::pow: child(*n.a, 4, true); out += '^'; child(*n.b, 4, false); break;
        case Kind::neg: out += '-'; child(*n.a, 3, true); break;
        case Kind::call: out += n.name; out += '('; print_node(*n.a, out); out += ')'; break;
    }
}

void collect_vars(const ExprNode& n, std::set<std::string>& out) {
    if (n.kind == Kind::variable) out.insert(n.name);
    if (n.a) collect_vars(*n.a, out);
    if (n.b) collect_vars(*n.b, out);
}

}  // namespace

Expr Expr::parse(const std::string& src) {
    Parser p(src);
    return Expr(p.run());
}

Expr Expr::constant(double c) { return Expr(make_const(c)); }

Expr Expr::variable(const std::string& name) { return Expr(make_var(name)); }

double Expr::eval(const std::vector<std::pair<std::string, double>>& env) const {
    if (!root_) throw std::runtime_error("empty expression");
    return eval_node(*root_, env);
}

double Expr::eval1(const std::string& var, double value) const {
    return eval({{var, value}});
}

Expr Expr::derivative(const std::string& var) const {
    if (!root_) throw std::runtime_error("empty expression");
    return Expr(deriv_node(root_, var));
}

std::string Expr::str() const {
    if (!root_) return "";
    std::string out;
    print_node(*root_, out);
    return out;
}

std::vector<std::string> Expr::variables() const {
    std::set<std::string> s;
    if (root_) collect_vars(*root_, s);
    return std::vector<std::string>(s.begin(), s.end());
}

namespace {

void compile_node(const ExprNode& n, const std::vector<std::string>& vars,
                  std::vector<CompiledExpr::Instr>& code) {
    // postorder emit; done via explicit recursion (trees are tiny)
    using Op = CompiledExpr::Op;
    switch (n.kind) {
        case Kind::constant:
            code.push_back({Op::push_const, n.value, 0});
            return;
        case Kind::variable: {
            for (std::size_t i = 0; i < vars.size(); ++i)
                if (vars[i] == n.name) {
                    code.push_back({Op::push_var, 0.0, static_cast<int>(i)});
                    return;
                }
            throw std::runtime_error("unbound variable '" + n.name + "' in bind()");
        }
        case Kind::neg:
            compile_node(*n.a, vars, code);
            code.push_back({Op::neg, 0.0, 0});
            return;
        case Kind::call:
            compile_node(*n.a, vars, code);
            code.push_back({n.name == "sin" ? Op::sin : n.name == "cos" ? Op::cos : Op::exp, 0.0, 0});
            return;
        default:
            compile_node(*n.a, vars, code);
            compile_node(*n.b, vars, code);
            Op op = n.kind == Kind::add ? Op::add
                  : n.kind == Kind::sub ? Op::sub
                  : n.kind == Kind::mul ? Op::mul
                  : n.kind == Kind::div ? Op::div
                                        : Op::pow;
            code.push_back({op, 0.0, 0});
            return;
    }
}

}  // namespace

CompiledExpr Expr::bind(const std::vector<std::string>& vars) const {
    if (!root_) throw std::runtime_error("empty expression");
    CompiledExpr c;
    compile_node(*root_, vars, c.code_);
    std::size_t depth = 0, maxd = 0;
    for (const auto& ins : c.code_) {
        if (ins.op == CompiledExpr::Op::push_const || ins.op == CompiledExpr::Op::push_var)
            ++depth;
        else if (ins.op != CompiledExpr::Op::neg && ins.op != CompiledExpr::Op::sin &&
                 ins.op != CompiledExpr::Op::cos && ins.op != CompiledExpr::Op::exp)
            --depth;  // binary ops pop one net
        maxd = std::max(maxd, depth);
    }
    c.max_stack_ = maxd;
    return c;
}

double CompiledExpr::eval(const double* vars) const {
    double stack[64];
    std::size_t sp = 0;
    for (const auto& ins : code_) {
        switch (ins.op) {
            case Op::push_const: stack[sp++] = ins.value; break;
            case Op::push_var: stack[sp++] = vars[ins.slot]; break;
            case Op::add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::div: --sp; stack[sp - 1] /= stack[sp]; break;
            case Op::pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
            case Op::neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
            case Op::cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
            case Op::exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
        }
    }
    return stack[0];
}

}  // namespace brt
