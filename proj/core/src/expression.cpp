#include "singvolt/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

#include "singvolt/errors.hpp"

namespace singvolt {

std::size_t VariableTable::lookup(std::string_view name) const {
    if (name == "t") return t_slot;
    if (name == "s") return s_slot;
    if (name.size() >= 2 && (name[0] == 'y' || name[0] == 'u')) {
        std::size_t index = 0;
        auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
        if (ec != std::errc() || ptr != name.data() + name.size() || index == 0) return npos;
        if (name[0] == 'y' && index <= n_) return y_slot(index - 1);
        if (name[0] == 'u' && index <= m_) return u_slot(index - 1);
    }
    return npos;
}

std::string VariableTable::name(std::size_t slot) const {
    if (slot == t_slot) return "t";
    if (slot == s_slot) return "s";
    if (slot < 2 + n_) return "y" + std::to_string(slot - 1);
    return "u" + std::to_string(slot - 1 - n_);
}

namespace detail {

enum Op : int {
    kConst, kVar, kNeg, kAdd, kSub, kMul, kDiv, kPow,
    kSin, kCos, kExp, kLog, kSqrt, kAbs, kSign
};

struct ExprNode {
    Op op;
    double value = 0.0;
    std::size_t slot = 0;
    std::shared_ptr<const ExprNode> a;
    std::shared_ptr<const ExprNode> b;
};

}  // namespace detail

namespace {

using detail::ExprNode;
using detail::Op;
using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_const(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = detail::kConst;
    n->value = v;
    return n;
}

NodePtr make_var(std::size_t slot) {
    auto n = std::make_shared<ExprNode>();
    n->op = detail::kVar;
    n->slot = slot;
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == detail::kConst && n->value == v; }

double apply_unary(Op op, double x) {
    switch (op) {
        case detail::kNeg: return -x;
        case detail::kSin: return std::sin(x);
        case detail::kCos: return std::cos(x);
        case detail::kExp: return std::exp(x);
        case detail::kLog: return std::log(x);
        case detail::kSqrt: return std::sqrt(x);
        case detail::kAbs: return std::abs(x);
        case detail::kSign: return (x > 0.0) - (x < 0.0);
        default: return 0.0;
    }
}

double apply_binary(Op op, double x, double y) {
    switch (op) {
        case detail::kAdd: return x + y;
        case detail::kSub: return x - y;
        case detail::kMul: return x * y;
        case detail::kDiv: return x / y;
        case detail::kPow: return std::pow(x, y);
        default: return 0.0;
    }
}

bool is_unary(Op op) { return op == detail::kNeg || op >= detail::kSin; }

// Builders with light constant folding so derivative trees stay small.
NodePtr unary(Op op, NodePtr a) {
    if (a->op == detail::kConst) return make_const(apply_unary(op, a->value));
    if (op == detail::kNeg && a->op == detail::kNeg) return a->a;
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    return n;
}

NodePtr binary(Op op, NodePtr a, NodePtr b) {
    if (a->op == detail::kConst && b->op == detail::kConst) {
        return make_const(apply_binary(op, a->value, b->value));
    }
    switch (op) {
        case detail::kAdd:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case detail::kSub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return unary(detail::kNeg, b);
            break;
        case detail::kMul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case detail::kDiv:
            if (is_const(a, 0.0)) return make_const(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case detail::kPow:
            if (is_const(b, 0.0)) return make_const(1.0);
            if (is_const(b, 1.0)) return a;
            break;
        default:
            break;
    }
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

bool node_depends(const NodePtr& n, std::size_t slot) {
    if (!n) return false;
    if (n->op == detail::kVar) return n->slot == slot;
    return node_depends(n->a, slot) || node_depends(n->b, slot);
}

NodePtr differentiate(const NodePtr& n, std::size_t slot) {
    if (!node_depends(n, slot)) return make_const(0.0);
    switch (n->op) {
        case detail::kConst: return make_const(0.0);
        case detail::kVar: return make_const(n->slot == slot ? 1.0 : 0.0);
        case detail::kNeg: return unary(detail::kNeg, differentiate(n->a, slot));
        case detail::kAdd:
            return binary(detail::kAdd, differentiate(n->a, slot), differentiate(n->b, slot));
        case detail::kSub:
            return binary(detail::kSub, differentiate(n->a, slot), differentiate(n->b, slot));
        case detail::kMul:
            return binary(detail::kAdd, binary(detail::kMul, differentiate(n->a, slot), n->b),
                          binary(detail::kMul, n->a, differentiate(n->b, slot)));
        case detail::kDiv: {
            // (a'b - ab') / b^2
            auto num = binary(detail::kSub, binary(detail::kMul, differentiate(n->a, slot), n->b),
                              binary(detail::kMul, n->a, differentiate(n->b, slot)));
            return binary(detail::kDiv, num, binary(detail::kMul, n->b, n->b));
        }
        case detail::kPow: {
            if (!node_depends(n->b, slot)) {
                auto expo = binary(detail::kSub, n->b, make_const(1.0));
                return binary(detail::kMul,
                              binary(detail::kMul, n->b, binary(detail::kPow, n->a, expo)),
                              differentiate(n->a, slot));
            }
            // a^b (b' log a + b a' / a)
            auto term1 = binary(detail::kMul, differentiate(n->b, slot), unary(detail::kLog, n->a));
            auto term2 = binary(detail::kDiv, binary(detail::kMul, n->b, differentiate(n->a, slot)), n->a);
            return binary(detail::kMul, n, binary(detail::kAdd, term1, term2));
        }
        case detail::kSin:
            return binary(detail::kMul, unary(detail::kCos, n->a), differentiate(n->a, slot));
        case detail::kCos:
            return unary(detail::kNeg,
                         binary(detail::kMul, unary(detail::kSin, n->a), differentiate(n->a, slot)));
        case detail::kExp: return binary(detail::kMul, n, differentiate(n->a, slot));
        case detail::kLog: return binary(detail::kDiv, differentiate(n->a, slot), n->a);
        case detail::kSqrt:
            return binary(detail::kDiv, differentiate(n->a, slot), binary(detail::kMul, make_const(2.0), n));
        case detail::kAbs:
            return binary(detail::kMul, unary(detail::kSign, n->a), differentiate(n->a, slot));
        case detail::kSign: return make_const(0.0);
    }
    return make_const(0.0);
}

std::string print(const NodePtr& n, const VariableTable* vars) {
    std::ostringstream os;
    os.precision(17);
    switch (n->op) {
        case detail::kConst: os << n->value; break;
        case detail::kVar:
            if (vars) {
                os << vars->name(n->slot);
            } else {
                os << "$" << n->slot;
            }
            break;
        case detail::kNeg: os << "(-" << print(n->a, vars) << ")"; break;
        case detail::kAdd: os << "(" << print(n->a, vars) << " + " << print(n->b, vars) << ")"; break;
        case detail::kSub: os << "(" << print(n->a, vars) << " - " << print(n->b, vars) << ")"; break;
        case detail::kMul: os << "(" << print(n->a, vars) << " * " << print(n->b, vars) << ")"; break;
        case detail::kDiv: os << "(" << print(n->a, vars) << " / " << print(n->b, vars) << ")"; break;
        case detail::kPow: os << "(" << print(n->a, vars) << " ^ " << print(n->b, vars) << ")"; break;
        case detail::kSin: os << "sin(" << print(n->a, vars) << ")"; break;
        case detail::kCos: os << "cos(" << print(n->a, vars) << ")"; break;
        case detail::kExp: os << "exp(" << print(n->a, vars) << ")"; break;
        case detail::kLog: os << "log(" << print(n->a, vars) << ")"; break;
        case detail::kSqrt: os << "sqrt(" << print(n->a, vars) << ")"; break;
        case detail::kAbs: os << "abs(" << print(n->a, vars) << ")"; break;
        case detail::kSign: os << "sign(" << print(n->a, vars) << ")"; break;
    }
    return os.str();
}

class Parser {
public:
    Parser(std::string_view src, const VariableTable& vars) : src_(src), vars_(vars) {}

    NodePtr parse() {
        NodePtr n = parse_sum();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(0, "expression '" + std::string(src_) + "', column " +
                                std::to_string(pos_ + 1) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr parse_sum() {
        NodePtr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = binary(detail::kAdd, lhs, parse_product());
            } else if (accept('-')) {
                lhs = binary(detail::kSub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_product() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = binary(detail::kMul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = binary(detail::kDiv, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    // Unary minus binds looser than ^, so -y^2 is -(y^2).
    NodePtr parse_unary() {
        if (accept('-')) return unary(detail::kNeg, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (accept('^')) return binary(detail::kPow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of expression");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr n = parse_sum();
            expect(')');
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                ++pos_;
            }
            const std::string_view ident = src_.substr(start, pos_ - start);
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == '(') return parse_call(ident);
            if (ident == "pi") return make_const(std::numbers::pi);
            const std::size_t slot = vars_.lookup(ident);
            if (slot == VariableTable::npos) {
                pos_ = start;
                fail("unknown variable '" + std::string(ident) + "'");
            }
            return make_var(slot);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
                pos_ = p;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc() || ptr != src_.data() + pos_) {
            pos_ = start;
            fail("malformed number");
        }
        return make_const(v);
    }

    NodePtr parse_call(std::string_view name) {
        expect('(');
        NodePtr arg = parse_sum();
        if (name == "pow") {
            expect(',');
            NodePtr expo = parse_sum();
            expect(')');
            return binary(detail::kPow, arg, expo);
        }
        expect(')');
        if (name == "sin") return unary(detail::kSin, arg);
        if (name == "cos") return unary(detail::kCos, arg);
        if (name == "exp") return unary(detail::kExp, arg);
        if (name == "log") return unary(detail::kLog, arg);
        if (name == "sqrt") return unary(detail::kSqrt, arg);
        if (name == "abs") return unary(detail::kAbs, arg);
        fail("unknown function '" + std::string(name) + "'");
    }

    std::string_view src_;
    const VariableTable& vars_;
    std::size_t pos_ = 0;
};

void emit(const NodePtr& n, std::vector<std::tuple<int, double, std::size_t>>& out) {
    if (n->a) emit(n->a, out);
    if (n->b) emit(n->b, out);
    out.emplace_back(n->op, n->value, n->slot);
}

std::size_t max_slot_of(const NodePtr& n) {
    if (!n) return 0;
    if (n->op == detail::kVar) return n->slot;
    return std::max(max_slot_of(n->a), max_slot_of(n->b));
}

constexpr std::size_t kMaxStack = 64;

}  // namespace

Expression::Expression() : Expression(make_const(0.0), "0") {}

Expression::Expression(std::shared_ptr<const detail::ExprNode> root, std::string source)
    : root_(std::move(root)), source_(std::move(source)) {
    compile();
}

Expression Expression::parse(std::string_view source, const VariableTable& vars) {
    Parser parser(source, vars);
    return Expression(parser.parse(), std::string(source));
}

Expression Expression::constant(double value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    return Expression(make_const(value), os.str());
}

void Expression::compile() {
    std::vector<std::tuple<int, double, std::size_t>> raw;
    emit(root_, raw);
    code_.clear();
    std::size_t depth = 0;
    stack_need_ = 0;
    for (const auto& [op, value, slot] : raw) {
        code_.push_back({op, value, slot});
        const auto o = static_cast<Op>(op);
        if (o == detail::kConst || o == detail::kVar) {
            ++depth;
        } else if (!is_unary(o)) {
            --depth;
        }
        stack_need_ = std::max(stack_need_, depth);
    }
    if (stack_need_ > kMaxStack) throw ParseError(0, "expression nesting too deep");
}

double Expression::eval(const double* slots) const {
    std::array<double, kMaxStack> stack;
    std::size_t top = 0;
    for (const Instr& ins : code_) {
        const auto op = static_cast<Op>(ins.op);
        switch (op) {
            case detail::kConst: stack[top++] = ins.value; break;
            case detail::kVar: stack[top++] = slots[ins.slot]; break;
            case detail::kAdd: case detail::kSub: case detail::kMul: case detail::kDiv: case detail::kPow: {
                const double rhs = stack[--top];
                stack[top - 1] = apply_binary(op, stack[top - 1], rhs);
                break;
            }
            default: stack[top - 1] = apply_unary(op, stack[top - 1]); break;
        }
    }
    return stack[0];
}

Expression Expression::derivative(std::size_t slot) const {
    NodePtr d = differentiate(root_, slot);
    return Expression(d, print(d, nullptr));
}

bool Expression::depends_on(std::size_t slot) const { return node_depends(root_, slot); }

bool Expression::is_zero() const { return is_const(root_, 0.0); }

std::size_t Expression::max_slot() const { return max_slot_of(root_); }

}  // namespace singvolt
