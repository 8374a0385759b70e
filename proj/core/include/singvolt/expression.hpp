#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace singvolt {

/// Maps variable names to evaluation slots. Slot layout is
/// t, s, y1..yn, u1..um.
class VariableTable {
public:
    VariableTable(std::size_t state_dim, std::size_t control_dim)
        : n_(state_dim), m_(control_dim) {}

    static constexpr std::size_t t_slot = 0;
    static constexpr std::size_t s_slot = 1;
    std::size_t y_slot(std::size_t i) const { return 2 + i; }
    std::size_t u_slot(std::size_t i) const { return 2 + n_ + i; }
    std::size_t slot_count() const { return 2 + n_ + m_; }
    std::size_t state_dim() const { return n_; }
    std::size_t control_dim() const { return m_; }

    /// Slot for a name, or npos if unknown.
    std::size_t lookup(std::string_view name) const;
    std::string name(std::size_t slot) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t n_;
    std::size_t m_;
};

namespace detail {
struct ExprNode;
}

/// Arithmetic expression over t, s, y1..yn, u1..um with + - * / ^ and
/// sin, cos, exp, log, sqrt, abs, pow. Immutable; evaluation is reentrant.
class Expression {
public:
    Expression();

    /// Throws ParseError (line 0, column in the message) on bad input.
    static Expression parse(std::string_view source, const VariableTable& vars);
    static Expression constant(double value);

    double eval(const double* slots) const;

    /// Symbolic partial derivative with respect to an evaluation slot.
    Expression derivative(std::size_t slot) const;

    bool depends_on(std::size_t slot) const;
    bool is_zero() const;
    std::size_t max_slot() const;

    /// Original text for parsed expressions, a printed form otherwise.
    const std::string& source() const { return source_; }

private:
    struct Instr {
        int op;
        double value;
        std::size_t slot;
    };

    explicit Expression(std::shared_ptr<const detail::ExprNode> root, std::string source);
    void compile();

    std::shared_ptr<const detail::ExprNode> root_;
    std::vector<Instr> code_;
    std::size_t stack_need_ = 0;
    std::string source_;
};

}  // namespace singvolt
