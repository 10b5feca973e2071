// Arithmetic expressions over x, u, p (= u_x) and norm (= ||u||) for inline
// coefficients in scenario files.
#pragma once

#include <memory>
#include <string>

namespace sturm {

struct ExprNode;

/// Grammar: sums and products of numbers, the variables x, u, p, norm, the
/// constant pi, powers (^, right associative), unary signs and the functions
/// sin cos tan exp log sqrt abs tanh atan sinh cosh.
class Expression {
public:
    /// Throws PreconditionError with the offending position on a syntax error.
    explicit Expression(const std::string& text);

    double operator()(double x, double u, double p, double norm) const;
    bool uses_norm() const noexcept { return uses_norm_; }
    const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
    std::shared_ptr<const ExprNode> root_;
    bool uses_norm_ = false;
};

}  // namespace sturm
