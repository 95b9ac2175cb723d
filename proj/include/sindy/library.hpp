#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sindy {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Boolean support pattern, q x n (terms x equations) unless noted otherwise.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// One monomial column of the candidate library.
struct TermDescriptor {
    std::vector<int> exponents;  // one entry per state variable
    std::string label;

    int degree() const;
    bool operator==(const TermDescriptor&) const = default;
};

/// Label scheme: "x{i}^{e}" factors joined by '*', exponent 1 omitted, "1" for the constant.
std::string monomial_label(std::span<const int> exponents);

/// Candidate monomials of total degree <= max_degree in n variables.
/// Ordered by total degree, then by descending lexicographic exponent vector,
/// so x0 precedes x1 and x0^2 precedes x0*x1.
std::vector<TermDescriptor> polynomial_terms(int n, int max_degree, bool include_constant);

/// Number of monomials polynomial_terms() produces: C(n+d, d), minus one without constant.
std::size_t polynomial_term_count(int n, int max_degree, bool include_constant);

/// Theta(X): b x q design matrix together with its column descriptors.
struct DesignMatrix {
    Matrix values;
    std::vector<TermDescriptor> terms;
    int source_dims = 0;

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return terms.size(); }
};

/// Evaluate the polynomial library on every row of X. Throws DataQualityError on
/// non-finite input and std::invalid_argument on bad shapes or degree.
DesignMatrix build_polynomial_library(const Matrix& X, int max_degree, bool include_constant = true);

/// Evaluate an explicit term list on X (used to rebuild a library with a known ordering).
Matrix evaluate_terms(const Matrix& X, const std::vector<TermDescriptor>& terms);

/// Column index of the monomial with the given exponents, if it is part of the library.
std::optional<std::size_t> term_index(const DesignMatrix& library, std::span<const int> exponents);
std::optional<std::size_t> term_index(const std::vector<TermDescriptor>& terms,
                                      std::span<const int> exponents);

}  // namespace sindy
