#include "sindy/library.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sindy/errors.hpp"

namespace sindy {

int TermDescriptor::degree() const {
    return std::accumulate(exponents.begin(), exponents.end(), 0);
}

std::string monomial_label(std::span<const int> exponents) {
    std::string out;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        const int e = exponents[i];
        if (e == 0) continue;
        if (!out.empty()) out += '*';
        out += 'x' + std::to_string(i);
        if (e != 1) out += '^' + std::to_string(e);
    }
    return out.empty() ? std::string("1") : out;
}

namespace {

// Emit all exponent vectors of exactly `remaining` total degree, starting at position `pos`,
// in descending lexicographic order.
void enumerate_degree(std::vector<int>& current, std::size_t pos, int remaining,
                      std::vector<TermDescriptor>& out) {
    if (pos + 1 == current.size()) {
        current[pos] = remaining;
        out.push_back({current, monomial_label(current)});
        current[pos] = 0;
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[pos] = e;
        enumerate_degree(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

}  // namespace

std::vector<TermDescriptor> polynomial_terms(int n, int max_degree, bool include_constant) {
    if (n < 1) throw std::invalid_argument("polynomial library needs at least one state variable");
    if (max_degree < 1) throw std::invalid_argument("polynomial library max_degree must be >= 1");

    std::vector<TermDescriptor> terms;
    terms.reserve(polynomial_term_count(n, max_degree, include_constant));
    std::vector<int> current(static_cast<std::size_t>(n), 0);
    for (int d = include_constant ? 0 : 1; d <= max_degree; ++d) {
        enumerate_degree(current, 0, d, terms);
    }
    return terms;
}

std::size_t polynomial_term_count(int n, int max_degree, bool include_constant) {
    // C(n+d, d) computed incrementally; exact for the sizes used here.
    std::size_t count = 1;
    for (int k = 1; k <= max_degree; ++k) {
        count = count * static_cast<std::size_t>(n + k) / static_cast<std::size_t>(k);
    }
    return include_constant ? count : count - 1;
}

Matrix evaluate_terms(const Matrix& X, const std::vector<TermDescriptor>& terms) {
    if (!X.allFinite()) {
        for (Eigen::Index r = 0; r < X.rows(); ++r)
            for (Eigen::Index c = 0; c < X.cols(); ++c)
                if (!std::isfinite(X(r, c)))
                    throw DataQualityError("non-finite state value at row " + std::to_string(r) +
                                           ", column " + std::to_string(c));
    }
    const Eigen::Index b = X.rows();
    Matrix values(b, static_cast<Eigen::Index>(terms.size()));
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const auto& ex = terms[j].exponents;
        if (static_cast<Eigen::Index>(ex.size()) != X.cols())
            throw std::invalid_argument("term '" + terms[j].label + "' does not match state dimension");
        auto col = values.col(static_cast<Eigen::Index>(j));
        col.setOnes();
        for (std::size_t i = 0; i < ex.size(); ++i) {
            for (int p = 0; p < ex[i]; ++p) col.array() *= X.col(static_cast<Eigen::Index>(i)).array();
        }
    }
    return values;
}

DesignMatrix build_polynomial_library(const Matrix& X, int max_degree, bool include_constant) {
    if (X.rows() < 1 || X.cols() < 1)
        throw std::invalid_argument("polynomial library needs a non-empty state matrix");
    DesignMatrix lib;
    lib.terms = polynomial_terms(static_cast<int>(X.cols()), max_degree, include_constant);
    lib.values = evaluate_terms(X, lib.terms);
    lib.source_dims = static_cast<int>(X.cols());
    return lib;
}

std::optional<std::size_t> term_index(const std::vector<TermDescriptor>& terms,
                                      std::span<const int> exponents) {
    if (!terms.empty() && terms.front().exponents.size() != exponents.size())
        throw std::invalid_argument("exponent vector length does not match library dimension");
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const auto& ex = terms[j].exponents;
        if (ex.size() == exponents.size() && std::equal(ex.begin(), ex.end(), exponents.begin()))
            return j;
    }
    return std::nullopt;
}

std::optional<std::size_t> term_index(const DesignMatrix& library, std::span<const int> exponents) {
    if (static_cast<int>(exponents.size()) != library.source_dims)
        throw std::invalid_argument("exponent vector length does not match library dimension");
    return term_index(library.terms, exponents);
}

}  // namespace sindy
