#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>
#include <vector>

#include "markovig/errors.hpp"

namespace markovig {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// (to, from) index pairs of nonzero entries, sorted lexicographically.
using SupportSet = std::vector<std::pair<int, int>>;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline SupportSet support_of(const Matrix& m) {
    SupportSet s;
    for (int to = 0; to < m.rows(); ++to)
        for (int from = 0; from < m.cols(); ++from)
            if (m(to, from) > 0.0) s.emplace_back(to, from);
    return s;
}

// True when every nonzero entry of a has a nonzero counterpart in b.
inline bool support_contained(const Matrix& a, const Matrix& b) {
    for (int to = 0; to < a.rows(); ++to)
        for (int from = 0; from < a.cols(); ++from)
            if (a(to, from) > 0.0 && !(b(to, from) > 0.0)) return false;
    return true;
}

// Entrywise minimum support: pairs where both matrices are positive.
inline SupportSet support_intersection(const Matrix& a, const Matrix& b) {
    SupportSet s;
    for (int to = 0; to < a.rows(); ++to)
        for (int from = 0; from < a.cols(); ++from)
            if (a(to, from) > 0.0 && b(to, from) > 0.0) s.emplace_back(to, from);
    return s;
}

// Kronecker-style product of two transition matrices in [to][from] layout:
// state (x, y) is encoded as x * ny + y.
inline Matrix product_matrix(const Matrix& a, const Matrix& b) {
    const int na = static_cast<int>(a.rows());
    const int nb = static_cast<int>(b.rows());
    Matrix out(na * nb, na * nb);
    for (int xt = 0; xt < na; ++xt)
        for (int yt = 0; yt < nb; ++yt)
            for (int xf = 0; xf < na; ++xf)
                for (int yf = 0; yf < nb; ++yf)
                    out(xt * nb + yt, xf * nb + yf) = a(xt, xf) * b(yt, yf);
    return out;
}

}  // namespace markovig
