#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace rssbound {

using Mat4 = std::array<std::array<double, 4>, 4>;

inline double norm1(const Mat4& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            col += std::abs(m[i][j]);
        }
        if (col > best) {
            best = col;
        }
    }
    return best;
}

struct Inverse4 {
    Mat4 inverse{};
    bool ok = false;
    double condition = 0.0;  // 1-norm condition estimate ||A|| * ||A^-1||
};

// Gauss-Jordan with partial pivoting.
inline Inverse4 invert4(const Mat4& m) {
    Inverse4 result;
    std::array<std::array<double, 8>, 4> a{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            a[i][j] = m[i][j];
        }
        a[i][4 + i] = 1.0;
    }

    const double scale = norm1(m);
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        return result;
    }

    for (std::size_t col = 0; col < 4; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < 4; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                pivot = r;
            }
        }
        if (std::abs(a[pivot][col]) <= 1e-300 * scale) {
            return result;  // numerically singular
        }
        if (pivot != col) {
            std::swap(a[pivot], a[col]);
        }
        const double inv_p = 1.0 / a[col][col];
        for (std::size_t j = 0; j < 8; ++j) {
            a[col][j] *= inv_p;
        }
        for (std::size_t r = 0; r < 4; ++r) {
            if (r == col) {
                continue;
            }
            const double f = a[r][col];
            if (f == 0.0) {
                continue;
            }
            for (std::size_t j = 0; j < 8; ++j) {
                a[r][j] -= f * a[col][j];
            }
        }
    }

    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            result.inverse[i][j] = a[i][4 + j];
            if (!std::isfinite(result.inverse[i][j])) {
                return result;
            }
        }
    }
    result.condition = scale * norm1(result.inverse);
    result.ok = true;
    return result;
}

}  // namespace rssbound
