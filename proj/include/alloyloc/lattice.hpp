#pragma once
#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <string>
#include <vector>

#include "errors.hpp"
#include "potential.hpp"

namespace alloyloc {

/// A point of Z^d.
struct Site {
    std::vector<std::int64_t> coords;

    Site() = default;
    explicit Site(std::vector<std::int64_t> c) : coords(std::move(c)) {}
    Site(std::initializer_list<std::int64_t> c) : coords(c) {}

    /// The origin of Z^d.
    static Site origin(int d) {
        if (d < 1) throw ConfigError("dimension must be >= 1");
        return Site(std::vector<std::int64_t>(static_cast<std::size_t>(d), 0));
    }
    /// The point (x, 0, ..., 0).
    static Site axis(int d, std::int64_t x) {
        Site s = origin(d);
        s.coords[0] = x;
        return s;
    }

    int dim() const { return static_cast<int>(coords.size()); }
    std::int64_t operator[](std::size_t i) const { return coords[i]; }
    std::int64_t& operator[](std::size_t i) { return coords[i]; }

    friend auto operator<=>(const Site&, const Site&) = default;
    friend bool operator==(const Site&, const Site&) = default;

    friend Site operator+(Site a, const Site& b) {
        check_same_dim(a, b);
        for (std::size_t i = 0; i < a.coords.size(); ++i) a.coords[i] += b.coords[i];
        return a;
    }
    friend Site operator-(Site a, const Site& b) {
        check_same_dim(a, b);
        for (std::size_t i = 0; i < a.coords.size(); ++i) a.coords[i] -= b.coords[i];
        return a;
    }

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < coords.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(coords[i]);
        }
        return s + ")";
    }

    static void check_same_dim(const Site& a, const Site& b) {
        if (a.coords.size() != b.coords.size())
            throw ConfigError("site dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
};

inline std::int64_t sup_norm(const Site& x) {
    std::int64_t m = 0;
    for (auto c : x.coords) m = std::max(m, c < 0 ? -c : c);
    return m;
}

inline std::int64_t sup_dist(const Site& x, const Site& y) {
    Site::check_same_dim(x, y);
    std::int64_t m = 0;
    for (std::size_t i = 0; i < x.coords.size(); ++i) m = std::max(m, std::abs(x.coords[i] - y.coords[i]));
    return m;
}

/// Integer power for site counts; doubles keep d = 3 counts exact well past r = 10^5.
inline double ipow(double base, int d) {
    double r = 1.0;
    for (int i = 0; i < d; ++i) r *= base;
    return r;
}

/// |B_r| = (2r+1)^d, and 0 for r < 0.
inline double ball_count(int d, std::int64_t r) { return r < 0 ? 0.0 : ipow(2.0 * static_cast<double>(r) + 1.0, d); }

/// Number of sites with sup-norm exactly m.
inline double sphere_count(int d, std::int64_t m) { return m == 0 ? 1.0 : ball_count(d, m) - ball_count(d, m - 1); }

/// Sites with sup-norm in [lo, hi].
inline double annulus_count(int d, std::int64_t lo, std::int64_t hi) {
    if (hi < lo) return 0.0;
    return ball_count(d, hi) - ball_count(d, lo - 1);
}

/// Closed sup-norm ball B_L(u) ⊂ Z^d with lexicographic site order.
struct Ball {
    Site center;
    std::int64_t radius = 0;

    Ball() = default;
    Ball(Site c, std::int64_t L) : center(std::move(c)), radius(L) {
        if (center.dim() < 1) throw ConfigError("ball dimension must be >= 1");
        if (radius < 0) throw ConfigError("ball radius must be nonnegative");
    }
    Ball(Site c, std::int64_t L, int d) : Ball(std::move(c), L) {
        if (d != center.dim())
            throw ConfigError("ball center has dimension " + std::to_string(center.dim()) + " but d = " + std::to_string(d));
    }

    int dim() const { return center.dim(); }
    std::size_t size() const { return static_cast<std::size_t>(ball_count(dim(), radius)); }
    std::int64_t side() const { return 2 * radius + 1; }
    bool contains(const Site& x) const { return sup_dist(x, center) <= radius; }

    /// Position of x in the lexicographic enumeration (first coordinate most significant).
    std::size_t index_of(const Site& x) const {
        if (!contains(x)) throw ConfigError("site " + x.str() + " lies outside the ball");
        std::size_t idx = 0;
        for (int i = 0; i < dim(); ++i)
            idx = idx * static_cast<std::size_t>(side()) + static_cast<std::size_t>(x[i] - center[i] + radius);
        return idx;
    }

    Site site_at(std::size_t idx) const {
        Site s = center;
        for (int i = dim() - 1; i >= 0; --i) {
            const auto q = static_cast<std::int64_t>(idx % static_cast<std::size_t>(side()));
            idx /= static_cast<std::size_t>(side());
            s[i] = center[i] - radius + q;
        }
        return s;
    }
};

inline std::vector<Site> enumerate_ball(const Ball& b) {
    std::vector<Site> out;
    out.reserve(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out.push_back(b.site_at(i));
    return out;
}

/// Sites of B_L(u) with a nearest neighbour outside B_L(u).
inline std::vector<Site> inner_boundary(const Ball& b) {
    if (b.radius < 1) throw ConfigError("inner boundary requires radius >= 1 (B_0 has no interior/boundary split)");
    std::vector<Site> out;
    for (std::size_t i = 0; i < b.size(); ++i) {
        Site s = b.site_at(i);
        if (sup_dist(s, b.center) == b.radius) out.push_back(std::move(s));
    }
    return out;
}

/// B_R(u) \ B_L(u).
struct Annulus {
    Site center;
    std::int64_t inner = 0;
    std::int64_t outer = 0;

    Annulus() = default;
    Annulus(Site c, std::int64_t L, std::int64_t R) : center(std::move(c)), inner(L), outer(R) {
        if (L < 0 || R < L) throw ConfigError("annulus needs 0 <= inner <= outer");
    }
    int dim() const { return center.dim(); }
    std::size_t size() const { return static_cast<std::size_t>(ball_count(dim(), outer) - ball_count(dim(), inner)); }
    bool contains(const Site& x) const {
        const auto r = sup_dist(x, center);
        return r > inner && r <= outer;
    }
    std::vector<Site> sites() const {
        std::vector<Site> out;
        out.reserve(size());
        const Ball big(center, outer);
        for (std::size_t i = 0; i < big.size(); ++i) {
            Site s = big.site_at(i);
            if (sup_dist(s, center) > inner) out.push_back(std::move(s));
        }
        return out;
    }
};

/// X_n = {x : |x - center| ∈ (r_{n-1}, r_n]} with r_0 = 0.
struct Shell {
    Site center;
    std::int64_t index = 1;
    std::int64_t inner = 0;
    std::int64_t outer = 1;
    double count = 0;   ///< K_n
    double weight = 0;  ///< 𝔞_n = r_n^{-A}

    bool contains(const Site& x) const {
        const auto r = sup_dist(x, center);
        return r > inner && r <= outer;
    }
    std::vector<Site> sites() const { return Annulus(center, inner, outer).sites(); }
};

inline std::vector<Shell> shell_decomposition(const Site& center, const InteractionPotential& pot, std::int64_t n_max) {
    if (n_max < 1) throw ConfigError("shell_decomposition needs n_max >= 1");
    const int d = center.dim();
    if (d < 1) throw ConfigError("dimension must be >= 1");
    std::vector<Shell> out;
    out.reserve(static_cast<std::size_t>(n_max));
    std::int64_t prev = 0;
    for (std::int64_t n = 1; n <= n_max; ++n) {
        const std::int64_t r = pot.plateau_start(n);
        out.push_back(Shell{center, n, prev, r, ball_count(d, r) - ball_count(d, prev), std::pow(static_cast<double>(r), -pot.A())});
        prev = r;
    }
    return out;
}

} // namespace alloyloc
