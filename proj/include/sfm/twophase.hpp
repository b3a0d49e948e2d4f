#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace sfm::twophase {

/// Closed forms for the two-phase model T = [[-a, a], [b, -b]], c = (1, -1)
/// with a > b > 0. Every first-return and stationary quantity is scalar.
struct TwoPhase {
    double a, b;

    using C = std::complex<double>;

    C disc(C s) const {
        const C w = a + b + 2.0 * s;
        return w * w - 4.0 * a * b;
    }
    C root(C s) const { return std::sqrt(disc(s)); }

    C psi(C s) const { return (a + b + 2.0 * s - root(s)) / (2.0 * b); }
    C xi(C s) const { return (a + b + 2.0 * s - root(s)) / (2.0 * a); }
    C D(C s) const { return -b - s + (a + b + 2.0 * s - root(s)) / 2.0; }
    C U(C s) const { return -a - s + (a + b + 2.0 * s - root(s)) / 2.0; }
    C K(C s) const { return U(s); }
    C J(C s) const { return D(s); }

    C dpsi_da(C s) const {
        const C w = a + b + 2.0 * s;
        return (1.0 - 0.5 / root(s) * (2.0 * w - 4.0 * b)) / (2.0 * b);
    }
    C dpsi_db(C s) const {
        const C w = a + b + 2.0 * s;
        return (1.0 - 0.5 / root(s) * (2.0 * w - 4.0 * a)) / (2.0 * b) -
               (w - root(s)) / (2.0 * b * b);
    }
    C dxi_da(C s) const {
        const C w = a + b + 2.0 * s;
        return (1.0 - 0.5 / root(s) * (2.0 * w - 4.0 * b)) / (2.0 * a) -
               (w - root(s)) / (2.0 * a * a);
    }
    C dxi_db(C s) const {
        const C w = a + b + 2.0 * s;
        return (1.0 - 0.5 / root(s) * (2.0 * w - 4.0 * a)) / (2.0 * a);
    }
    C dD_da(C s) const {
        const C w = a + b + 2.0 * s;
        return (1.0 - 0.5 / root(s) * (2.0 * w - 4.0 * b)) / 2.0;
    }
    C dD_db(C s) const {
        const C w = a + b + 2.0 * s;
        return -1.0 + (1.0 - 0.5 / root(s) * (2.0 * w - 4.0 * a)) / 2.0;
    }
    C dK_da(C s) const {
        const C w = a + b + 2.0 * s;
        return -1.0 + (1.0 - 0.5 / root(s) * (2.0 * w - 4.0 * b)) / 2.0;
    }
    C dK_db(C s) const {
        const C w = a + b + 2.0 * s;
        return (1.0 - 0.5 / root(s) * (2.0 * w - 4.0 * a)) / 2.0;
    }

    /// d psi / ds; at s = 0 equals -2/(a-b) (minus the mean busy period).
    C dpsi_ds(C s) const {
        return (1.0 - (a + b + 2.0 * s) / root(s)) / b;
    }

    // stationary quantities
    double alpha() const { return b * (a - b) / (a + b); }
    double dalpha_da() const { return 2 * b * b / ((a + b) * (a + b)); }
    double dalpha_db() const {
        return (a * a - 2 * a * b - b * b) / ((a + b) * (a + b));
    }
    double p_minus() const { return (a - b) / (a + b); }
    double dp_da() const { return 2 * b / ((a + b) * (a + b)); }
    double dp_db() const { return -2 * a / ((a + b) * (a + b)); }
    double pi_plus(double x) const {
        return p_minus() * b * std::exp((b - a) * x);
    }
    double dpi_da(double x) const {
        return dp_da() * b * std::exp((b - a) * x) -
               p_minus() * b * x * std::exp((b - a) * x);
    }
    double dpi_db(double x) const {
        return dp_db() * b * std::exp((b - a) * x) +
               p_minus() * (1.0 + b * x) * std::exp((b - a) * x);
    }

    // scalar two-boundary kernels for a start at level x with boundaries
    // 0 and y >= x: G absorbs at 0, H at y, by row (up/down start)
    struct Passage {
        C Gp, Gm, Hp, Hm;
    };
    Passage passage(C s, double x, double y) const {
        const C EDx = std::exp(D(s) * x), EDy = std::exp(D(s) * y);
        const C EUyx = std::exp(U(s) * (y - x)), EUy = std::exp(U(s) * y);
        const C det = 1.0 - psi(s) * xi(s) * EDy * EUy;
        Passage out;
        out.Gp = (psi(s) * EDx - psi(s) * EDy * EUyx) / det;
        out.Gm = (EDx - psi(s) * EDy * xi(s) * EUyx) / det;
        out.Hp = (EUyx - xi(s) * EUy * psi(s) * EDx) / det;
        out.Hm = (xi(s) * EUyx - xi(s) * EUy * EDx) / det;
        return out;
    }

    // transform of the level density (up-phase and down-phase components)
    // for a start at level z in the down phase
    std::array<C, 2> ftilde(C s, double x, double z) const {
        const C base = ptilde(s, z) * b * std::exp(K(s) * x);
        C up = base, down = base * psi(s);
        const C Hxx = passage(s, x, x).Hm;
        if (x <= z) {
            const C v = std::exp(D(s) * (z - x)) / (1.0 - Hxx * psi(s));
            up += v * Hxx;
            down += v;
        } else {
            const C u = passage(s, z, z).Hm * passage(s, z, x).Hp /
                        (1.0 - psi(s) * Hxx);
            up += u;
            down += u * psi(s);
        }
        return {up, down};
    }

    // transient transform for a start at level z in the down phase
    C ptilde(C s, double z) const {
        return std::exp(D(s) * z) / (b + s - b * psi(s));
    }
    C dptilde_da(C s, double z) const {
        const C denom = b + s - b * psi(s);
        return std::exp(D(s) * z) * dD_da(s) * z / denom -
               std::exp(D(s) * z) / (denom * denom) * (-b * dpsi_da(s));
    }
    C dptilde_db(C s, double z) const {
        const C denom = b + s - b * psi(s);
        return std::exp(D(s) * z) * dD_db(s) * z / denom -
               std::exp(D(s) * z) / (denom * denom) *
                   (1.0 - psi(s) - b * dpsi_db(s));
    }
};

} // namespace sfm::twophase
