#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "heatlab/cubes.hpp"
#include "heatlab/derivatives.hpp"
#include "heatlab/dirichlet.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/linalg.hpp"
#include "heatlab/multipliers.hpp"
#include "heatlab/parallel.hpp"

namespace heatlab {

// ---------------------------------------------------------------------------
// report data
// ---------------------------------------------------------------------------

struct DecayRow {
    std::string family;
    int ell = 0;
    double p = 2.0;
    double t = 0.0;
    double norm = 0.0;
    double scaled_ratio = 0.0;  // t^{rate} * norm, rate fixed by the family
};

struct SlopeFit {
    std::string family;
    int ell = 0;
    double p = 2.0;
    double slope = 0.0;
    double stderr_ = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    int npoints = 0;
};

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ResidualEntry {
    std::string name;
    double value = 0.0;
    std::map<std::string, double> params;
};

struct DecayReport {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<DecayRow> rows;
    std::vector<SlopeFit> slopes;
    std::vector<Verdict> verdicts;
    std::vector<ResidualEntry> residuals;

    void set(const std::string& key, const std::string& value) {
        config.emplace_back(key, value);
    }
    void set(const std::string& key, double value) {
        std::ostringstream os;
        os.precision(17);
        os << value;
        config.emplace_back(key, os.str());
    }
    bool all_pass() const {
        for (const auto& v : verdicts)
            if (!v.pass) return false;
        return true;
    }
    void merge(const DecayReport& other) {
        config.insert(config.end(), other.config.begin(), other.config.end());
        rows.insert(rows.end(), other.rows.begin(), other.rows.end());
        slopes.insert(slopes.end(), other.slopes.begin(), other.slopes.end());
        verdicts.insert(verdicts.end(), other.verdicts.begin(), other.verdicts.end());
        residuals.insert(residuals.end(), other.residuals.begin(), other.residuals.end());
    }
};

// ---------------------------------------------------------------------------
// multiplier families and sweep grids
// ---------------------------------------------------------------------------

/// A one-parameter operator family f_t(A) with its expected decay exponent:
/// heat and fractional semigroups decay like t^{-ell/alpha} per derivative
/// order, resolvent powers like t^{-ell/2}.
struct DecayFamily {
    std::string name;    // heat | frac | resolvent
    double alpha = 2.0;  // heat behaves as alpha = 2 for rates and floors
    int M = 0;

    SpectralMultiplier at(double t) const {
        if (name == "heat") return heat_multiplier(t);
        if (name == "frac") return fractional_multiplier(t, alpha);
        if (name == "resolvent") return resolvent_multiplier(t, M);
        throw std::invalid_argument("DecayFamily: unknown family " + name);
    }
    double rate(int ell) const { return double(ell) / alpha; }
    std::string label() const {
        if (name == "frac") {
            std::ostringstream os;
            os << "frac_a" << alpha;
            return os.str();
        }
        if (name == "resolvent") return "resolvent_M" + std::to_string(M);
        return name;
    }
};

inline DecayFamily heat_family() { return {"heat", 2.0, 0}; }
inline DecayFamily frac_family(double alpha) { return {"frac", alpha, 0}; }
inline DecayFamily resolvent_family(int M) { return {"resolvent", 2.0, M}; }

/// Resolution floor for cube-free operator sweeps: t >= (4 h^2)^{alpha/2}.
/// Below ~h^2 (in heat scaling) the lattice cannot express the continuum
/// rate. Cube-based experiments use the stricter 16 h^2.
inline double sweep_floor(double h, double alpha) { return std::pow(4.0 * h * h, 0.5 * alpha); }
inline double cube_floor(double h) { return 16.0 * h * h; }

inline std::vector<double> log_grid(double lo, double hi, int count) {
    if (count < 2 || lo <= 0 || hi <= lo)
        throw std::invalid_argument("log_grid: need count >= 2 and 0 < lo < hi");
    std::vector<double> t(count);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i)
        t[i] = std::exp(a + (b - a) * i / double(count - 1));
    return t;
}

/// Small-t fitting window for slope extraction. The heat window is
/// [64 h^2, 0.02] with fallback lower edge 16 h^2 when the grid is too
/// coarse for the primary edge; fractional windows are placed by the same
/// spectral margins expressed in the alpha scaling, keeping the cut
/// frequency band t^{-2/alpha} well inside (lambda_1, lambda_max).
struct SlopeWindow {
    double lo = 0.0;
    double hi = 0.0;
    bool fallback = false;
};

inline SlopeWindow slope_window(const SpectralDecomposition& S, double alpha) {
    const double h = S.grid->h;
    SlopeWindow w;
    if (alpha == 2.0) {
        w.hi = S.grid->dim == 1 ? 0.01 : 0.02;
        w.lo = 64.0 * h * h;
        if (w.lo >= 0.9 * w.hi) {
            w.lo = 16.0 * h * h;
            w.fallback = true;
        }
    } else {
        w.hi = std::pow(3.0 * S.lambda_min(), -0.5 * alpha);
        w.lo = std::pow(32.0 / S.lambda_max(), 0.5 * alpha);
        if (w.lo >= 0.9 * w.hi) {
            w.lo = std::pow(8.0 / S.lambda_max(), 0.5 * alpha);
            w.fallback = true;
        }
    }
    if (w.lo >= w.hi) w.hi = 2.0 * w.lo;  // degenerate grid; keep the window usable
    return w;
}

/// Sweep t grid: a coarse log grid across the full resolvable range merged
/// with a dense log grid inside the slope window, so every window holds at
/// least `window_points` samples.
inline std::vector<double> sweep_t_grid(const SpectralDecomposition& S, double alpha,
                                        int coarse = 12, int window_points = 8,
                                        double t_max = 0.45) {
    const double lo = sweep_floor(S.grid->h, alpha);
    SlopeWindow w = slope_window(S, alpha);
    std::vector<double> t = log_grid(lo, t_max, coarse);
    if (w.hi > w.lo) {
        auto dense = log_grid(std::max(w.lo, lo), std::min(w.hi, t_max), window_points);
        t.insert(t.end(), dense.begin(), dense.end());
    }
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

// ---------------------------------------------------------------------------
// operator norm sweeps
// ---------------------------------------------------------------------------

struct SweepSpec {
    DecayFamily family;
    std::vector<int> ells;
    std::vector<double> ps;  // subset of {1, 2, inf}
    std::vector<double> t_grid;
    StencilFlavor flavor = StencilFlavor::BoundaryAware;
    std::string grid_tag;  // appended to the family token, e.g. "|n=32"
};

/// Measures ||grad^ell f_t(A)||_{p->p} over the t grid, where the ell-th
/// gradient is the worst multi-index of that order: p = 1 is the max column
/// sum, p = inf the max row sum, p = 2 the largest singular value (uniform
/// weights cancel in all three).
inline std::vector<DecayRow> operator_decay_sweep(const SpectralDecomposition& S,
                                                  const SweepSpec& spec, int workers = 0) {
    const Grid& grid = *S.grid;
    for (double p : spec.ps)
        if (p != 1.0 && p != 2.0 && !std::isinf(p))
            throw std::invalid_argument("operator_decay_sweep: p must be in {1, 2, inf}");
    for (int ell : spec.ells) {
        if (ell < 0 || ell > 4)
            throw std::invalid_argument("operator_decay_sweep: ell must be in 0..4");
        if (spec.family.name == "resolvent" && ell > 2 * spec.family.M)
            throw std::invalid_argument("operator_decay_sweep: ell > 2M outside hypothesis");
    }
    const double floor_t = sweep_floor(grid.h, spec.family.alpha);
    for (double t : spec.t_grid)
        if (t < floor_t * (1.0 - 1e-12))
            throw std::invalid_argument("operator_decay_sweep: t below resolution floor");

    // Stencil matrices per derivative order, shared across the sweep.
    std::vector<std::vector<SparseMatrix>> stencils(spec.ells.size());
    for (size_t e = 0; e < spec.ells.size(); ++e)
        for (const MultiIndex& g : multi_indices_of_order(grid.dim, spec.ells[e]))
            stencils[e].push_back(derivative_matrix(grid, g, spec.flavor));

    const int nt = static_cast<int>(spec.t_grid.size());
    const int ne = static_cast<int>(spec.ells.size());
    const int np = static_cast<int>(spec.ps.size());
    std::vector<DecayRow> rows(static_cast<size_t>(nt) * ne * np);
    const std::string family_token = spec.family.label() + spec.grid_tag;

    parallel_for(nt, [&](int it) {
        const double t = spec.t_grid[it];
        const Matrix F = multiplier_matrix(S, spec.family.at(t));
        for (int e = 0; e < ne; ++e) {
            const int ell = spec.ells[e];
            std::vector<double> norms(np, 0.0);
            if (ell == 0) {
                for (int ip = 0; ip < np; ++ip) norms[ip] = induced_norm(F, spec.ps[ip]);
            } else {
                for (const SparseMatrix& D : stencils[e]) {
                    const Matrix DF = D * F;
                    for (int ip = 0; ip < np; ++ip)
                        norms[ip] = std::max(norms[ip], induced_norm(DF, spec.ps[ip]));
                }
            }
            for (int ip = 0; ip < np; ++ip) {
                DecayRow& row = rows[(static_cast<size_t>(it) * ne + e) * np + ip];
                row.family = family_token;
                row.ell = ell;
                row.p = spec.ps[ip];
                row.t = t;
                row.norm = norms[ip];
                row.scaled_ratio = std::pow(t, spec.family.rate(ell)) * norms[ip];
            }
        }
    }, workers);
    return rows;
}

inline std::vector<const DecayRow*> select_rows(const std::vector<DecayRow>& rows,
                                                const std::string& family, int ell, double p) {
    std::vector<const DecayRow*> out;
    for (const auto& r : rows)
        if (r.family == family && r.ell == ell &&
            (r.p == p || (std::isinf(r.p) && std::isinf(p))))
            out.push_back(&r);
    return out;
}

/// Least-squares slope of log(norm) against log(t) inside [t_lo, t_hi].
inline SlopeFit slope_fit(const std::vector<const DecayRow*>& rows, double t_lo, double t_hi) {
    std::vector<double> xs, ys;
    for (const DecayRow* r : rows)
        if (r->t >= t_lo * (1 - 1e-12) && r->t <= t_hi * (1 + 1e-12) && r->norm > 0) {
            xs.push_back(std::log(r->t));
            ys.push_back(std::log(r->norm));
        }
    const int n = static_cast<int>(xs.size());
    if (n < 5) throw std::invalid_argument("slope_fit: degenerate window, need >= 5 points");
    double xbar = 0, ybar = 0;
    for (int i = 0; i < n; ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= n;
    ybar /= n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    if (sxx == 0) throw std::invalid_argument("slope_fit: degenerate window, zero t spread");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    double ss_res = 0;
    for (int i = 0; i < n; ++i) {
        double r = ys[i] - ybar - fit.slope * (xs[i] - xbar);
        ss_res += r * r;
    }
    fit.stderr_ = n > 2 ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
    fit.window_lo = t_lo;
    fit.window_hi = t_hi;
    fit.npoints = n;
    if (!rows.empty()) {
        fit.family = rows.front()->family;
        fit.ell = rows.front()->ell;
        fit.p = rows.front()->p;
    }
    return fit;
}

inline double sup_scaled_ratio(const std::vector<const DecayRow*>& rows) {
    double best = 0.0;
    for (const DecayRow* r : rows) best = std::max(best, r->scaled_ratio);
    return best;
}

inline std::string p_token(double p) {
    if (std::isinf(p)) return "inf";
    std::ostringstream os;
    os << p;
    return os.str();
}

// ---------------------------------------------------------------------------
// headline rate checks
// ---------------------------------------------------------------------------

struct RateCheckConfig {
    DomainKind kind = DomainKind::Rectangle;
    GridGeometry geometry;
    int dim = 2;
    std::vector<int> grids{32, 48};
    int ell_max = 3;
    std::vector<double> ps{1.0, inf_p};
    double t_max = 0.45;
    double slope_tol = 0.2;
    double slope_tol_high = 0.25;  // derivative order >= 3
    double stability_factor = 3.0;
    bool use_oracle = true;  // rectangles: analytic sine eigenbasis
    int workers = 0;
};

inline SpectralDecomposition decompose_domain(const RateCheckConfig& cfg, int n) {
    GridPtr g = build_grid(cfg.kind, n, cfg.geometry, cfg.dim);
    if (cfg.use_oracle && cfg.kind == DomainKind::Rectangle) return dst_oracle_rectangle(g);
    return eigendecompose(assemble_laplacian(*g), g);
}

namespace detail {

/// Shared engine for the heat and fractional rate checks: sweeps each grid,
/// fits slopes in the family window, and issues the two-part verdicts
/// (slope within tolerance, sup of scaled ratios stable across grids).
inline DecayReport rate_check(const RateCheckConfig& cfg, const DecayFamily& family,
                              const std::vector<int>& ells) {
    DecayReport rep;
    rep.set("family", family.label());
    rep.set("domain", to_string(cfg.kind));
    rep.set("dim", double(cfg.dim));
    rep.set("t_max", cfg.t_max);
    rep.set("slope_tol", cfg.slope_tol);
    rep.set("stability_factor", cfg.stability_factor);

    struct PerGrid {
        int n;
        std::string token;
        SlopeWindow window;
    };
    std::vector<PerGrid> per_grid;

    for (int n : cfg.grids) {
        SpectralDecomposition S = decompose_domain(cfg, n);
        rep.set("h[n=" + std::to_string(n) + "]", S.grid->h);
        SweepSpec spec;
        spec.family = family;
        spec.ells = ells;
        spec.ps = cfg.ps;
        spec.t_grid = sweep_t_grid(S, family.alpha, 12, 8, cfg.t_max);
        spec.grid_tag = "|n=" + std::to_string(n);
        auto rows = operator_decay_sweep(S, spec, cfg.workers);
        rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
        SlopeWindow w = slope_window(S, family.alpha);
        rep.set("window[n=" + std::to_string(n) + "]",
                std::to_string(w.lo) + ".." + std::to_string(w.hi) +
                    (w.fallback ? " (fallback)" : ""));
        per_grid.push_back({n, family.label() + "|n=" + std::to_string(n), w});
    }

    for (int ell : ells) {
        const double target = -family.rate(ell);
        const double tol = ell >= 3 ? cfg.slope_tol_high : cfg.slope_tol;
        for (double p : cfg.ps) {
            std::vector<double> sups;
            for (const auto& pg : per_grid) {
                auto rows = select_rows(rep.rows, pg.token, ell, p);
                sups.push_back(sup_scaled_ratio(rows));
                if (ell >= 1) {
                    SlopeFit fit = slope_fit(rows, pg.window.lo, pg.window.hi);
                    rep.slopes.push_back(fit);
                    std::ostringstream det;
                    det.precision(4);
                    det << "slope=" << fit.slope << " target=" << target << " tol=" << tol
                        << " pts=" << fit.npoints;
                    rep.verdicts.push_back({"slope[" + pg.token + ",ell=" +
                                                std::to_string(ell) + ",p=" + p_token(p) + "]",
                                            std::abs(fit.slope - target) <= tol, det.str()});
                }
            }
            if (sups.size() >= 2) {
                double lo = *std::min_element(sups.begin(), sups.end());
                double hi = *std::max_element(sups.begin(), sups.end());
                bool pass = lo > 0 && hi / lo <= cfg.stability_factor;
                std::ostringstream det;
                det.precision(4);
                det << "sup ratios ";
                for (double s : sups) det << s << " ";
                det << "spread=" << (lo > 0 ? hi / lo : std::nan(""));
                rep.verdicts.push_back({"stability[" + family.label() + ",ell=" +
                                            std::to_string(ell) + ",p=" + p_token(p) + "]",
                                        pass, det.str()});
            }
            if (ell == 0 && std::isinf(p)) {
                for (size_t gi = 0; gi < per_grid.size(); ++gi) {
                    bool pass = sups.size() > gi;
                    auto rows = select_rows(rep.rows, per_grid[gi].token, 0, p);
                    double sup = sup_scaled_ratio(rows);
                    pass = sup <= 1.0 + 1e-10;
                    std::ostringstream det;
                    det.precision(12);
                    det << "sup=" << sup << " bound=1+1e-10";
                    rep.verdicts.push_back(
                        {"substochastic[" + per_grid[gi].token + "]", pass, det.str()});
                }
            }
        }
    }
    return rep;
}

}  // namespace detail

/// Heat semigroup rate check: slopes of ||grad^ell e^{-tA}||_{p->p} against
/// -ell/2 in the small-t window, plus refinement stability of the scaled
/// ratios.
inline DecayReport theorem1_check(const RateCheckConfig& cfg) {
    std::vector<int> ells;
    for (int ell = 0; ell <= cfg.ell_max; ++ell) ells.push_back(ell);
    return detail::rate_check(cfg, heat_family(), ells);
}

/// Fractional semigroup rate check with rates -k/alpha.
inline DecayReport theorem2_check(const RateCheckConfig& cfg, double alpha, int k_max) {
    std::vector<int> ells;
    for (int k = 0; k <= k_max; ++k) ells.push_back(k);
    return detail::rate_check(cfg, frac_family(alpha), ells);
}

/// 1-D interval sanity run: before boundary influence the discrete heat
/// gradient reproduces the whole-line value t^{1/2} ||d/dx e^{tD}||_{1->1}
/// = pi^{-1/2}.
inline DecayReport one_d_gradient_sanity(int n = 256, double rel_tol = 0.15, int workers = 0) {
    DecayReport rep;
    GridPtr g = build_grid(DomainKind::Rectangle, n, {}, 1);
    SpectralDecomposition S = dst_oracle_rectangle(g);
    const double h = g->h;
    const double lo = 64.0 * h * h, hi = 0.01;
    SweepSpec spec;
    spec.family = heat_family();
    spec.ells = {1};
    spec.ps = {1.0};
    spec.t_grid = log_grid(lo, hi, 9);
    spec.grid_tag = "|d1n" + std::to_string(n);
    rep.rows = operator_decay_sweep(S, spec, workers);
    const double target = 1.0 / std::sqrt(std::numbers::pi);
    bool pass = true;
    double worst = 0.0;
    for (const auto& r : rep.rows) {
        double dev = std::abs(r.scaled_ratio - target) / target;
        worst = std::max(worst, dev);
        if (dev > rel_tol) pass = false;
    }
    std::ostringstream det;
    det.precision(4);
    det << "max rel deviation from pi^{-1/2}: " << worst << " tol " << rel_tol;
    rep.set("family", "heat 1d sanity");
    rep.set("n", double(n));
    rep.verdicts.push_back({"one_d_sanity[ell=1,p=1]", pass, det.str()});
    return rep;
}

/// Resolvent power rate check t^{ell/2} ||grad^ell R_{M,t}||_{2->2} for
/// ell <= 2M, plus the intermediate objects
/// grad^ell R_{m1,t} (2t d_j) R_{m2,t} with rate t^{-(ell-1)/2}.
inline DecayReport resolvent_decay_check(const RateCheckConfig& cfg, int M) {
    DecayReport rep;
    const int ell_cap = std::min(cfg.ell_max, 2 * M);
    std::vector<int> ells;
    for (int ell = 0; ell <= ell_cap; ++ell) ells.push_back(ell);
    DecayFamily family = resolvent_family(M);
    rep.set("family", family.label());
    rep.set("M", double(M));

    struct Sup {
        std::map<std::pair<int, std::string>, double> by_key;
    } sups;
    std::vector<std::string> tokens;

    for (int n : cfg.grids) {
        SpectralDecomposition S = decompose_domain(cfg, n);
        const Grid& grid = *S.grid;
        SweepSpec spec;
        spec.family = family;
        spec.ells = ells;
        spec.ps = {2.0};
        spec.t_grid = log_grid(sweep_floor(grid.h, 2.0), cfg.t_max, 10);
        spec.grid_tag = "|n=" + std::to_string(n);
        auto rows = operator_decay_sweep(S, spec, cfg.workers);
        rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
        tokens.push_back(family.label() + spec.grid_tag);

        // Intermediate objects of the resolvent commutator decomposition:
        // m1 = m2 = 1 covers the first split; rate is (ell-1)/2.
        const int m1 = 1, m2 = 1;
        SparseMatrix Dzero = first_derivative_matrix(grid, 0, StencilFlavor::ZeroExtension);
        std::vector<SparseMatrix> grads;
        const int mid_ell_cap = std::min(ell_cap, 2 * (m1 + m2) - 1);
        std::vector<std::vector<SparseMatrix>> stencils(mid_ell_cap + 1);
        for (int ell = 0; ell <= mid_ell_cap; ++ell)
            for (const MultiIndex& gm : multi_indices_of_order(grid.dim, ell))
                stencils[ell].push_back(derivative_matrix(grid, gm, StencilFlavor::BoundaryAware));
        const int nt = static_cast<int>(spec.t_grid.size());
        std::vector<std::vector<DecayRow>> mid_rows(nt);
        parallel_for(nt, [&](int it) {
            const double t = spec.t_grid[it];
            Matrix R1 = multiplier_matrix(S, resolvent_multiplier(t, m1));
            Matrix R2 = m2 == m1 ? R1 : multiplier_matrix(S, resolvent_multiplier(t, m2));
            Matrix core = R1 * ((2.0 * t) * (Dzero * R2));
            for (int ell = 0; ell <= mid_ell_cap; ++ell) {
                double norm = 0.0;
                if (ell == 0)
                    norm = induced_norm_2(core);
                else
                    for (const SparseMatrix& D : stencils[ell])
                        norm = std::max(norm, induced_norm_2(Matrix(D * core)));
                DecayRow row;
                row.family = "resmid_m1_" + std::to_string(m1) + "_m2_" + std::to_string(m2) +
                             spec.grid_tag;
                row.ell = ell;
                row.p = 2.0;
                row.t = t;
                row.norm = norm;
                row.scaled_ratio = std::pow(t, 0.5 * (ell - 1)) * norm;
                mid_rows[it].push_back(row);
            }
        }, cfg.workers);
        for (auto& chunk : mid_rows)
            rep.rows.insert(rep.rows.end(), chunk.begin(), chunk.end());

        for (int ell = 0; ell <= ell_cap; ++ell) {
            auto rows_sel = select_rows(rep.rows, family.label() + spec.grid_tag, ell, 2.0);
            sups.by_key[{ell, "main|n=" + std::to_string(n)}] = sup_scaled_ratio(rows_sel);
        }
        for (int ell = 0; ell <= mid_ell_cap; ++ell) {
            auto rows_sel = select_rows(
                rep.rows, "resmid_m1_1_m2_1|n=" + std::to_string(n), ell, 2.0);
            sups.by_key[{ell, "mid|n=" + std::to_string(n)}] = sup_scaled_ratio(rows_sel);
        }
    }

    auto stability_verdict = [&](const std::string& which, int ell, const std::string& label) {
        std::vector<double> values;
        for (int n : cfg.grids) {
            auto it = sups.by_key.find({ell, which + "|n=" + std::to_string(n)});
            if (it != sups.by_key.end()) values.push_back(it->second);
        }
        if (values.size() < 2) return;
        double lo = *std::min_element(values.begin(), values.end());
        double hi = *std::max_element(values.begin(), values.end());
        std::ostringstream det;
        det.precision(4);
        det << "sup ratios ";
        for (double v : values) det << v << " ";
        det << "spread=" << (lo > 0 ? hi / lo : std::nan(""));
        rep.verdicts.push_back(
            {label + "[ell=" + std::to_string(ell) + "]",
             lo > 0 && hi / lo <= cfg.stability_factor, det.str()});
    };
    for (int ell = 0; ell <= ell_cap; ++ell)
        stability_verdict("main", ell, "resolvent_stability");
    for (int ell = 0; ell <= std::min(ell_cap, 3); ++ell)
        stability_verdict("mid", ell, "resolvent_mid_stability");
    return rep;
}

// ---------------------------------------------------------------------------
// N_ell supremum report
// ---------------------------------------------------------------------------

/// sup over the t grid of ||N_ell[u](t)||_inf / ||u0||_inf for the heat
/// trajectory u(t) = e^{-tA} u0.
inline double n_ell_sup_ratio(const SpectralDecomposition& S, const GridFunction& u0, int ell,
                              const std::vector<double>& t_grid,
                              StencilFlavor flavor = StencilFlavor::BoundaryAware,
                              std::vector<DecayRow>* rows_out = nullptr) {
    if (ell < 0 || ell > 4) throw std::invalid_argument("n_ell_sup_ratio: ell must be in 0..4");
    const double u0_inf = lp_norm(u0, inf_p);
    if (u0_inf == 0) throw std::invalid_argument("n_ell_sup_ratio: u0 is zero");
    double sup = 0.0;
    for (double t : t_grid) {
        GridFunction ut = apply_multiplier(S, heat_multiplier(t), u0);
        double ratio = lp_norm(n_ell(ut, t, ell, flavor), inf_p) / u0_inf;
        sup = std::max(sup, ratio);
        if (rows_out)
            rows_out->push_back({"nell_l" + std::to_string(ell), ell, inf_p, t, ratio, ratio});
    }
    return sup;
}

struct NellConfig {
    std::vector<int> grids{32, 48};
    int ell_max = 3;
    int placements = 5;
    double radius = 0.2;
    int nt = 16;
    double stability_factor = 3.0;
};

/// Five-bump stability report for the N_ell supremum on the unit square.
inline DecayReport n_ell_report(const NellConfig& cfg) {
    DecayReport rep;
    rep.set("experiment", "n_ell");
    rep.set("placements", double(cfg.placements));
    // Bump centers: domain center plus four diagonal offsets.
    std::vector<std::array<double, 2>> centers = {{0.5, 0.5},
                                                  {0.35, 0.35},
                                                  {0.65, 0.35},
                                                  {0.35, 0.65},
                                                  {0.62, 0.62}};
    centers.resize(std::min<size_t>(cfg.placements, centers.size()));

    // ratios[ell][placement][grid]
    std::vector<std::vector<std::vector<double>>> ratios(
        cfg.ell_max + 1,
        std::vector<std::vector<double>>(centers.size()));

    for (int n : cfg.grids) {
        GridPtr g = build_grid(DomainKind::Rectangle, n, {}, 2);
        SpectralDecomposition S = dst_oracle_rectangle(g);
        auto t_grid = log_grid(cube_floor(g->h), 0.9, cfg.nt);
        for (size_t c = 0; c < centers.size(); ++c) {
            GridFunction u0 = bump_initial_data(g, centers[c], cfg.radius);
            for (int ell = 0; ell <= cfg.ell_max; ++ell) {
                std::vector<DecayRow> rows;
                double sup = n_ell_sup_ratio(S, u0, ell, t_grid, StencilFlavor::BoundaryAware,
                                             &rows);
                for (auto& r : rows) r.family += "|c" + std::to_string(c) + "|n=" + std::to_string(n);
                rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
                ratios[ell][c].push_back(sup);
                if (ell == 0) {
                    std::ostringstream det;
                    det.precision(12);
                    det << "sup=" << sup;
                    rep.verdicts.push_back({"nell_max_principle[c" + std::to_string(c) +
                                                ",n=" + std::to_string(n) + "]",
                                            sup <= 1.0 + 1e-10, det.str()});
                }
            }
        }
    }

    for (int ell = 0; ell <= cfg.ell_max; ++ell) {
        // across refinement, per placement
        for (size_t c = 0; c < centers.size(); ++c) {
            const auto& v = ratios[ell][c];
            if (v.size() < 2) continue;
            double lo = *std::min_element(v.begin(), v.end());
            double hi = *std::max_element(v.begin(), v.end());
            std::ostringstream det;
            det.precision(4);
            det << "ratios ";
            for (double x : v) det << x << " ";
            rep.verdicts.push_back({"nell_refinement[ell=" + std::to_string(ell) + ",c" +
                                        std::to_string(c) + "]",
                                    lo > 0 && hi / lo <= cfg.stability_factor, det.str()});
        }
        // across placements, per grid
        for (size_t gi = 0; gi < cfg.grids.size(); ++gi) {
            double lo = inf_p, hi = 0.0;
            for (size_t c = 0; c < centers.size(); ++c) {
                if (ratios[ell][c].size() <= gi) continue;
                lo = std::min(lo, ratios[ell][c][gi]);
                hi = std::max(hi, ratios[ell][c][gi]);
            }
            std::ostringstream det;
            det.precision(4);
            det << "min=" << lo << " max=" << hi;
            rep.verdicts.push_back({"nell_placements[ell=" + std::to_string(ell) +
                                        ",n=" + std::to_string(cfg.grids[gi]) + "]",
                                    lo > 0 && hi / lo <= cfg.stability_factor, det.str()});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// dyadic machinery
// ---------------------------------------------------------------------------

/// I(t) = sum_j (t^{1/alpha} 2^j)^k exp(-c t 2^{alpha j}) over j in
/// [j_lo, j_hi]. Rejects k = 0 (the sum diverges as j -> -inf) and ranges
/// whose estimated tails exceed 1e-14 of the sum.
inline double i_function(double t, int k, double alpha, double c, int j_lo, int j_hi) {
    if (k < 1) throw std::invalid_argument("i_function: k must be >= 1");
    if (c <= 0 || t <= 0 || alpha <= 0)
        throw std::invalid_argument("i_function: need t, alpha, c > 0");
    if (j_hi < j_lo) throw std::invalid_argument("i_function: empty j range");
    auto term = [&](double j) {
        return std::pow(std::pow(t, 1.0 / alpha) * std::exp2(j), k) *
               std::exp(-c * t * std::pow(2.0, alpha * j));
    };
    double sum = 0.0;
    for (int j = j_lo; j <= j_hi; ++j) sum += term(j);
    // Lower tail is geometric with ratio 2^{-k} <= 1/2; upper tail decays
    // double-exponentially, so the first omitted terms bound both tails.
    double tail = 2.0 * (term(j_lo - 1) + term(j_hi + 1));
    if (!(tail <= 1e-14 * sum))
        throw std::invalid_argument("i_function: insufficient j_range for tail tolerance");
    return sum;
}

/// Automatic symmetric widening of the j range until the tails pass.
inline double i_function_auto(double t, int k, double alpha, double c) {
    int center = static_cast<int>(std::lround(-std::log2(t) / alpha));
    for (int width = 8; width <= 4096; width *= 2) {
        try {
            return i_function(t, k, alpha, c, center - width, center + width);
        } catch (const std::invalid_argument&) {
        }
    }
    throw std::runtime_error("i_function_auto: tails did not converge");
}

/// max over s in [1, 2^alpha] of I(s), sampled on a fine grid; by the
/// scaling identity this bounds I on all of (0, inf).
inline double i_function_period_max(int k, double alpha, double c, int samples = 129) {
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
        double s = 1.0 + (std::pow(2.0, alpha) - 1.0) * i / double(samples - 1);
        best = std::max(best, i_function_auto(s, k, alpha, c));
    }
    return best;
}

struct DyadicChainRow {
    int j = 0;
    bool interior = false;
    bool resolvable = false;   // 2^{-2j} within the heat resolution band
    bool has_support = false;  // some eigenvalue lies in the block support
    double factor1 = 0.0;      // ||grad^k e^{-2^{-2j} A}||_{p->p}
    double factor2 = 0.0;      // ||e^{2^{-2j} A} e^{-t A^{alpha/2}} phi_j(sqrt A)||_{p->p}
    double c1_scaled = 0.0;    // factor1 / 2^{jk}
    double p2_bound = 0.0;     // e^4 exp(-t 2^{alpha (j-1)}), the exact p = 2 bound
    bool p2_ok = true;
};

struct DyadicChainResult {
    std::vector<DyadicChainRow> rows;
    double lhs_norm = 0.0;      // ||grad^k e^{-t A^{alpha/2}}||_{p->p}
    double sum_products = 0.0;  // sum_j factor1 * factor2
    bool reassembly_ok = false;
    double i_max = 0.0;           // max_{[1, 2^alpha]} I with c = 2^{-alpha}
    double final_constant = 0.0;  // lhs * t^{k/alpha} / i_max
};

/// Per-block measurement of the dyadic chain: the derivative factor obeys
/// ||grad^k e^{-2^{-2j}A}|| <= C 2^{jk} and for p = 2 the block factor obeys
/// the exact bound e^4 exp(-t 2^{alpha (j-1)}) by scalar maximization over
/// the block support.
inline DyadicChainResult dyadic_chain_check(const SpectralDecomposition& S, double t, int k,
                                            double alpha, double p, int workers = 0) {
    if (k < 0 || k > 4) throw std::invalid_argument("dyadic_chain_check: k must be in 0..4");
    const Grid& grid = *S.grid;
    DyadicPartition part = dyadic_partition(S.lambda_min(), S.lambda_max());
    DyadicChainResult out;

    std::vector<SparseMatrix> stencils;
    for (const MultiIndex& g : multi_indices_of_order(grid.dim, k))
        stencils.push_back(derivative_matrix(grid, g, StencilFlavor::BoundaryAware));
    auto grad_norm = [&](const Matrix& F) {
        double best = 0.0;
        if (k == 0) return induced_norm(F, p);
        for (const auto& D : stencils) best = std::max(best, induced_norm(Matrix(D * F), p));
        return best;
    };

    const int nj = part.j_max - part.j_min + 1;
    out.rows.resize(nj);
    parallel_for(nj, [&](int idx) {
        const int j = part.j_min + idx;
        DyadicChainRow row;
        row.j = j;
        row.interior = part.interior(j);
        const double s_j = std::exp2(-2.0 * j);
        row.resolvable = s_j >= sweep_floor(grid.h, 2.0) && s_j <= 0.25;

        SpectralMultiplier phi_j = part.block_multiplier(j);
        double support_mass = 0.0;
        for (int i = 0; i < S.size(); ++i) support_mass = std::max(support_mass, phi_j(S.lambda[i]));
        row.has_support = support_mass > 1e-14;

        row.factor1 = grad_norm(heat_semigroup(S, s_j));
        row.c1_scaled = row.factor1 / std::exp2(double(j) * k);

        SpectralMultiplier block = {"chain_block",
                                    {{"j", double(j)}, {"t", t}, {"alpha", alpha}},
                                    [phi_j, s_j, t, alpha](double lam) {
                                        double phi = phi_j(lam);
                                        if (phi == 0.0) return 0.0;
                                        return std::exp(s_j * lam -
                                                        t * std::pow(std::max(lam, 0.0),
                                                                     0.5 * alpha)) *
                                               phi;
                                    }};
        if (p == 2.0) {
            double best = 0.0;
            for (int i = 0; i < S.size(); ++i) best = std::max(best, std::abs(block(S.lambda[i])));
            row.factor2 = best;
        } else {
            row.factor2 = induced_norm(multiplier_matrix(S, block), p);
        }
        row.p2_bound = std::exp(4.0) * std::exp(-t * std::pow(2.0, alpha * (j - 1)));
        if (row.interior && p == 2.0)
            row.p2_ok = row.factor2 <= row.p2_bound * (1.0 + 1e-12);
        out.rows[idx] = row;
    }, workers);

    out.lhs_norm = grad_norm(fractional_semigroup(S, t, alpha));
    for (const auto& row : out.rows) out.sum_products += row.factor1 * row.factor2;
    out.reassembly_ok = out.lhs_norm <= out.sum_products * (1.0 + 1e-9);
    if (k >= 1) {
        out.i_max = i_function_period_max(k, alpha, std::pow(2.0, -alpha));
        out.final_constant = out.lhs_norm * std::pow(t, double(k) / alpha) / out.i_max;
    }
    return out;
}

// ---------------------------------------------------------------------------
// weighted operator norm sweep (cube machinery)
// ---------------------------------------------------------------------------

struct WeightedBoundConfig {
    std::vector<int> grids{32, 48};
    int M = 2;
    int alpha_weight = 1;
    std::vector<int> ells{1, 2};
    std::vector<double> taus{0.0, 1.0, 4.0};
    int nt = 5;
    double t_max = 0.25;
    double stability_factor = 3.0;
    int workers = 0;
};

/// Measures ||| grad^ell R_{M,t} e^{i tau R_{M,t}} |||_alpha over cubes and
/// reports C(t, tau, ell) = value / ((1 + |tau|^alpha) t^{(alpha - ell)/2});
/// the verdict asks the constant to be stable in t for each (tau, ell).
inline DecayReport weighted_bound_sweep(const WeightedBoundConfig& cfg) {
    DecayReport rep;
    rep.set("experiment", "weighted_bound");
    rep.set("M", double(cfg.M));
    rep.set("alpha_weight", double(cfg.alpha_weight));

    for (int n : cfg.grids) {
        GridPtr g = build_grid(DomainKind::Rectangle, n, {}, 2);
        SpectralDecomposition S = dst_oracle_rectangle(g);
        const double h = g->h;
        auto t_grid = log_grid(cube_floor(h), cfg.t_max, cfg.nt);

        std::vector<std::vector<SparseMatrix>> stencils;
        for (int ell : cfg.ells) {
            std::vector<SparseMatrix> per_ell;
            for (const MultiIndex& gm : multi_indices_of_order(2, ell))
                per_ell.push_back(derivative_matrix(*g, gm, StencilFlavor::BoundaryAware));
            stencils.push_back(per_ell);
        }

        struct Cell {
            double t, tau;
            int ell;
            double value, constant;
        };
        std::vector<Cell> cells(t_grid.size() * cfg.taus.size() * cfg.ells.size());
        const int nt = static_cast<int>(t_grid.size());
        parallel_for(nt, [&](int it) {
            const double t = t_grid[it];
            CubeDecomposition cubes = cube_partition(g, t);
            for (size_t itau = 0; itau < cfg.taus.size(); ++itau) {
                const double tau = cfg.taus[itau];
                SpectralMultiplier r = resolvent_multiplier(t, cfg.M);
                CVector diag(S.size());
                for (int i = 0; i < S.size(); ++i) {
                    double rv = r(S.lambda[i]);
                    diag[i] = rv * std::exp(std::complex<double>(0.0, tau * rv));
                }
                CMatrix T0 = S.modes.cast<std::complex<double>>() * diag.asDiagonal() *
                             S.modes.transpose().cast<std::complex<double>>();
                for (size_t ie = 0; ie < cfg.ells.size(); ++ie) {
                    const int ell = cfg.ells[ie];
                    double best = 0.0;
                    for (const auto& D : stencils[ie]) {
                        CMatrix DT = D.cast<std::complex<double>>() * T0;
                        best = std::max(best,
                                        weighted_operator_norm(DT, cfg.alpha_weight, cubes));
                    }
                    double denom = (1.0 + std::pow(std::abs(tau), double(cfg.alpha_weight))) *
                                   std::pow(t, 0.5 * (cfg.alpha_weight - ell));
                    cells[(it * cfg.taus.size() + itau) * cfg.ells.size() + ie] =
                        {t, tau, ell, best, best / denom};
                }
            }
        }, cfg.workers);

        for (const auto& cell : cells) {
            ResidualEntry e;
            e.name = "weighted_bound_C";
            e.value = cell.constant;
            e.params = {{"n", double(n)}, {"t", cell.t}, {"tau", cell.tau},
                        {"ell", double(cell.ell)}, {"value", cell.value}};
            rep.residuals.push_back(e);
        }
        for (double tau : cfg.taus)
            for (int ell : cfg.ells) {
                double lo = inf_p, hi = 0.0;
                for (const auto& cell : cells)
                    if (cell.tau == tau && cell.ell == ell) {
                        lo = std::min(lo, cell.constant);
                        hi = std::max(hi, cell.constant);
                    }
                std::ostringstream det;
                det.precision(4);
                det << "C range [" << lo << ", " << hi << "]";
                std::ostringstream nm;
                nm << "weighted_bound[n=" << n << ",tau=" << tau << ",ell=" << ell << "]";
                rep.verdicts.push_back(
                    {nm.str(), lo > 0 && hi / lo <= cfg.stability_factor, det.str()});
            }
    }
    return rep;
}

}  // namespace heatlab
