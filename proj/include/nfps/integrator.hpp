// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "nfps/camera.hpp"
#include "nfps/geometry.hpp"
#include "nfps/maps.hpp"
#include "nfps/parallel.hpp"

namespace nfps {

/// Discrete gradient field of U = ln(depth): grad U = (p, q) on the unit
/// image domain with grid step h. p and q are resolution-normalized, so
/// h * p is the log-depth increment across one pixel.
struct GradientField {
    Grid<double> p;
    Grid<double> q;
    Mask mask;
    double h = 0.0;

    int height() const { return mask.height(); }
    int width() const { return mask.width(); }
};

/// Perspective correction: with pixel coordinates re-centered at the
/// principal point, p = -N1 / (u N1 + v N2 + f N3) per pixel step (and the
/// analogous expression for q), rescaled by 1/h. Grazing pixels, where the
/// denominator vanishes, are invalidated.
inline GradientField perspective_pq(const NormalMap& normals, const CameraIntrinsics& camera) {
    camera.validate();
    if (!normals.data.same_size(camera.height, camera.width))
        throw DimensionError("normal map does not match camera size");
    const int h = normals.height();
    const int w = normals.width();
    GradientField grad;
    grad.p = Grid<double>(h, w, 0.0);
    grad.q = Grid<double>(h, w, 0.0);
    grad.mask = Mask(h, w, 0);
    grad.h = 1.0 / std::max(h, w);
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            if (!normals.mask(v, u)) continue;
            const Eigen::Vector3d& n = normals.data(v, u);
            const double uc = u - camera.cx;
            const double vc = v - camera.cy;
            const double den_u = uc * n.x() + vc * (camera.fx / camera.fy) * n.y() +
                                 camera.fx * n.z();
            const double den_v = uc * (camera.fy / camera.fx) * n.x() + vc * n.y() +
                                 camera.fy * n.z();
            if (std::abs(den_u) < 1e-9 || std::abs(den_v) < 1e-9) continue;
            grad.p(v, u) = -n.x() / den_u / grad.h;
            grad.q(v, u) = -n.y() / den_v / grad.h;
            grad.mask(v, u) = 1;
        }
    }
    return grad;
}

struct IntegratorOptions {
    double rel_tol = 1e-9;
    int max_iterations = 10000;
    /// Optional robustness to depth discontinuities: adjacencies whose
    /// log-depth step exceeds weight_cap * h get their least-squares weight
    /// reduced quadratically. Off by default.
    bool discontinuity_weighting = false;
    double weight_cap = 10.0;
    int threads = 1;
};

struct IntegrationDiagnostics {
    int cg_iterations = 0;             // summed over connected components
    double cg_relative_residual = 0.0; // worst component
    double ls_residual = 0.0;          // ||grad mismatch||_2 over all adjacencies
    int components = 0;
};

namespace detail {

struct Adjacency {
    int a = 0;  // compact index of the lower pixel
    int b = 0;  // compact index of the higher pixel
    double g = 0.0;
    double w = 1.0;
};

// Block size for deterministic reductions: partial sums per fixed block are
// combined in block order, so results do not depend on the thread count.
constexpr int kReduceBlock = 4096;

inline double dot(const std::vector<double>& x, const std::vector<double>& y, int threads) {
    const int n = static_cast<int>(x.size());
    const int blocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> partial(blocks, 0.0);
    parallel_for(0, blocks, threads, [&](int b) {
        const int lo = b * kReduceBlock;
        const int hi = std::min(n, lo + kReduceBlock);
        double s = 0.0;
        for (int i = lo; i < hi; ++i) s += x[i] * y[i];
        partial[b] = s;
    });
    double s = 0.0;
    for (double v : partial) s += v;
    return s;
}

struct PoissonSystem {
    int n = 0;
    std::vector<int> row_start;
    std::vector<int> nbr;
    std::vector<double> nbr_w;
    std::vector<double> diag;
    std::vector<double> rhs;

    void apply(const std::vector<double>& x, std::vector<double>& y, int threads) const {
        parallel_for(0, n, threads, [&](int i) {
            double s = diag[i] * x[i];
            for (int k = row_start[i]; k < row_start[i + 1]; ++k)
                s -= nbr_w[k] * x[nbr[k]];
            y[i] = s;
        });
    }
};

struct CgOutcome {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

// Jacobi-preconditioned conjugate gradient on the (singular, consistent)
// normal equations. The constant null space rides along untouched; the
// gauge is fixed by the caller.
inline CgOutcome conjugate_gradient(const PoissonSystem& sys, std::vector<double>& x,
                                    const IntegratorOptions& opts) {
    const int n = sys.n;
    const int threads = opts.threads;
    CgOutcome out;
    const double b_norm = std::sqrt(dot(sys.rhs, sys.rhs, threads));
    if (b_norm == 0.0) {
        out.converged = true;
        return out;
    }
    std::vector<double> r(n), z(n), p(n), ap(n);
    sys.apply(x, ap, threads);
    parallel_for(0, n, threads, [&](int i) { r[i] = sys.rhs[i] - ap[i]; });
    parallel_for(0, n, threads,
                 [&](int i) { z[i] = sys.diag[i] > 0.0 ? r[i] / sys.diag[i] : r[i]; });
    p = z;
    double rho = dot(r, z, threads);
    double res = std::sqrt(dot(r, r, threads));
    const double target = opts.rel_tol * b_norm;
    if (res <= target) {
        out.converged = true;
        out.relative_residual = res / b_norm;
        return out;
    }
    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        sys.apply(p, ap, threads);
        const double pap = dot(p, ap, threads);
        if (!(pap > 0.0)) break;  // numerically exhausted search space
        const double alpha = rho / pap;
        parallel_for(0, n, threads, [&](int i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        });
        res = std::sqrt(dot(r, r, threads));
        out.iterations = iter;
        if (res <= target) {
            out.converged = true;
            break;
        }
        parallel_for(0, n, threads,
                     [&](int i) { z[i] = sys.diag[i] > 0.0 ? r[i] / sys.diag[i] : r[i]; });
        const double rho_next = dot(r, z, threads);
        const double beta = rho_next / rho;
        rho = rho_next;
        parallel_for(0, n, threads, [&](int i) { p[i] = z[i] + beta * p[i]; });
    }
    out.relative_residual = res / b_norm;
    return out;
}

// Shared solve for integrate / integrate_coarse_to_fine: least squares on
// U(next) - U(cur) = g over all valid 4-neighbor adjacencies, one CG per
// connected component. base, if given, turns the system into the residual
// form (g := g - (base(next) - base(cur))) and is added back afterward.
inline Grid<double> solve_log_depth(const GradientField& grad,
                                    const Grid<double>* base,
                                    const IntegratorOptions& opts,
                                    IntegrationDiagnostics& diag,
                                    std::vector<std::vector<int>>& comp_pixels,
                                    Grid<int>& compact) {
    const int h = grad.height();
    const int w = grad.width();
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            if (grad.mask(v, u) &&
                (!std::isfinite(grad.p(v, u)) || !std::isfinite(grad.q(v, u))))
                throw DegenerateInputError("gradient field has non-finite values");

    // Compact indexing in row-major order.
    compact = Grid<int>(h, w, -1);
    std::vector<int> pix_u, pix_v;
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            if (grad.mask(v, u)) {
                compact(v, u) = static_cast<int>(pix_u.size());
                pix_u.push_back(u);
                pix_v.push_back(v);
            }
    const int total = static_cast<int>(pix_u.size());
    if (total == 0) throw DegenerateInputError("gradient field mask is empty");

    // Adjacencies with midpoint-averaged gradient samples.
    std::vector<Adjacency> edges;
    edges.reserve(static_cast<size_t>(total) * 2);
    auto edge_weight = [&](double g) {
        if (!opts.discontinuity_weighting) return 1.0;
        const double cap = opts.weight_cap * grad.h;
        const double m = std::abs(g);
        return m <= cap ? 1.0 : (cap / m) * (cap / m);
    };
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            if (!grad.mask(v, u)) continue;
            if (u + 1 < w && grad.mask(v, u + 1)) {
                double g = grad.h * 0.5 * (grad.p(v, u) + grad.p(v, u + 1));
                if (base) g -= (*base)(v, u + 1) - (*base)(v, u);
                edges.push_back({compact(v, u), compact(v, u + 1), g, edge_weight(g)});
            }
            if (v + 1 < h && grad.mask(v + 1, u)) {
                double g = grad.h * 0.5 * (grad.q(v, u) + grad.q(v + 1, u));
                if (base) g -= (*base)(v + 1, u) - (*base)(v, u);
                edges.push_back({compact(v, u), compact(v + 1, u), g, edge_weight(g)});
            }
        }
    }

    // Connected components over the adjacency graph (iterative DFS).
    std::vector<int> label(total, -1);
    comp_pixels.clear();
    {
        std::vector<int> stack;
        for (int seed = 0; seed < total; ++seed) {
            if (label[seed] >= 0) continue;
            const int c = static_cast<int>(comp_pixels.size());
            comp_pixels.emplace_back();
            stack.push_back(seed);
            label[seed] = c;
            while (!stack.empty()) {
                const int i = stack.back();
                stack.pop_back();
                comp_pixels[c].push_back(i);
                const int u = pix_u[i];
                const int v = pix_v[i];
                const int nbrs[4][2] = {{v, u - 1}, {v, u + 1}, {v - 1, u}, {v + 1, u}};
                for (const auto& nb : nbrs) {
                    if (nb[0] < 0 || nb[0] >= h || nb[1] < 0 || nb[1] >= w) continue;
                    const int j = compact(nb[0], nb[1]);
                    if (j >= 0 && label[j] < 0) {
                        label[j] = c;
                        stack.push_back(j);
                    }
                }
            }
        }
    }
    const int num_components = static_cast<int>(comp_pixels.size());
    diag.components = num_components;

    std::vector<std::vector<Adjacency>> comp_edges(num_components);
    for (const auto& e : edges) comp_edges[label[e.a]].push_back(e);

    // Local index within each component; components are disjoint, so one
    // array serves them all.
    std::vector<int> local(total, -1);
    for (const auto& pixels : comp_pixels)
        for (size_t i = 0; i < pixels.size(); ++i) local[pixels[i]] = static_cast<int>(i);

    std::vector<double> solution(total, 0.0);
    diag.cg_iterations = 0;
    diag.cg_relative_residual = 0.0;
    for (int c = 0; c < num_components; ++c) {
        const auto& pixels = comp_pixels[c];
        const auto& ce = comp_edges[c];
        const int n = static_cast<int>(pixels.size());
        if (n < 2 || ce.empty()) continue;  // isolated pixel: pure gauge

        PoissonSystem sys;
        sys.n = n;
        std::vector<int> degree(n, 0);
        for (const auto& e : ce) {
            ++degree[local[e.a]];
            ++degree[local[e.b]];
        }
        sys.row_start.assign(n + 1, 0);
        for (int i = 0; i < n; ++i) sys.row_start[i + 1] = sys.row_start[i] + degree[i];
        sys.nbr.resize(sys.row_start[n]);
        sys.nbr_w.resize(sys.row_start[n]);
        std::vector<int> cursor(sys.row_start.begin(), sys.row_start.end() - 1);
        sys.diag.assign(n, 0.0);
        sys.rhs.assign(n, 0.0);
        for (const auto& e : ce) {
            const int a = local[e.a];
            const int b = local[e.b];
            sys.nbr[cursor[a]] = b;
            sys.nbr_w[cursor[a]++] = e.w;
            sys.nbr[cursor[b]] = a;
            sys.nbr_w[cursor[b]++] = e.w;
            sys.diag[a] += e.w;
            sys.diag[b] += e.w;
            sys.rhs[a] -= e.w * e.g;
            sys.rhs[b] += e.w * e.g;
        }

        std::vector<double> x(n, 0.0);
        const CgOutcome cg = conjugate_gradient(sys, x, opts);
        diag.cg_iterations += cg.iterations;
        diag.cg_relative_residual = std::max(diag.cg_relative_residual, cg.relative_residual);
        if (!cg.converged)
            throw ConvergenceError("normal integration CG did not converge (relative "
                                   "residual " +
                                       std::to_string(cg.relative_residual) + ")",
                                   cg.relative_residual);
        for (int i = 0; i < n; ++i) solution[pixels[i]] = x[i];
    }

    Grid<double> log_depth(h, w, 0.0);
    for (int i = 0; i < total; ++i) {
        const double b = base ? (*base)(pix_v[i], pix_u[i]) : 0.0;
        log_depth(pix_v[i], pix_u[i]) = b + solution[i];
    }

    // Least-squares mismatch of the solution against the requested field,
    // unweighted: the curl part of the input shows up here.
    double res2 = 0.0;
    for (const auto& e : edges) {
        const double du = solution[e.b] - solution[e.a];
        double g = e.g;
        if (base) {
            // edges carried the residual g; compare full solution to full g
            g += (*base)(pix_v[e.b], pix_u[e.b]) - (*base)(pix_v[e.a], pix_u[e.a]);
            const double full = log_depth(pix_v[e.b], pix_u[e.b]) -
                                log_depth(pix_v[e.a], pix_u[e.a]);
            res2 += (full - g) * (full - g);
            continue;
        }
        res2 += (du - g) * (du - g);
    }
    diag.ls_residual = std::sqrt(res2);
    return log_depth;
}

// Per-component zero-mean in log depth, then one global shift so the mean
// depth over the union of components matches mean_depth.
inline DepthMap apply_gauge(Grid<double> log_depth, const Mask& mask, double mean_depth,
                            const std::vector<std::vector<int>>& comp_pixels,
                            const Grid<int>& compact) {
    const int h = mask.height();
    const int w = mask.width();
    std::vector<double> flat(static_cast<size_t>(h) * w, 0.0);
    std::vector<double> comp_mean(comp_pixels.size(), 0.0);
    std::vector<int> comp_of(static_cast<size_t>(h) * w, -1);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            if (mask(v, u)) flat[compact(v, u)] = log_depth(v, u);
    for (size_t c = 0; c < comp_pixels.size(); ++c) {
        double s = 0.0;
        for (int i : comp_pixels[c]) s += flat[i];
        comp_mean[c] = s / static_cast<double>(comp_pixels[c].size());
        for (int i : comp_pixels[c]) comp_of[i] = static_cast<int>(c);
    }
    double exp_sum = 0.0;
    size_t count = 0;
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            if (mask(v, u)) {
                log_depth(v, u) -= comp_mean[comp_of[compact(v, u)]];
                exp_sum += std::exp(log_depth(v, u));
                ++count;
            }
    const double shift = std::log(mean_depth * static_cast<double>(count) / exp_sum);
    DepthMap out(h, w);
    out.mask = mask;
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
            if (mask(v, u)) out.data(v, u) = std::exp(log_depth(v, u) + shift);
    return out;
}

}  // namespace detail

/// Least-squares normal integration on the masked irregular domain:
/// U(next) - U(cur) = h * (midpoint-averaged p or q) over every valid
/// adjacency, solved per connected component by Jacobi-preconditioned CG,
/// gauge-fixed so the mean depth over the mask equals mean_depth.
inline DepthMap integrate(const GradientField& grad, double mean_depth,
                          const IntegratorOptions& opts = {},
                          IntegrationDiagnostics* diagnostics = nullptr) {
    if (!(mean_depth > 0.0)) throw DegenerateInputError("mean depth must be positive");
    if (!(grad.h > 0.0)) throw DegenerateInputError("gradient field step must be positive");
    IntegrationDiagnostics diag;
    std::vector<std::vector<int>> comp_pixels;
    Grid<int> compact;
    Grid<double> log_depth =
        detail::solve_log_depth(grad, nullptr, opts, diag, comp_pixels, compact);
    if (diagnostics) *diagnostics = diag;
    return detail::apply_gauge(std::move(log_depth), grad.mask, mean_depth, comp_pixels,
                               compact);
}

/// Residual form of integrate: starts from U0 = ln(upsample2(coarse_depth)),
/// solves for the correction W with right-hand side h*(p,q) minus the
/// discrete gradient of U0, and returns exp(U0 + W) under the same gauge
/// rule. Equal to integrate up to gauge, but warm-started by the coarse
/// solution.
inline DepthMap integrate_coarse_to_fine(const GradientField& grad,
                                         const DepthMap& coarse_depth, double mean_depth,
                                         const IntegratorOptions& opts = {},
                                         IntegrationDiagnostics* diagnostics = nullptr) {
    if (!(mean_depth > 0.0)) throw DegenerateInputError("mean depth must be positive");
    if (coarse_depth.height() * 2 != grad.height() || coarse_depth.width() * 2 != grad.width())
        throw DimensionError("coarse depth must be half the gradient resolution");
    const DepthMap up = upsample2(coarse_depth);
    Grid<double> base(grad.height(), grad.width(), std::log(mean_depth));
    for (int v = 0; v < grad.height(); ++v)
        for (int u = 0; u < grad.width(); ++u)
            if (up.mask(v, u) && up.data(v, u) > 0.0) base(v, u) = std::log(up.data(v, u));
    IntegrationDiagnostics diag;
    std::vector<std::vector<int>> comp_pixels;
    Grid<int> compact;
    Grid<double> log_depth =
        detail::solve_log_depth(grad, &base, opts, diag, comp_pixels, compact);
    if (diagnostics) *diagnostics = diag;
    return detail::apply_gauge(std::move(log_depth), grad.mask, mean_depth, comp_pixels,
                               compact);
}

}  // namespace nfps
