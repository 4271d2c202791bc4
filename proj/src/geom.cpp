#include "crackle/geom.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <unordered_map>

#include "crackle/error.hpp"
#include "crackle/rng.hpp"

namespace crackle::geom {

namespace {

double dist2(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
        double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

struct Ball {
    std::vector<double> center;
    double r2 = -1.0;
    bool contains(const double* x, int dim) const {
        if (r2 < 0.0) return false;
        double s = 0.0;
        for (int j = 0; j < dim; ++j) {
            double d = x[j] - center[j];
            s += d * d;
        }
        return s <= r2 * (1.0 + 1e-12) + 1e-30;
    }
};

/// circumball of an affinely independent support set; degenerate supports
/// fall back to the ball of a maximal independent subset
Ball ball_of_support(const std::vector<const double*>& support, int dim) {
    Ball ball;
    ball.center.assign(dim, 0.0);
    if (support.empty()) {
        ball.r2 = -1.0;
        return ball;
    }
    if (support.size() == 1) {
        ball.center.assign(support[0], support[0] + dim);
        ball.r2 = 0.0;
        return ball;
    }
    // solve 2 G lambda = g in the affine frame of support[0]
    const std::size_t m = support.size() - 1;
    std::vector<double> G(m * m), g(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (int t = 0; t < dim; ++t)
                s += (support[i + 1][t] - support[0][t]) * (support[j + 1][t] - support[0][t]);
            G[i * m + j] = 2.0 * s;
        }
        g[i] = 0.5 * G[i * m + i];
    }
    // Gaussian elimination with partial pivoting
    std::vector<std::size_t> piv(m);
    for (std::size_t i = 0; i < m; ++i) piv[i] = i;
    std::vector<double> A = G, b = g;
    double scale = 0.0;
    for (double v : G) scale = std::max(scale, std::fabs(v));
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t best = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::fabs(A[r * m + col]) > std::fabs(A[best * m + col])) best = r;
        if (std::fabs(A[best * m + col]) < 1e-12 * std::max(scale, 1e-30)) {
            // affinely dependent: drop the last point and retry
            std::vector<const double*> reduced(support.begin(), support.end() - 1);
            return ball_of_support(reduced, dim);
        }
        if (best != col) {
            for (std::size_t c = 0; c < m; ++c) std::swap(A[best * m + c], A[col * m + c]);
            std::swap(b[best], b[col]);
        }
        for (std::size_t r = col + 1; r < m; ++r) {
            double f = A[r * m + col] / A[col * m + col];
            for (std::size_t c = col; c < m; ++c) A[r * m + c] -= f * A[col * m + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> lambda(m);
    for (std::size_t ri = m; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < m; ++c) s -= A[ri * m + c] * lambda[c];
        lambda[ri] = s / A[ri * m + ri];
    }
    ball.center.assign(support[0], support[0] + dim);
    for (std::size_t i = 0; i < m; ++i)
        for (int t = 0; t < dim; ++t)
            ball.center[t] += lambda[i] * (support[i + 1][t] - support[0][t]);
    double r2 = 0.0;
    for (int t = 0; t < dim; ++t) {
        double d = ball.center[t] - support[0][t];
        r2 += d * d;
    }
    ball.r2 = r2;
    return ball;
}

Ball welzl(std::vector<const double*>& pts, std::size_t count, std::vector<const double*>& support,
           int dim) {
    if (count == 0 || support.size() == static_cast<std::size_t>(dim) + 1)
        return ball_of_support(support, dim);
    Ball ball = welzl(pts, count - 1, support, dim);
    const double* p = pts[count - 1];
    if (ball.contains(p, dim)) return ball;
    support.push_back(p);
    ball = welzl(pts, count - 1, support, dim);
    support.pop_back();
    // move-to-front
    for (std::size_t i = count - 1; i > 0; --i) pts[i] = pts[i - 1];
    pts[0] = p;
    return ball;
}

}  // namespace

double meb_radius(const double* coords, std::size_t count, int dim) {
    if (count == 0) return 0.0;
    if (count == 1) return 0.0;
    std::vector<const double*> pts(count);
    for (std::size_t i = 0; i < count; ++i) pts[i] = coords + i * dim;
    // deterministic shuffle
    Rng rng(0x5eedu, count);
    for (std::size_t i = count; i > 1; --i)
        std::swap(pts[i - 1], pts[rng.next_u64() % i]);
    std::vector<const double*> support;
    support.reserve(dim + 1);
    Ball ball = welzl(pts, count, support, dim);
    return ball.r2 > 0.0 ? std::sqrt(ball.r2) : 0.0;
}

double meb_radius(const std::vector<double>& coords, int dim) {
    return meb_radius(coords.data(), coords.size() / dim, dim);
}

Filtration cech_filtration(const double* coords, std::size_t count, int dim, int max_dim,
                           double value_cap, std::size_t simplex_budget) {
    if (max_dim < 0) throw Error("cech_filtration: max_dim must be >= 0");
    if (!(value_cap >= 0.0)) throw Error("cech_filtration: value_cap must be >= 0 or inf");
    Filtration filt;
    filt.max_dim = max_dim;
    filt.point_count = static_cast<int>(count);
    const int n = static_cast<int>(count);
    // neighborhood graph: MEB radius <= cap forces pairwise distance <= 2 cap
    const bool capped = std::isfinite(value_cap);
    const double edge2 = capped ? 4.0 * value_cap * value_cap : 0.0;
    std::vector<std::vector<int>> nbr(n);
    if (max_dim >= 1) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (!capped || dist2(coords + i * dim, coords + j * dim, dim) <= edge2)
                    nbr[i].push_back(j);
    }
    std::vector<double> buf;
    std::vector<int> verts;
    // depth-first clique expansion in lexicographic order
    auto emit = [&](const std::vector<int>& vs) {
        Simplex s;
        s.vertices = vs;
        if (vs.size() == 1) {
            s.value = 0.0;
        } else {
            buf.clear();
            for (int v : vs) buf.insert(buf.end(), coords + v * dim, coords + (v + 1) * dim);
            s.value = meb_radius(buf.data(), vs.size(), dim);
        }
        if (s.value <= value_cap || vs.size() == 1) {
            filt.simplices.push_back(std::move(s));
            if (filt.simplices.size() > simplex_budget)
                throw BudgetExceeded("cech_filtration: simplex budget exceeded");
            return true;
        }
        return false;
    };
    std::vector<std::vector<int>> cand_stack;
    std::function<void(std::vector<int>&, const std::vector<int>&)> grow =
        [&](std::vector<int>& vs, const std::vector<int>& cands) {
            if (static_cast<int>(vs.size()) > max_dim) return;
            for (std::size_t ci = 0; ci < cands.size(); ++ci) {
                int v = cands[ci];
                vs.push_back(v);
                bool kept = emit(vs);
                if (kept && static_cast<int>(vs.size()) <= max_dim) {
                    std::vector<int> next;
                    for (std::size_t cj = ci + 1; cj < cands.size(); ++cj) {
                        int w = cands[cj];
                        if (!capped || dist2(coords + v * dim, coords + w * dim, dim) <= edge2)
                            next.push_back(w);
                    }
                    grow(vs, next);
                }
                vs.pop_back();
            }
        };
    for (int i = 0; i < n; ++i) {
        verts.assign(1, i);
        emit(verts);
        if (max_dim >= 1) grow(verts, nbr[i]);
    }
    // clamp away floating-point monotonicity violations: a simplex enters no
    // earlier than its facets
    std::sort(filt.simplices.begin(), filt.simplices.end(),
              [](const Simplex& a, const Simplex& b) { return a.dim() < b.dim(); });
    {
        std::map<std::vector<int>, double> value_of;
        std::vector<int> facet;
        for (auto& s : filt.simplices) {
            if (s.dim() >= 1) {
                for (std::size_t drop = 0; drop < s.vertices.size(); ++drop) {
                    facet.clear();
                    for (std::size_t t = 0; t < s.vertices.size(); ++t)
                        if (t != drop) facet.push_back(s.vertices[t]);
                    auto it = value_of.find(facet);
                    if (it != value_of.end()) s.value = std::max(s.value, it->second);
                }
            }
            value_of[s.vertices] = s.value;
        }
    }
    std::sort(filt.simplices.begin(), filt.simplices.end(), [](const Simplex& a, const Simplex& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.dim() != b.dim()) return a.dim() < b.dim();
        return a.vertices < b.vertices;
    });
    return filt;
}

Filtration cech_filtration(const std::vector<double>& coords, int dim, int max_dim,
                           double value_cap, std::size_t simplex_budget) {
    return cech_filtration(coords.data(), coords.size() / dim, dim, max_dim, value_cap,
                           simplex_budget);
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<int>(i);
    }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[b] = a;
    }
};

}  // namespace

ComponentPartition components_at(const model::PointCloud& cloud, double M, double far_radius) {
    if (!(M > 0.0)) throw Error("components_at: M must be positive");
    const std::size_t n = cloud.size();
    const int dim = cloud.dim;
    ComponentPartition part;
    part.labels.assign(n, -1);
    if (n == 0) return part;
    const double cell = 2.0 * M, cut2 = 4.0 * M * M;
    // grid hash with cell side 2M; only same/neighbor cells can hold edges
    std::unordered_map<std::uint64_t, std::vector<int>> grid;
    grid.reserve(n * 2);
    std::vector<std::int64_t> cell_ids(n * dim);
    auto key_of = [&](const std::int64_t* c) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (int j = 0; j < dim; ++j) {
            std::uint64_t v = static_cast<std::uint64_t>(c[j]);
            for (int byte = 0; byte < 8; ++byte) {
                h ^= (v >> (8 * byte)) & 0xffu;
                h *= 0x100000001b3ull;
            }
        }
        return h;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = cloud.point(i);
        for (int j = 0; j < dim; ++j)
            cell_ids[i * dim + j] = static_cast<std::int64_t>(std::floor(x[j] / cell));
        grid[key_of(&cell_ids[i * dim])].push_back(static_cast<int>(i));
    }
    UnionFind uf(n);
    std::vector<std::int64_t> probe(dim);
    const int neighborhood = 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = cloud.point(i);
        // enumerate the 3^dim neighborhood
        std::vector<int> off(dim, -neighborhood);
        for (;;) {
            for (int j = 0; j < dim; ++j) probe[j] = cell_ids[i * dim + j] + off[j];
            auto it = grid.find(key_of(probe.data()));
            if (it != grid.end()) {
                for (int j : it->second) {
                    if (static_cast<std::size_t>(j) <= i) continue;
                    if (dist2(x, cloud.point(j), dim) < cut2) uf.unite(static_cast<int>(i), j);
                }
            }
            int carry = 0;
            for (; carry < dim; ++carry) {
                if (++off[carry] <= neighborhood) break;
                off[carry] = -neighborhood;
            }
            if (carry == dim) break;
        }
    }
    // canonical component ids: smallest member index
    std::unordered_map<int, int> root_to_id;
    root_to_id.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        int r = uf.find(static_cast<int>(i));
        auto it = root_to_id.find(r);
        int id = (it == root_to_id.end()) ? (root_to_id[r] = static_cast<int>(i)) : it->second;
        part.labels[i] = id;
        part.sizes[id] += 1;
    }
    if (far_radius >= 0.0) {
        std::unordered_map<int, bool> all_far;
        for (std::size_t i = 0; i < n; ++i) {
            bool far = cloud.norm(i) >= far_radius;
            auto it = all_far.find(part.labels[i]);
            if (it == all_far.end())
                all_far[part.labels[i]] = far;
            else
                it->second = it->second && far;
        }
        for (const auto& [id, far] : all_far)
            if (far) part.isolated_far.push_back(id);
        std::sort(part.isolated_far.begin(), part.isolated_far.end());
    }
    return part;
}

model::PointCloud restrict_far(const model::PointCloud& cloud, double R) {
    if (R < 0.0) throw Error("restrict_far: R must be >= 0");
    model::PointCloud out;
    out.dim = cloud.dim;
    out.seed = cloud.seed;
    out.intensity_n = cloud.intensity_n;
    out.restricted_to = std::max(cloud.restricted_to, R);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.norm(i) >= R)
            out.coords.insert(out.coords.end(), cloud.point(i), cloud.point(i) + cloud.dim);
    return out;
}

}  // namespace crackle::geom
