#include "crackle/ph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>

#include "crackle/error.hpp"

namespace crackle::ph {

namespace {

// zero-persistence discard, with slack for floating-point jitter between a
// simplex and its enclosing-ball-equal facet
bool positive_persistence(double birth, double death) {
    return death - birth > 1e-12 * std::max(1.0, death);
}

// symmetric difference of two ascending index lists
void xor_into(std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) out.push_back(a[i++]);
        else if (b[j] < a[i]) out.push_back(b[j++]);
        else { ++i; ++j; }
    }
    out.insert(out.end(), a.begin() + i, a.end());
    out.insert(out.end(), b.begin() + j, b.end());
    a.swap(out);
}

struct VertexListHash {
    std::size_t operator()(const std::vector<int>& v) const {
        std::size_t h = 0xcbf29ce484222325ull;
        for (int x : v) {
            h ^= static_cast<std::size_t>(x) + 0x9e3779b9u;
            h *= 0x100000001b3ull;
        }
        return h;
    }
};

}  // namespace

std::vector<PersistencePair> reduce(const geom::Filtration& filt, int k) {
    if (filt.max_dim < k + 1)
        throw InsufficientDim("reduce: filtration max_dim must be >= k+1");
    const auto& simplices = filt.simplices;
    std::unordered_map<std::vector<int>, int, VertexListHash> index;
    index.reserve(simplices.size() * 2);
    for (std::size_t i = 0; i < simplices.size(); ++i)
        index[simplices[i].vertices] = static_cast<int>(i);
    // pivot -> fully reduced column stored there
    std::unordered_map<int, std::vector<int>> pivot_col;
    pivot_col.reserve(simplices.size());
    std::vector<PersistencePair> pairs;
    std::vector<int> col, facet;
    for (std::size_t i = 0; i < simplices.size(); ++i) {
        const auto& s = simplices[i];
        const int q = s.dim();
        if (q == 0) continue;
        col.clear();
        for (std::size_t drop = 0; drop < s.vertices.size(); ++drop) {
            facet.clear();
            for (std::size_t t = 0; t < s.vertices.size(); ++t)
                if (t != drop) facet.push_back(s.vertices[t]);
            col.push_back(index.at(facet));
        }
        std::sort(col.begin(), col.end());
        while (!col.empty()) {
            int piv = col.back();
            auto it = pivot_col.find(piv);
            if (it == pivot_col.end()) {
                if (q - 1 == k) {
                    double birth = simplices[piv].value;
                    if (positive_persistence(birth, s.value)) {
                        PersistencePair pr;
                        pr.birth = birth;
                        pr.death = s.value;
                        pr.dim = k;
                        pairs.push_back(pr);
                    }
                }
                pivot_col.emplace(piv, col);
                break;
            }
            xor_into(col, it->second);
        }
    }
    return pairs;
}

namespace {

std::vector<std::vector<int>> component_members(const geom::ComponentPartition& part) {
    std::map<int, std::vector<int>> by_id;
    for (std::size_t i = 0; i < part.labels.size(); ++i)
        by_id[part.labels[i]].push_back(static_cast<int>(i));
    std::vector<std::vector<int>> out;
    out.reserve(by_id.size());
    for (auto& [id, members] : by_id) out.push_back(std::move(members));
    return out;
}

void append_component_pairs(CrackleDiagram& diag, const model::PointCloud& cloud,
                            const std::vector<int>& members, int comp_id, int k,
                            const DiagramOptions& opts) {
    const int m = static_cast<int>(members.size());
    if (m < k + 2) return;
    if (m > opts.m_cap) {
        diag.diagnostics.skipped_components += 1;
        return;
    }
    std::vector<double> coords;
    coords.reserve(members.size() * cloud.dim);
    for (int idx : members)
        coords.insert(coords.end(), cloud.point(idx), cloud.point(idx) + cloud.dim);
    try {
        auto filt = geom::cech_filtration(coords, cloud.dim, k + 1, geom::kNoCap,
                                          opts.simplex_budget);
        for (auto pr : reduce(filt, k)) {
            pr.component_size = m;
            pr.component_id = comp_id;
            diag.pairs.push_back(pr);
        }
    } catch (const BudgetExceeded&) {
        diag.diagnostics.skipped_components += 1;
    }
}

void sort_pairs(CrackleDiagram& diag) {
    std::sort(diag.pairs.begin(), diag.pairs.end(),
              [](const PersistencePair& a, const PersistencePair& b) {
                  if (a.birth != b.birth) return a.birth < b.birth;
                  if (a.death != b.death) return a.death < b.death;
                  return a.component_id < b.component_id;
              });
}

}  // namespace

CrackleDiagram crackle_diagram(const model::PointCloud& cloud, const model::ScalingPlan& plan,
                               const DiagramOptions& opts) {
    CrackleDiagram diag;
    diag.k = plan.k;
    diag.M = plan.M;
    diag.R = plan.R;
    diag.variant = DiagramVariant::Isolated;
    diag.diagnostics.cloud_size = cloud.size();
    auto part = geom::components_at(cloud, plan.M, plan.R);
    auto members = component_members(part);
    diag.diagnostics.far_count = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.norm(i) >= plan.R) diag.diagnostics.far_count += 1;
    // isolated_far components are exactly the h_R * g_M(., P_n) survivors
    std::vector<char> keep_id(cloud.size() ? cloud.size() : 1, 0);
    for (int id : part.isolated_far) keep_id[id] = 1;
    for (auto& mem : members) {
        int id = part.labels[mem.front()];
        if (!keep_id[id]) continue;
        diag.diagnostics.components_far += 1;
        append_component_pairs(diag, cloud, mem, id, plan.k, opts);
    }
    sort_pairs(diag);
    return diag;
}

CrackleDiagram crackle_diagram_tilde(const model::PointCloud& cloud,
                                     const model::ScalingPlan& plan,
                                     const DiagramOptions& opts) {
    CrackleDiagram diag;
    diag.k = plan.k;
    diag.M = plan.M;
    diag.R = plan.R;
    diag.variant = DiagramVariant::ConnectedOnly;
    diag.diagnostics.cloud_size = cloud.size();
    auto far = geom::restrict_far(cloud, plan.R);
    diag.diagnostics.far_count = far.size();
    if (far.size() == 0) return diag;
    auto part = geom::components_at(far, plan.M);
    auto members = component_members(part);
    for (auto& mem : members) {
        diag.diagnostics.components_far += 1;
        append_component_pairs(diag, far, mem, part.labels[mem.front()], plan.k, opts);
    }
    sort_pairs(diag);
    return diag;
}

namespace {

bool subset_connected(const std::vector<std::uint64_t>& adj, const std::vector<int>& sub) {
    std::uint64_t mask = 0, reach = 1ull << 0;
    for (std::size_t i = 0; i < sub.size(); ++i) mask |= 1ull << i;
    // adjacency restricted to the subset, relabeled 0..m-1
    std::vector<std::uint64_t> local(sub.size(), 0);
    for (std::size_t i = 0; i < sub.size(); ++i)
        for (std::size_t j = 0; j < sub.size(); ++j)
            if (adj[sub[i]] >> sub[j] & 1ull) local[i] |= 1ull << j;
    for (;;) {
        std::uint64_t next = reach;
        std::uint64_t bits = reach;
        while (bits) {
            int b = __builtin_ctzll(bits);
            bits &= bits - 1;
            next |= local[b];
        }
        if (next == reach) break;
        reach = next;
    }
    return (reach & mask) == mask;
}

}  // namespace

CrackleDiagram subset_census_diagram(const model::PointCloud& cloud,
                                     const model::ScalingPlan& plan, int m,
                                     const DiagramOptions& opts) {
    if (m < plan.k + 2) throw Error("subset_census_diagram: m must be >= k+2");
    CrackleDiagram diag;
    diag.k = plan.k;
    diag.M = plan.M;
    diag.R = plan.R;
    diag.variant = DiagramVariant::SubsetCensus;
    diag.diagnostics.cloud_size = cloud.size();
    auto far = geom::restrict_far(cloud, plan.R);
    diag.diagnostics.far_count = far.size();
    if (far.size() == 0) return diag;
    auto part = geom::components_at(far, plan.M);
    auto members = component_members(part);
    const double cut2 = 4.0 * plan.M * plan.M;
    std::vector<double> coords;
    for (auto& mem : members) {
        const int s = static_cast<int>(mem.size());
        diag.diagnostics.components_far += 1;
        if (s < m) continue;
        if (s > 64) {
            diag.diagnostics.skipped_components += 1;
            continue;
        }
        // combination count guard
        double comb = 1.0;
        for (int i = 0; i < m; ++i) comb *= static_cast<double>(s - i) / (i + 1);
        if (comb > static_cast<double>(opts.census_budget)) {
            diag.diagnostics.skipped_components += 1;
            continue;
        }
        std::vector<std::uint64_t> adj(s, 0);
        for (int i = 0; i < s; ++i)
            for (int j = i + 1; j < s; ++j) {
                double d2 = 0.0;
                for (int t = 0; t < far.dim; ++t) {
                    double d = far.point(mem[i])[t] - far.point(mem[j])[t];
                    d2 += d * d;
                }
                if (d2 < cut2) {
                    adj[i] |= 1ull << j;
                    adj[j] |= 1ull << i;
                }
            }
        std::vector<int> sub(m);
        std::vector<int> stack(m, 0);
        // enumerate all m-combinations, keep connected induced subgraphs
        std::function<void(int, int)> comb_rec = [&](int start, int depth) {
            if (depth == m) {
                if (!subset_connected(adj, sub)) return;
                diag.diagnostics.census_subsets += 1;
                coords.clear();
                for (int li : sub) {
                    int gi = mem[li];
                    coords.insert(coords.end(), far.point(gi), far.point(gi) + far.dim);
                }
                auto filt = geom::cech_filtration(coords, far.dim, plan.k + 1, geom::kNoCap,
                                                  opts.simplex_budget);
                for (auto pr : reduce(filt, plan.k)) {
                    pr.component_size = m;
                    pr.component_id = part.labels[mem.front()];
                    diag.pairs.push_back(pr);
                }
                return;
            }
            for (int v = start; v <= s - (m - depth); ++v) {
                sub[depth] = v;
                comb_rec(v + 1, depth + 1);
            }
        };
        comb_rec(0, 0);
    }
    sort_pairs(diag);
    return diag;
}

// ---------------------------------------------------------------------------
// independent brute-force oracle
// ---------------------------------------------------------------------------

namespace oracle {

// enclosing ball by exhaustive support enumeration; no shared code with
// geom::meb_radius
struct BruteBall {
    double center[8];
    double r2;
};

bool brute_solve_support(const double* pts, int dim, const std::vector<int>& sup,
                         BruteBall& out) {
    const int m = static_cast<int>(sup.size());
    if (m == 1) {
        for (int t = 0; t < dim; ++t) out.center[t] = pts[sup[0] * dim + t];
        out.r2 = 0.0;
        return true;
    }
    // center = p0 + sum mu_i (p_i - p0) with |c - p_i| equal for all i
    const int q = m - 1;
    double A[8][9];
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < q; ++j) {
            double dot = 0.0;
            for (int t = 0; t < dim; ++t)
                dot += (pts[sup[i + 1] * dim + t] - pts[sup[0] * dim + t]) *
                       (pts[sup[j + 1] * dim + t] - pts[sup[0] * dim + t]);
            A[i][j] = 2.0 * dot;
        }
        A[i][q] = A[i][i] * 0.5;
    }
    // plain Gauss-Jordan; reject near-singular supports
    for (int col = 0; col < q; ++col) {
        int piv = col;
        for (int r = col + 1; r < q; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
        if (std::fabs(A[piv][col]) < 1e-10) return false;
        if (piv != col)
            for (int c = 0; c <= q; ++c) std::swap(A[piv][c], A[col][c]);
        double d = A[col][col];
        for (int c = 0; c <= q; ++c) A[col][c] /= d;
        for (int r = 0; r < q; ++r) {
            if (r == col) continue;
            double f = A[r][col];
            for (int c = 0; c <= q; ++c) A[r][c] -= f * A[col][c];
        }
    }
    for (int t = 0; t < dim; ++t) out.center[t] = pts[sup[0] * dim + t];
    for (int i = 0; i < q; ++i)
        for (int t = 0; t < dim; ++t)
            out.center[t] += A[i][q] * (pts[sup[i + 1] * dim + t] - pts[sup[0] * dim + t]);
    out.r2 = 0.0;
    for (int t = 0; t < dim; ++t) {
        double d = out.center[t] - pts[sup[0] * dim + t];
        out.r2 += d * d;
    }
    return true;
}

double brute_meb(const double* pts, const std::vector<int>& subset, int dim) {
    double best = -1.0;
    const int n = static_cast<int>(subset.size());
    std::vector<int> sup;
    auto covers = [&](const BruteBall& ball) {
        for (int idx : subset) {
            double s = 0.0;
            for (int t = 0; t < dim; ++t) {
                double d = pts[idx * dim + t] - ball.center[t];
                s += d * d;
            }
            if (s > ball.r2 * (1.0 + 1e-11) + 1e-24) return false;
        }
        return true;
    };
    const int max_support = std::min(n, dim + 1);
    std::function<void(int, int)> rec = [&](int start, int need) {
        if (need == 0) {
            BruteBall ball;
            if (brute_solve_support(pts, dim, sup, ball) && covers(ball))
                if (best < 0.0 || ball.r2 < best) best = ball.r2;
            return;
        }
        for (int i = start; i < n; ++i) {
            sup.push_back(subset[i]);
            rec(i + 1, need - 1);
            sup.pop_back();
        }
    };
    for (int size = 1; size <= max_support; ++size) rec(0, size);
    return best > 0.0 ? std::sqrt(best) : 0.0;
}

}  // namespace oracle

std::vector<PersistencePair> naive_diagram_oracle(const double* coords, std::size_t count,
                                                  int dim, int k) {
    if (count > 8) throw TooLarge("naive_diagram_oracle: more than 8 points");
    if (dim > 7) throw TooLarge("naive_diagram_oracle: dim > 7 unsupported");
    std::vector<PersistencePair> pairs;
    if (count == 0) return pairs;
    const int n = static_cast<int>(count);
    struct NSimplex {
        std::vector<int> verts;
        double value;
        unsigned mask;
    };
    std::vector<NSimplex> simp;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        NSimplex s;
        s.mask = mask;
        for (int v = 0; v < n; ++v)
            if (mask >> v & 1u) s.verts.push_back(v);
        std::vector<int> subset = s.verts;
        s.value = (s.verts.size() == 1) ? 0.0 : oracle::brute_meb(coords, subset, dim);
        simp.push_back(std::move(s));
    }
    std::sort(simp.begin(), simp.end(), [](const NSimplex& a, const NSimplex& b) {
        if (a.value != b.value) return a.value < b.value;
        if (a.verts.size() != b.verts.size()) return a.verts.size() < b.verts.size();
        return a.verts < b.verts;
    });
    std::unordered_map<unsigned, int> idx_of;
    for (std::size_t i = 0; i < simp.size(); ++i) idx_of[simp[i].mask] = static_cast<int>(i);
    // dense bitset columns, quadratic-time left-to-right elimination
    const std::size_t words = (simp.size() + 63) / 64;
    std::vector<std::vector<std::uint64_t>> cols(simp.size(),
                                                 std::vector<std::uint64_t>(words, 0));
    std::vector<int> owner(simp.size(), -1);  // pivot row -> column index
    auto highest_bit = [&](const std::vector<std::uint64_t>& c) {
        for (std::size_t w = words; w-- > 0;)
            if (c[w]) return static_cast<int>(w * 64 + 63 - __builtin_clzll(c[w]));
        return -1;
    };
    for (std::size_t i = 0; i < simp.size(); ++i) {
        const auto& s = simp[i];
        if (s.verts.size() >= 2) {
            for (int v : s.verts) {
                unsigned facet = s.mask & ~(1u << v);
                int fi = idx_of.at(facet);
                cols[i][fi / 64] ^= 1ull << (fi % 64);
            }
        }
        int piv = highest_bit(cols[i]);
        while (piv >= 0 && owner[piv] >= 0) {
            const auto& other = cols[owner[piv]];
            for (std::size_t w = 0; w < words; ++w) cols[i][w] ^= other[w];
            piv = highest_bit(cols[i]);
        }
        if (piv >= 0) {
            owner[piv] = static_cast<int>(i);
            const auto& creator = simp[piv];
            // a dim-k creator has k+1 vertices
            if (static_cast<int>(creator.verts.size()) == k + 1 &&
                positive_persistence(creator.value, s.value)) {
                PersistencePair pr;
                pr.birth = creator.value;
                pr.death = s.value;
                pr.dim = k;
                pairs.push_back(pr);
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
        if (a.birth != b.birth) return a.birth < b.birth;
        return a.death < b.death;
    });
    return pairs;
}

std::vector<PersistencePair> naive_diagram_oracle(const std::vector<double>& coords, int dim,
                                                  int k) {
    return naive_diagram_oracle(coords.data(), coords.size() / dim, dim, k);
}

double lifespan_max(const CrackleDiagram& diagram, double t) {
    if (!(t > 0.0)) throw Error("lifespan_max: t must be positive");
    double best = 0.0;
    for (const auto& pr : diagram.pairs) {
        double b = pr.birth / diagram.M, d = pr.death / diagram.M;
        if (b <= t) best = std::max(best, d - b);
    }
    return best;
}

}  // namespace crackle::ph
