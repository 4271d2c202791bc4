#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "crackle/error.hpp"
#include "crackle/geom.hpp"
#include "crackle/rng.hpp"

using namespace crackle;
using namespace crackle::geom;

namespace {

// independent enclosing-ball oracle: minimize the max distance over the
// candidate set of all subset circumcenters (direct normal-equation solve)
double brute_meb_oracle(const std::vector<double>& pts, int dim) {
    const int n = static_cast<int>(pts.size()) / dim;
    std::vector<std::vector<int>> subsets;
    std::vector<int> cur;
    std::function<void(int, int)> rec = [&](int start, int need) {
        if (need == 0) {
            subsets.push_back(cur);
            return;
        }
        for (int i = start; i < n; ++i) {
            cur.push_back(i);
            rec(i + 1, need - 1);
            cur.pop_back();
        }
    };
    for (int size = 1; size <= std::min(n, dim + 1); ++size) rec(0, size);
    double best = 1e300;
    for (const auto& sub : subsets) {
        // candidate center: circumcenter of the subset in its affine hull
        const int m = static_cast<int>(sub.size());
        std::vector<double> center(dim);
        if (m == 1) {
            for (int t = 0; t < dim; ++t) center[t] = pts[sub[0] * dim + t];
        } else {
            const int q = m - 1;
            std::vector<double> A(q * (q + 1));
            for (int i = 0; i < q; ++i) {
                for (int j = 0; j < q; ++j) {
                    double dot = 0.0;
                    for (int t = 0; t < dim; ++t)
                        dot += (pts[sub[i + 1] * dim + t] - pts[sub[0] * dim + t]) *
                               (pts[sub[j + 1] * dim + t] - pts[sub[0] * dim + t]);
                    A[i * (q + 1) + j] = 2.0 * dot;
                }
                A[i * (q + 1) + q] = A[i * (q + 1) + i] * 0.5;
            }
            bool singular = false;
            for (int col = 0; col < q && !singular; ++col) {
                int piv = col;
                for (int r = col + 1; r < q; ++r)
                    if (std::fabs(A[r * (q + 1) + col]) > std::fabs(A[piv * (q + 1) + col]))
                        piv = r;
                if (std::fabs(A[piv * (q + 1) + col]) < 1e-11) {
                    singular = true;
                    break;
                }
                for (int c = 0; c <= q; ++c) std::swap(A[piv * (q + 1) + c], A[col * (q + 1) + c]);
                for (int r = 0; r < q; ++r) {
                    if (r == col) continue;
                    double f = A[r * (q + 1) + col] / A[col * (q + 1) + col];
                    for (int c = 0; c <= q; ++c) A[r * (q + 1) + c] -= f * A[col * (q + 1) + c];
                }
            }
            if (singular) continue;
            for (int t = 0; t < dim; ++t) center[t] = pts[sub[0] * dim + t];
            for (int i = 0; i < q; ++i) {
                double mu = A[i * (q + 1) + q] / A[i * (q + 1) + i];
                for (int t = 0; t < dim; ++t)
                    center[t] += mu * (pts[sub[i + 1] * dim + t] - pts[sub[0] * dim + t]);
            }
        }
        double rad = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int t = 0; t < dim; ++t) {
                double d = pts[i * dim + t] - center[t];
                s += d * d;
            }
            rad = std::max(rad, s);
        }
        best = std::min(best, rad);
    }
    return std::sqrt(best);
}

model::PointCloud make_cloud(std::vector<double> coords, int dim) {
    model::PointCloud cloud;
    cloud.dim = dim;
    cloud.coords = std::move(coords);
    return cloud;
}

}  // namespace

TEST_SUITE_BEGIN("geom");

TEST_CASE("meb radius on the named configurations") {
    CHECK(meb_radius({1.5, -2.0}, 2) == 0.0);
    // equilateral triangle, side 2: circumradius 2/sqrt(3)
    std::vector<double> eq = {0.0, 0.0, 2.0, 0.0, 1.0, std::sqrt(3.0)};
    CHECK(meb_radius(eq, 2) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-12));
    // obtuse triangle: diametral ball of the longest edge
    std::vector<double> ob = {0.0, 0.0, 4.0, 0.0, 1.0, 0.1};
    CHECK(meb_radius(ob, 2) == doctest::Approx(2.0).epsilon(1e-12));
    // collinear triple
    std::vector<double> col = {0.0, 0.0, 1.0, 0.0, 3.0, 0.0};
    CHECK(meb_radius(col, 2) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("meb agrees with the brute-force oracle") {
    Rng rng(2718);
    for (int dim : {2, 3}) {
        for (int trial = 0; trial < 500; ++trial) {
            int n = 1 + static_cast<int>(rng.next_u64() % 6);
            std::vector<double> pts(n * dim);
            for (auto& c : pts) c = rng.uniform(-2.0, 2.0);
            double mine = meb_radius(pts, dim);
            double oracle = brute_meb_oracle(pts, dim);
            CHECK(std::fabs(mine - oracle) < 1e-9 * std::max(1.0, oracle));
        }
    }
}

TEST_CASE("cech filtration: two points") {
    std::vector<double> pts = {0.0, 0.0, 2.0, 0.0};
    auto filt = cech_filtration(pts, 2, 1);
    REQUIRE(filt.simplices.size() == 3);
    CHECK(filt.simplices[0].dim() == 0);
    CHECK(filt.simplices[1].dim() == 0);
    CHECK(filt.simplices[2].dim() == 1);
    // edge value is exactly half the endpoint distance
    CHECK(filt.simplices[2].value == 1.0);
}

TEST_CASE("cech filtration: unit square skeleton") {
    std::vector<double> pts = {0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0};
    auto filt = cech_filtration(pts, 2, 2);
    int v = 0, e = 0, t = 0;
    int e_half = 0, e_diag = 0;
    for (const auto& s : filt.simplices) {
        if (s.dim() == 0) ++v;
        if (s.dim() == 1) {
            ++e;
            if (std::fabs(s.value - 0.5) < 1e-12) ++e_half;
            if (std::fabs(s.value - std::sqrt(2.0) / 2.0) < 1e-12) ++e_diag;
        }
        if (s.dim() == 2) {
            ++t;
            CHECK(s.value == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
        }
    }
    CHECK(v == 4);
    CHECK(e == 6);
    CHECK(e_half == 4);
    CHECK(e_diag == 2);
    CHECK(t == 4);
}

TEST_CASE("cech filtration: value cap and budget") {
    std::vector<double> pts = {0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0};
    auto filt = cech_filtration(pts, 2, 2, 0.0);
    CHECK(filt.simplices.size() == 4);  // vertices only
    CHECK_THROWS_AS(cech_filtration(pts, 2, 2, kNoCap, 5), BudgetExceeded);
}

TEST_CASE("filtration order is a valid filtration") {
    Rng rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 3 + static_cast<int>(rng.next_u64() % 5);
        std::vector<double> pts(n * 2);
        for (auto& c : pts) c = rng.uniform(-1.5, 1.5);
        auto filt = cech_filtration(pts, 2, 2);
        // face values never exceed coface values, and faces come first
        std::map<std::vector<int>, std::pair<double, std::size_t>> seen;
        for (std::size_t i = 0; i < filt.simplices.size(); ++i) {
            const auto& s = filt.simplices[i];
            seen[s.vertices] = {s.value, i};
            if (s.dim() == 0) continue;
            for (std::size_t drop = 0; drop < s.vertices.size(); ++drop) {
                std::vector<int> facet;
                for (std::size_t j = 0; j < s.vertices.size(); ++j)
                    if (j != drop) facet.push_back(s.vertices[j]);
                REQUIRE(seen.count(facet));
                CHECK(seen[facet].first <= s.value * (1 + 1e-12) + 1e-15);
                CHECK(seen[facet].second < i);
            }
        }
    }
}

TEST_CASE("components on the named configurations") {
    // two points at distance 1.9 with M=1: one component
    auto c1 = components_at(make_cloud({0.0, 0.0, 1.9, 0.0}, 2), 1.0);
    CHECK(c1.sizes.size() == 1);
    // distance 3.9: two components (edges need distance < 2)
    auto c2 = components_at(make_cloud({0.0, 0.0, 3.9, 0.0}, 2), 1.0);
    CHECK(c2.sizes.size() == 2);
    // chain 0, 1.9, 3.8 plus an outlier at 10
    auto c3 = components_at(make_cloud({0.0, 0.0, 1.9, 0.0, 3.8, 0.0, 10.0, 0.0}, 2), 1.0);
    CHECK(c3.sizes.size() == 2);
    std::vector<int> sizes;
    for (auto& [id, sz] : c3.sizes) sizes.push_back(sz);
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{1, 3});
    // empty cloud
    auto c4 = components_at(make_cloud({}, 2), 1.0);
    CHECK(c4.labels.empty());
    CHECK(c4.sizes.empty());
}

TEST_CASE("components match a naive all-pairs union-find") {
    Rng rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        int n = 2 + static_cast<int>(rng.next_u64() % 499);
        double M = 0.05 + 0.3 * rng.uniform();
        std::vector<double> pts(n * 2);
        for (auto& c : pts) c = rng.uniform(-4.0, 4.0);
        auto cloud = make_cloud(pts, 2);
        auto part = components_at(cloud, M);
        // naive O(n^2)
        std::vector<int> parent(n);
        for (int i = 0; i < n; ++i) parent[i] = i;
        std::function<int(int)> find = [&](int x) {
            return parent[x] == x ? x : parent[x] = find(parent[x]);
        };
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                double dx = pts[2 * i] - pts[2 * j], dy = pts[2 * i + 1] - pts[2 * j + 1];
                if (dx * dx + dy * dy < 4.0 * M * M) parent[find(i)] = find(j);
            }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                bool same_naive = find(i) == find(j);
                bool same_mine = part.labels[i] == part.labels[j];
                REQUIRE(same_naive == same_mine);
            }
    }
}

TEST_CASE("isolated_far components") {
    // far pair, mixed pair straddling R = 5, far singleton
    auto cloud = make_cloud({6.0, 0.0, 7.0, 0.0, 0.0, 5.5, 0.0, 4.0, 10.0, 0.0}, 2);
    auto part = components_at(cloud, 1.0, 5.0);
    CHECK(part.sizes.size() == 3);
    CHECK(part.isolated_far.size() == 2);  // the mixed pair is excluded
}

TEST_CASE("restrict_far") {
    auto cloud = make_cloud({0.1, 0.0, 3.0, 0.0, 0.0, 2.0}, 2);
    auto all = restrict_far(cloud, 0.0);
    CHECK(all.size() == 3);
    auto far = restrict_far(cloud, 1.5);
    CHECK(far.size() == 2);
    CHECK(far.point(0)[0] == 3.0);
    CHECK(far.point(1)[1] == 2.0);
    auto none = restrict_far(cloud, 100.0);
    CHECK(none.size() == 0);
}

TEST_SUITE_END();
