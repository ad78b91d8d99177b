#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "vlad.hpp"

using namespace vstr;
using testutil::TempDir;

namespace {

LocalDescriptorSet make_image(std::string id, std::size_t dim, std::vector<float> data) {
    LocalDescriptorSet s;
    s.image_id = std::move(id);
    s.dim = dim;
    s.data = std::move(data);
    return s;
}

} // namespace

TEST_CASE("train_codebook: k distinct points are a fixed point of Lloyd's") {
    std::vector<float> pts = {0.f, 0.f, 10.f, 0.f, 0.f, 10.f, 10.f, 10.f};
    Codebook cb = train_codebook(pts, 2, 4, 7);
    REQUIRE(cb.size() == 4);

    std::set<std::pair<float, float>> got, want;
    for (std::size_t i = 0; i < 4; ++i) {
        got.insert({cb.centroid(i)[0], cb.centroid(i)[1]});
        want.insert({pts[2 * i], pts[2 * i + 1]});
    }
    CHECK(got == want);
}

TEST_CASE("train_codebook: two blobs give one centroid per blob") {
    rng rand(11);
    std::vector<float> pts;
    auto blob = [&](double cx, double cy, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back(static_cast<float>(cx + 0.1 * rand.normal()));
            pts.push_back(static_cast<float>(cy + 0.1 * rand.normal()));
        }
    };
    blob(0.0, 0.0, 40);
    blob(8.0, 8.0, 40);

    Codebook cb = train_codebook(pts, 2, 2, 3);

    // Brute-force oracle: every point assigned to a centroid must come from
    // the blob that centroid sits in.
    for (std::size_t i = 0; i < 80; ++i) {
        std::span<const float> x(pts.data() + 2 * i, 2);
        std::size_t c = assign_nn(x, cb);
        bool point_in_first = i < 40;
        bool centroid_in_first = cb.centroid(c)[0] < 4.0f;
        CHECK(point_in_first == centroid_in_first);
    }
}

TEST_CASE("train_codebook: deterministic per seed, paper-scale K") {
    rng rand(5);
    auto pts = testutil::random_values(rand, 400 * 4, -2.0, 2.0);
    std::size_t it1 = 0, it2 = 0;
    Codebook a = train_codebook(pts, 4, 64, 123, &it1);
    Codebook b = train_codebook(pts, 4, 64, 123, &it2);
    REQUIRE(a.size() == 64);
    CHECK(it1 == it2);
    CHECK(a.centroids == b.centroids); // bit-for-bit

    Codebook c = train_codebook(pts, 4, 64, 124);
    CHECK(c.centroids != a.centroids);
}

TEST_CASE("train_codebook: insufficient distinct points") {
    std::vector<float> pts = {1.f, 1.f, 1.f, 1.f, 2.f, 2.f}; // 2 distinct among 3
    CHECK_THROWS_WITH_AS(train_codebook(pts, 2, 3, 1), "insufficient distinct points", error);
    CHECK_NOTHROW(train_codebook(pts, 2, 2, 1));
}

TEST_CASE("assign_nn: exact centroid, ties, and scan oracle") {
    Codebook cb;
    cb.dim = 4;
    rng rand(2);
    cb.centroids = testutil::random_values(rand, 8 * 4);

    // exact hit
    std::vector<float> x(cb.centroid(3).begin(), cb.centroid(3).end());
    CHECK(assign_nn(x, cb) == 3);

    // tie broken toward the smaller index
    Codebook tie;
    tie.dim = 1;
    tie.centroids = {1.0f, -1.0f, 5.0f};
    std::vector<float> origin = {0.0f};
    CHECK(assign_nn(origin, tie) == 0);

    // random probes vs exhaustive scan
    for (int probe = 0; probe < 50; ++probe) {
        auto p = testutil::random_values(rand, 4);
        double best = 1e300;
        std::size_t want = 0;
        for (std::size_t c = 0; c < cb.size(); ++c) {
            double d = 0;
            for (std::size_t j = 0; j < 4; ++j) {
                double t = static_cast<double>(p[j]) - static_cast<double>(cb.centroid(c)[j]);
                d += t * t;
            }
            if (d < best) {
                best = d;
                want = c;
            }
        }
        CHECK(assign_nn(p, cb) == want);
    }

    std::vector<float> wrong_dim = {1.f, 2.f};
    CHECK_THROWS_AS(assign_nn(wrong_dim, cb), error);
}

TEST_CASE("aggregate: empty set, single descriptor, naive-loop oracle") {
    Codebook cb;
    cb.dim = 3;
    rng rand(4);
    cb.centroids = testutil::random_values(rand, 4 * 3);

    SUBCASE("empty descriptor set") {
        VladVector v = aggregate(make_image("empty", 0, {}), cb);
        CHECK(v.block_count == 4);
        for (std::size_t b = 0; b < 4; ++b) {
            CHECK(v.block_is_zero(b));
            for (float f : v.block(b)) CHECK(f == 0.0f);
        }
        VladVector n = normalize(v);
        CHECK(n.degenerate);
    }

    SUBCASE("single descriptor lands in one block") {
        auto x = testutil::random_values(rand, 3);
        VladVector v = aggregate(make_image("one", 3, x), cb);
        std::size_t c = assign_nn(x, cb);
        for (std::size_t b = 0; b < 4; ++b) {
            if (b == c) {
                CHECK_FALSE(v.block_is_zero(b));
                for (std::size_t j = 0; j < 3; ++j)
                    CHECK(v.block(b)[j] ==
                          static_cast<float>(static_cast<double>(x[j]) -
                                             static_cast<double>(cb.centroid(c)[j])));
            } else {
                CHECK(v.block_is_zero(b));
            }
        }
    }

    SUBCASE("ten descriptors equal the naive residual accumulation") {
        auto data = testutil::random_values(rand, 10 * 3);
        VladVector v = aggregate(make_image("ten", 3, data), cb);

        std::vector<double> want(4 * 3, 0.0);
        for (std::size_t t = 0; t < 10; ++t) {
            std::span<const float> x(data.data() + t * 3, 3);
            std::size_t c = assign_nn(x, cb);
            for (std::size_t j = 0; j < 3; ++j)
                want[c * 3 + j] +=
                    static_cast<double>(x[j]) - static_cast<double>(cb.centroid(c)[j]);
        }
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(v.values[i] == static_cast<float>(want[i])); // exact, same summation order
    }
}

TEST_CASE("normalize: zero, single component, unit norm") {
    SUBCASE("all-zero stays zero and is degenerate") {
        auto v = testutil::make_vlad("z", 2, 2, {0, 0, 0, 0});
        VladVector n = normalize(v);
        CHECK(n.degenerate);
        CHECK(n.values == std::vector<float>{0, 0, 0, 0});
    }

    SUBCASE("single scalar 4.0 becomes 1.0") {
        auto v = testutil::make_vlad("s", 2, 2, {0, 4.0f, 0, 0});
        VladVector n = normalize(v);
        CHECK_FALSE(n.degenerate);
        CHECK(n.values[1] == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("signed square root preserves sign") {
        auto v = testutil::make_vlad("neg", 1, 2, {-9.0f, 16.0f});
        VladVector n = normalize(v);
        CHECK(n.values[0] == doctest::Approx(-0.6));
        CHECK(n.values[1] == doctest::Approx(0.8));
    }

    SUBCASE("random vectors end up unit norm") {
        rng rand(9);
        for (int i = 0; i < 20; ++i) {
            VladVector raw = testutil::random_vlad(rand, "r", 4, 8);
            VladVector n = normalize(raw);

            // Oracle: redo the power + L2 pipeline in double. The double
            // arithmetic must hit unit norm to 1e-12; the stored float32
            // components are that result rounded to float.
            std::vector<double> powered(raw.values.size());
            double norm_sq = 0;
            for (std::size_t j = 0; j < raw.values.size(); ++j) {
                double c = raw.values[j];
                powered[j] = c >= 0 ? std::sqrt(c) : -std::sqrt(-c);
                norm_sq += powered[j] * powered[j];
            }
            double inv = 1.0 / std::sqrt(norm_sq);
            double unit = 0;
            for (std::size_t j = 0; j < raw.values.size(); ++j) {
                double u = powered[j] * inv;
                unit += u * u;
                CHECK(n.values[j] == static_cast<float>(u));
            }
            CHECK(std::abs(std::sqrt(unit) - 1.0) < 1e-12);

            double stored = 0;
            for (float f : n.values) stored += static_cast<double>(f) * f;
            CHECK(std::abs(std::sqrt(stored) - 1.0) < 1e-6); // float32 storage
        }
    }
}

TEST_CASE("inner_product: self, orthogonal, loop oracle") {
    rng rand(14);
    VladVector a = normalize(testutil::random_vlad(rand, "a", 2, 5));
    CHECK(std::abs(inner_product(a, a) - 1.0) < 1e-6);

    auto e1 = testutil::make_vlad("e1", 1, 3, {1, 0, 0});
    auto e2 = testutil::make_vlad("e2", 1, 3, {0, 1, 0});
    CHECK(inner_product(e1, e2) == 0.0);

    VladVector b = normalize(testutil::random_vlad(rand, "b", 2, 5));
    double want = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        want += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
    CHECK(inner_product(a, b) == want);

    VladVector c = testutil::random_vlad(rand, "c", 5, 2);
    CHECK_THROWS_AS(inner_product(a, c), error);
}

TEST_CASE("descriptor and codebook files round-trip") {
    TempDir tmp;
    rng rand(21);

    std::vector<LocalDescriptorSet> sets;
    sets.push_back(make_image("first", 4, testutil::random_values(rand, 3 * 4)));
    sets.push_back(make_image("empty", 0, {}));
    sets.push_back(make_image("second", 4, testutil::random_values(rand, 7 * 4)));
    save_descriptors(sets, tmp.file("d.pdsc"));
    auto loaded = load_descriptors(tmp.file("d.pdsc"));
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].image_id == "first");
    CHECK(loaded[0].data == sets[0].data);
    CHECK(loaded[1].count() == 0);
    CHECK(loaded[2].data == sets[2].data);

    Codebook cb = train_codebook(sets[2].data, 4, 3, 17);
    cb.save(tmp.file("c.pcbk"));
    Codebook cb2 = Codebook::load(tmp.file("c.pcbk"));
    CHECK(cb2.dim == cb.dim);
    CHECK(cb2.centroids == cb.centroids);

    // corrupt: truncate the file
    {
        std::ofstream out(tmp.file("bad.pcbk"), std::ios::binary);
        out << "PCBK";
    }
    CHECK_THROWS_AS(Codebook::load(tmp.file("bad.pcbk")), error);
}
