#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "codec.hpp"
#include "helpers.hpp"

using namespace vstr;
using testutil::TempDir;

namespace {

// Dense oracle: expand a truncated permutation to all m ranks (absent = k+1)
// and take the squared L2 distance.
std::int64_t dense_spearman(const TruncatedPermutation& o, const TruncatedPermutation& q) {
    std::vector<std::int64_t> ro(o.m, o.k + 1), rq(q.m, q.k + 1);
    for (auto [ref, rank] : o.entries) ro[ref] = rank;
    for (auto [ref, rank] : q.entries) rq[ref] = rank;
    std::int64_t total = 0;
    for (std::size_t i = 0; i < ro.size(); ++i) total += (ro[i] - rq[i]) * (ro[i] - rq[i]);
    return total;
}

} // namespace

TEST_CASE("select_references: exhaustive pool, determinism, errors") {
    rng rand(31);
    std::vector<VladVector> dataset;
    for (int i = 0; i < 6; ++i)
        dataset.push_back(normalize(testutil::random_vlad(rand, "v" + std::to_string(i), 2, 3)));

    SUBCASE("m equal to the candidate count returns the whole pool") {
        ReferenceSet rs = select_references(dataset, 6, RefMode::whole, 42);
        REQUIRE(rs.size() == 6);
        std::set<std::vector<float>> got, want;
        for (std::size_t i = 0; i < 6; ++i) {
            got.insert(std::vector<float>(rs.ref(i).begin(), rs.ref(i).end()));
            want.insert(dataset[i].values);
        }
        CHECK(got == want);
    }

    SUBCASE("same seed, same references") {
        ReferenceSet a = select_references(dataset, 3, RefMode::whole, 7);
        ReferenceSet b = select_references(dataset, 3, RefMode::whole, 7);
        CHECK(a.refs == b.refs);
    }

    SUBCASE("insufficient candidates") {
        CHECK_THROWS_WITH_AS(select_references(dataset, 7, RefMode::whole, 1),
                             "insufficient distinct candidates", error);
        // duplicates collapse: two copies of one vector is one candidate
        std::vector<VladVector> dup = {dataset[0], dataset[0]};
        CHECK_THROWS_AS(select_references(dup, 2, RefMode::whole, 1), error);
    }

    SUBCASE("blockwise pool draws nonzero blocks") {
        std::vector<VladVector> ds = dataset;
        testutil::zero_out_blocks(ds[0], {0});
        ReferenceSet rs = select_references(ds, 11, RefMode::blockwise, 9);
        REQUIRE(rs.size() == 11); // 12 blocks minus the zeroed one
        CHECK(rs.dim == 3);
        for (std::size_t i = 0; i < rs.size(); ++i) {
            bool zero = std::all_of(rs.ref(i).begin(), rs.ref(i).end(),
                                    [](float f) { return f == 0.0f; });
            CHECK_FALSE(zero);
        }
    }
}

TEST_CASE("select_references: paper-sized reference sets") {
    rng rand(33);
    std::vector<VladVector> dataset;
    for (int i = 0; i < 4000; ++i)
        dataset.push_back(testutil::random_vlad(rand, "v" + std::to_string(i), 8, 4));

    ReferenceSet whole = select_references(dataset, 4000, RefMode::whole, 1);
    CHECK(whole.size() == 4000);
    CHECK(whole.dim == 32);

    ReferenceSet block = select_references(dataset, 20000, RefMode::blockwise, 1);
    CHECK(block.size() == 20000);
    CHECK(block.dim == 4);
}

TEST_CASE("compute_permutation: zero distance, ties, sort oracle") {
    rng rand(35);
    ReferenceSet rs = testutil::random_refs(rand, RefMode::whole, 4, 10);

    SUBCASE("an object sitting on a reference ranks it first") {
        std::vector<float> o(rs.ref(2).begin(), rs.ref(2).end());
        auto p = compute_permutation(o, rs);
        CHECK(p[2] == 1);
    }

    SUBCASE("equidistant references: the lower index wins") {
        ReferenceSet tie = testutil::make_refs(RefMode::whole, 1, {{1.0f}, {-1.0f}, {9.0f}});
        std::vector<float> origin = {0.0f};
        auto p = compute_permutation(origin, tie);
        CHECK(p[0] == 1);
        CHECK(p[1] == 2);
        CHECK(p[2] == 3);
    }

    SUBCASE("ranks match a full sort and form a bijection") {
        for (int probe = 0; probe < 25; ++probe) {
            auto o = testutil::random_values(rand, 4);
            auto p = compute_permutation(o, rs);

            std::vector<double> dist(rs.size());
            for (std::size_t i = 0; i < rs.size(); ++i) {
                double s = 0;
                for (std::size_t j = 0; j < 4; ++j) {
                    double d = static_cast<double>(o[j]) - static_cast<double>(rs.ref(i)[j]);
                    s += d * d;
                }
                dist[i] = s;
            }
            std::vector<std::uint32_t> order(rs.size());
            std::iota(order.begin(), order.end(), 0u);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return dist[a] < dist[b]; });
            for (std::size_t pos = 0; pos < order.size(); ++pos)
                CHECK(p[order[pos]] == pos + 1);

            std::set<std::uint32_t> ranks(p.begin(), p.end());
            CHECK(ranks.size() == rs.size());
            CHECK(*ranks.begin() == 1);
            CHECK(*ranks.rbegin() == rs.size());
        }
    }

    SUBCASE("dimension mismatch") {
        std::vector<float> wrong = {1.0f};
        CHECK_THROWS_AS(compute_permutation(wrong, rs), error);
    }
}

TEST_CASE("truncate_permutation: identity, k=1, worked ranks") {
    PermutationVector p = {3, 2, 5, 4, 1};

    SUBCASE("k = m keeps everything") {
        auto t = truncate_permutation(p, 5);
        REQUIRE(t.entries.size() == 5);
        for (auto [ref, rank] : t.entries) CHECK(rank == p[ref]);
    }

    SUBCASE("k = 1 keeps only the nearest") {
        auto t = truncate_permutation(p, 1);
        REQUIRE(t.entries.size() == 1);
        CHECK(t.entries[0].first == 4);
        CHECK(t.entries[0].second == 1);
    }

    SUBCASE("k = 3 keeps refs 1, 2, 5") {
        auto t = truncate_permutation(p, 3);
        REQUIRE(t.entries.size() == 3);
        CHECK(t.entries[0] == std::pair<std::uint32_t, std::uint32_t>{0, 3});
        CHECK(t.entries[1] == std::pair<std::uint32_t, std::uint32_t>{1, 2});
        CHECK(t.entries[2] == std::pair<std::uint32_t, std::uint32_t>{4, 1});
    }

    SUBCASE("bounds") {
        CHECK_THROWS_AS(truncate_permutation(p, 0), error);
        CHECK_THROWS_AS(truncate_permutation(p, 6), error);
    }
}

TEST_CASE("surrogate_weights: worked example and k=1") {
    auto w = testutil::worked_example();

    auto p1 = compute_permutation(w.o1.values, w.refs);
    auto w1 = surrogate_weights(truncate_permutation(p1, 3));
    // nearest E,B,A -> weights E:3 B:2 A:1 (indices 4,1,0)
    REQUIRE(w1.size() == 3);
    std::map<std::uint32_t, std::uint32_t> m1(w1.begin(), w1.end());
    CHECK(m1[4] == 3);
    CHECK(m1[1] == 2);
    CHECK(m1[0] == 1);

    auto pq = compute_permutation(w.q.values, w.refs);
    auto wq = surrogate_weights(truncate_permutation(pq, 2));
    std::map<std::uint32_t, std::uint32_t> mq(wq.begin(), wq.end());
    REQUIRE(wq.size() == 2);
    CHECK(mq[4] == 2);
    CHECK(mq[0] == 1);

    auto w_one = surrogate_weights(truncate_permutation(pq, 1));
    REQUIRE(w_one.size() == 1);
    CHECK(w_one[0].second == 1);
}

TEST_CASE("spearman_rho_loc: zero, worked value, disjoint closed form, dense oracle") {
    SUBCASE("identical truncations are at distance zero") {
        PermutationVector p = {2, 4, 1, 3};
        auto t = truncate_permutation(p, 2);
        CHECK(spearman_rho_loc(t, t) == 0);
    }

    SUBCASE("hand-derived m=4 example") {
        // o ranks truncate to (1,2,3,3), q's to (3,3,1,2); distance 4+1+4+1.
        PermutationVector po = {1, 2, 3, 4};
        PermutationVector pq = {3, 4, 1, 2};
        auto to = truncate_permutation(po, 2);
        auto tq = truncate_permutation(pq, 2);
        CHECK(spearman_rho_loc(to, tq) == 10);
        CHECK(dense_spearman(to, tq) == 10);
    }

    SUBCASE("disjoint top-k sets follow the closed form") {
        // m=8, k=3: o keeps refs 0..2, q keeps refs 5..7.
        PermutationVector po = {1, 2, 3, 4, 5, 6, 7, 8};
        PermutationVector pq = {8, 7, 6, 5, 4, 3, 2, 1};
        auto to = truncate_permutation(po, 3);
        auto tq = truncate_permutation(pq, 3);
        std::int64_t want = 0;
        for (std::int64_t r = 1; r <= 3; ++r) want += 2 * (3 + 1 - r) * (3 + 1 - r);
        CHECK(spearman_rho_loc(to, tq) == want);
        CHECK(dense_spearman(to, tq) == want);
    }

    SUBCASE("random pairs against the dense loop, asymmetric depths") {
        rng rand(41);
        ReferenceSet rs = testutil::random_refs(rand, RefMode::whole, 3, 12);
        for (int probe = 0; probe < 40; ++probe) {
            auto a = testutil::random_values(rand, 3);
            auto b = testutil::random_values(rand, 3);
            std::uint32_t kx = 1 + static_cast<std::uint32_t>(rand.below(12));
            std::uint32_t kq = 1 + static_cast<std::uint32_t>(rand.below(kx));
            auto to = truncate_permutation(compute_permutation(a, rs), kx);
            auto tq = truncate_permutation(compute_permutation(b, rs), kq);
            CHECK(spearman_rho_loc(to, tq) == dense_spearman(to, tq));
            CHECK(spearman_rho_loc(tq, to) == dense_spearman(tq, to));
        }
    }

    SUBCASE("mismatched reference sets are rejected") {
        auto t1 = truncate_permutation(PermutationVector{1, 2, 3}, 2);
        auto t2 = truncate_permutation(PermutationVector{1, 2, 3, 4}, 2);
        CHECK_THROWS_AS(spearman_rho_loc(t1, t2), error);
    }
}

TEST_CASE("encode_str: worked encodings, term counts, degenerate input") {
    auto w = testutil::worked_example();

    SUBCASE("worked example documents") {
        auto d1 = encode_str(w.o1, w.refs, 3);
        CHECK(d1.terms ==
              std::map<std::string, std::uint32_t>{{"r5", 3}, {"r2", 2}, {"r1", 1}});
        auto d2 = encode_str(w.o2, w.refs, 3);
        CHECK(d2.terms ==
              std::map<std::string, std::uint32_t>{{"r4", 3}, {"r3", 2}, {"r5", 1}});
        auto dq = encode_str(w.q, w.refs, 2);
        CHECK(dq.terms == std::map<std::string, std::uint32_t>{{"r5", 2}, {"r1", 1}});
        CHECK(document_line(dq) == "q\tr1:1 r5:2");
    }

    SUBCASE("k terms with weights k..1") {
        rng rand(43);
        ReferenceSet rs = testutil::random_refs(rand, RefMode::whole, 6, 20);
        auto v = testutil::random_vlad(rand, "v", 2, 3);
        auto doc = encode_str(v, rs, 5);
        REQUIRE(doc.terms.size() == 5);
        std::multiset<std::uint32_t> weights;
        for (auto& [t, wgt] : doc.terms) weights.insert(wgt);
        CHECK(weights == std::multiset<std::uint32_t>{1, 2, 3, 4, 5});

        auto one = encode_str(v, rs, 1);
        REQUIRE(one.terms.size() == 1);
        CHECK(one.terms.begin()->second == 1);
    }

    SUBCASE("degenerate vectors are unindexable") {
        auto z = normalize(testutil::make_vlad("z", 1, 2, {0.0f, 0.0f}));
        try {
            encode_str(z, w.refs, 2);
            FAIL("expected unindexable error");
        } catch (const error& e) {
            CHECK(e.code() == errc::unindexable);
        }
    }
}

TEST_CASE("encode_bstr: K=1 baseline equivalence, zero blocks, term counts") {
    rng rand(47);

    SUBCASE("K=1 blockwise equals whole-vector weights") {
        ReferenceSet whole = testutil::random_refs(rand, RefMode::whole, 6, 15);
        ReferenceSet block = whole;
        block.mode = RefMode::blockwise;
        auto v = testutil::random_vlad(rand, "v", 1, 6);
        auto ds = encode_str(v, whole, 4);
        auto db = encode_bstr(v, block, 4);
        REQUIRE(ds.terms.size() == db.terms.size());
        for (const auto& [term, wgt] : ds.terms) {
            REQUIRE(db.terms.count(term + "_b1") == 1);
            CHECK(db.terms.at(term + "_b1") == wgt);
        }
    }

    SUBCASE("zero blocks emit nothing") {
        ReferenceSet rs = testutil::random_refs(rand, RefMode::blockwise, 3, 10);
        auto v = testutil::random_vlad(rand, "v", 4, 3);
        testutil::zero_out_blocks(v, {1, 2});
        auto doc = encode_bstr(v, rs, 3);
        CHECK(doc.terms.size() == 6); // two live blocks, k terms each
        for (const auto& [term, wgt] : doc.terms) {
            bool b1 = term.find("_b1") != std::string::npos;
            bool b4 = term.find("_b4") != std::string::npos;
            CHECK((b1 || b4));
        }
    }

    SUBCASE("K=8, k=10: 80 terms, each block carries weights 10..1") {
        ReferenceSet rs = testutil::random_refs(rand, RefMode::blockwise, 4, 25);
        auto v = testutil::random_vlad(rand, "v", 8, 4);
        auto doc = encode_bstr(v, rs, 10);
        REQUIRE(doc.terms.size() == 80);
        for (std::size_t b = 1; b <= 8; ++b) {
            std::multiset<std::uint32_t> weights;
            std::string suffix = "_b" + std::to_string(b);
            for (const auto& [term, wgt] : doc.terms)
                if (term.size() >= suffix.size() &&
                    term.compare(term.size() - suffix.size(), suffix.size(), suffix) == 0)
                    weights.insert(wgt);
            CHECK(weights == std::multiset<std::uint32_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
        }
    }

    SUBCASE("all blocks zero is unindexable") {
        ReferenceSet rs = testutil::random_refs(rand, RefMode::blockwise, 3, 10);
        auto v = testutil::random_vlad(rand, "v", 2, 3);
        testutil::zero_out_blocks(v, {0, 1});
        CHECK_THROWS_AS(encode_bstr(v, rs, 3), error);
    }
}

TEST_CASE("weight vector norm identity: k(k+1)(2k+1)/6") {
    rng rand(53);
    ReferenceSet rs = testutil::random_refs(rand, RefMode::blockwise, 4, 60);
    for (std::uint32_t k : {1u, 5u, 50u}) {
        for (int probe = 0; probe < 30; ++probe) {
            auto v = testutil::random_vlad(rand, "v", 3, 4);
            auto doc = encode_bstr(v, rs, k);
            std::map<std::string, std::int64_t> per_block;
            for (const auto& [term, wgt] : doc.terms) {
                auto pos = term.find("_b");
                per_block[term.substr(pos)] += static_cast<std::int64_t>(wgt) * wgt;
            }
            REQUIRE(per_block.size() == 3);
            std::int64_t want = static_cast<std::int64_t>(k) * (k + 1) * (2 * k + 1) / 6;
            for (const auto& [block, norm_sq] : per_block) CHECK(norm_sq == want);
        }
    }
}

TEST_CASE("blockwise_distance: identity, K=1, per-block sum, dense oracle") {
    rng rand(59);
    ReferenceSet rs = testutil::random_refs(rand, RefMode::blockwise, 4, 12);

    SUBCASE("identical vectors at equal depth are at distance zero") {
        auto v = testutil::random_vlad(rand, "v", 4, 4);
        CHECK(blockwise_distance(v, v, rs, 5, 5) == 0);
    }

    SUBCASE("K=1 reduces to spearman_rho_loc") {
        auto a = testutil::random_vlad(rand, "a", 1, 4);
        auto b = testutil::random_vlad(rand, "b", 1, 4);
        auto to = truncate_permutation(compute_permutation(a.block(0), rs), 6);
        auto tq = truncate_permutation(compute_permutation(b.block(0), rs), 3);
        CHECK(blockwise_distance(a, b, rs, 6, 3) == spearman_rho_loc(to, tq));
    }

    SUBCASE("K=3 equals the sum of independent per-block distances") {
        auto a = testutil::random_vlad(rand, "a", 3, 4);
        auto b = testutil::random_vlad(rand, "b", 3, 4);
        std::int64_t want = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            auto to = truncate_permutation(compute_permutation(a.block(j), rs), 7);
            auto tq = truncate_permutation(compute_permutation(b.block(j), rs), 4);
            want += spearman_rho_loc(to, tq);
        }
        CHECK(blockwise_distance(a, b, rs, 7, 4) == want);
    }

    SUBCASE("dense concatenated-rank oracle, zero blocks included") {
        const std::uint32_t m = 12;
        for (int probe = 0; probe < 30; ++probe) {
            auto a = testutil::random_vlad(rand, "a", 4, 4);
            auto b = testutil::random_vlad(rand, "b", 4, 4);
            if (probe % 2) testutil::zero_out_blocks(a, {static_cast<std::uint32_t>(probe % 4)});
            if (probe % 3) testutil::zero_out_blocks(b, {static_cast<std::uint32_t>((probe + 1) % 4)});
            std::uint32_t kx = 2 + static_cast<std::uint32_t>(rand.below(10));
            std::uint32_t kq = 1 + static_cast<std::uint32_t>(rand.below(kx));

            // Dense oracle over the concatenated rank vectors; a zero block's
            // truncated ranks are all k+1.
            std::vector<std::int64_t> ra, rb;
            for (std::size_t j = 0; j < 4; ++j) {
                if (a.block_is_zero(j)) {
                    ra.insert(ra.end(), m, kx + 1);
                } else {
                    auto p = compute_permutation(a.block(j), rs);
                    for (auto r : p) ra.push_back(std::min<std::uint32_t>(r, kx + 1));
                }
                if (b.block_is_zero(j)) {
                    rb.insert(rb.end(), m, kq + 1);
                } else {
                    auto p = compute_permutation(b.block(j), rs);
                    for (auto r : p) rb.push_back(std::min<std::uint32_t>(r, kq + 1));
                }
            }
            std::int64_t want = 0;
            for (std::size_t i = 0; i < ra.size(); ++i)
                want += (ra[i] - rb[i]) * (ra[i] - rb[i]);
            CHECK(blockwise_distance(a, b, rs, kx, kq) == want);
        }
    }

    SUBCASE("shape mismatch is rejected") {
        auto a = testutil::random_vlad(rand, "a", 3, 4);
        auto b = testutil::random_vlad(rand, "b", 2, 4);
        CHECK_THROWS_AS(blockwise_distance(a, b, rs, 3, 3), error);
    }
}

TEST_CASE("reference set file round-trip") {
    TempDir tmp;
    rng rand(61);
    ReferenceSet rs = testutil::random_refs(rand, RefMode::blockwise, 5, 9);
    rs.seed = 123456789ull;
    rs.save(tmp.file("r.pref"));
    ReferenceSet back = ReferenceSet::load(tmp.file("r.pref"));
    CHECK(back.mode == rs.mode);
    CHECK(back.dim == rs.dim);
    CHECK(back.seed == rs.seed);
    CHECK(back.refs == rs.refs);

    {
        std::ofstream out(tmp.file("bad.pref"), std::ios::binary);
        out << "PREF\x01";
    }
    CHECK_THROWS_AS(ReferenceSet::load(tmp.file("bad.pref")), error);
}
