#include "vlad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vstr {

namespace {

double sq_dist(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

double sq_dist(std::span<const double> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

std::size_t count_distinct(std::span<const float> training, std::size_t dim) {
    std::size_t n = training.size() / dim;
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    auto row = [&](std::uint32_t i) { return training.subspan(i * dim, dim); };
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        auto ra = row(a), rb = row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    std::size_t distinct = n == 0 ? 0 : 1;
    for (std::size_t i = 1; i < n; ++i) {
        auto ra = row(order[i - 1]), rb = row(order[i]);
        if (!std::equal(ra.begin(), ra.end(), rb.begin())) ++distinct;
    }
    return distinct;
}

// k-means++ seeding: first centre uniform, then D^2-weighted draws.
std::vector<std::vector<double>> kmeanspp_init(std::span<const float> training, std::size_t dim,
                                               std::size_t k, rng& rand) {
    std::size_t n = training.size() / dim;
    auto row = [&](std::size_t i) { return training.subspan(i * dim, dim); };

    std::vector<std::vector<double>> centres;
    centres.reserve(k);
    auto take = [&](std::size_t i) {
        auto r = row(i);
        centres.emplace_back(r.begin(), r.end());
    };

    take(rand.below(n));
    std::vector<double> best(n, std::numeric_limits<double>::max());
    while (centres.size() < k) {
        const auto& last = centres.back();
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = sq_dist(std::span<const double>(last), row(i));
            if (d < best[i]) best[i] = d;
            total += best[i];
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rand.below(n);
        } else {
            double target = rand.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += best[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        }
        take(pick);
    }
    return centres;
}

} // namespace

Codebook train_codebook(std::span<const float> training, std::size_t dim, std::size_t k,
                        std::uint64_t seed, std::size_t* iterations_out) {
    require(dim > 0, errc::invalid_argument, "train_codebook: dimension must be positive");
    require(k > 0, errc::invalid_argument, "train_codebook: k must be positive");
    require(training.size() % dim == 0, errc::invalid_argument,
            "train_codebook: training data size not a multiple of dim");
    std::size_t n = training.size() / dim;
    require(n >= k, errc::invalid_argument, "insufficient distinct points");
    require(count_distinct(training, dim) >= k, errc::invalid_argument,
            "insufficient distinct points");

    rng rand(seed);
    auto centres = kmeanspp_init(training, dim, k, rand);
    auto row = [&](std::size_t i) { return training.subspan(i * dim, dim); };

    std::vector<std::uint32_t> assign(n, 0);
    std::vector<double> point_dist(n, 0.0);
    constexpr std::size_t max_iterations = 25;
    std::size_t iterations = 0;

    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        ++iterations;
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            auto x = row(i);
            std::uint32_t nearest = 0;
            double best = std::numeric_limits<double>::max();
            for (std::size_t c = 0; c < k; ++c) {
                double d = sq_dist(std::span<const double>(centres[c]), x);
                if (d < best) {
                    best = d;
                    nearest = static_cast<std::uint32_t>(c);
                }
            }
            point_dist[i] = best;
            if (assign[i] != nearest) {
                assign[i] = nearest;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto x = row(i);
            auto& s = sums[assign[i]];
            for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
            ++counts[assign[i]];
        }

        // Empty clusters steal the point currently farthest from its centroid.
        std::vector<std::uint8_t> stolen(n, 0);
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = n;
            double far_dist = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (stolen[i] || counts[assign[i]] <= 1) continue;
                if (point_dist[i] > far_dist) {
                    far_dist = point_dist[i];
                    far = i;
                }
            }
            if (far == n) continue;
            stolen[far] = 1;
            auto x = row(far);
            --counts[assign[far]];
            for (std::size_t j = 0; j < dim; ++j) sums[assign[far]][j] -= x[j];
            assign[far] = static_cast<std::uint32_t>(c);
            counts[c] = 1;
            sums[c].assign(x.begin(), x.end());
            changed = true;
        }

        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t j = 0; j < dim; ++j)
                centres[c][j] = sums[c][j] / static_cast<double>(counts[c]);
        }
    }

    Codebook cb;
    cb.dim = dim;
    cb.centroids.resize(k * dim);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < dim; ++j)
            cb.centroids[c * dim + j] = static_cast<float>(centres[c][j]);
    if (iterations_out) *iterations_out = iterations;
    return cb;
}

std::size_t assign_nn(std::span<const float> x, const Codebook& codebook) {
    require(x.size() == codebook.dim, errc::invalid_argument,
            "assign_nn: descriptor dimension mismatch");
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::max();
    for (std::size_t c = 0; c < codebook.size(); ++c) {
        double d = sq_dist(x, codebook.centroid(c));
        if (d < best) {
            best = d;
            nearest = c;
        }
    }
    return nearest;
}

VladVector aggregate(const LocalDescriptorSet& image, const Codebook& codebook) {
    require(image.count() == 0 || image.dim == codebook.dim, errc::invalid_argument,
            "aggregate: descriptor dimension mismatch");
    std::size_t k = codebook.size();
    std::size_t d = codebook.dim;

    VladVector v;
    v.image_id = image.image_id;
    v.block_count = k;
    v.block_dim = d;
    v.values.assign(k * d, 0.0f);
    std::vector<std::uint8_t> hit(k, 0);

    std::vector<double> acc(k * d, 0.0);
    for (std::size_t t = 0; t < image.count(); ++t) {
        auto x = image.descriptor(t);
        std::size_t c = assign_nn(x, codebook);
        auto mu = codebook.centroid(c);
        for (std::size_t j = 0; j < d; ++j)
            acc[c * d + j] += static_cast<double>(x[j]) - static_cast<double>(mu[j]);
        hit[c] = 1;
    }

    v.zero_flags.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        v.zero_flags[c] = hit[c] ? 0 : 1;
        if (hit[c])
            for (std::size_t j = 0; j < d; ++j)
                v.values[c * d + j] = static_cast<float>(acc[c * d + j]);
    }
    return v;
}

VladVector normalize(VladVector v) {
    double norm_sq = 0.0;
    std::vector<double> powered(v.values.size());
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        double c = v.values[i];
        double p = c >= 0.0 ? std::sqrt(c) : -std::sqrt(-c);
        powered[i] = p;
        norm_sq += p * p;
    }
    if (norm_sq == 0.0) {
        v.degenerate = true;
        return v;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t i = 0; i < v.values.size(); ++i)
        v.values[i] = static_cast<float>(powered[i] * inv);
    v.degenerate = false;
    return v;
}

double inner_product(const VladVector& a, const VladVector& b) {
    require(a.block_count == b.block_count && a.block_dim == b.block_dim,
            errc::invalid_argument, "inner_product: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        s += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
    return s;
}

// --- file formats -----------------------------------------------------------

void Codebook::save(const std::filesystem::path& path) const {
    binary_writer w(path);
    w.magic("PCBK");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(size()));
    w.u32(static_cast<std::uint32_t>(dim));
    for (float f : centroids) w.f32(f);
    w.close();
}

Codebook Codebook::load(const std::filesystem::path& path) {
    binary_reader r(path);
    r.expect_magic("PCBK", "codebook");
    std::uint32_t version = r.u32();
    require(version == 1, errc::format, "unsupported codebook version");
    std::uint32_t k = r.u32();
    std::uint32_t d = r.u32();
    require(k > 0 && d > 0, errc::format, "corrupt codebook header");
    Codebook cb;
    cb.dim = d;
    cb.centroids.resize(static_cast<std::size_t>(k) * d);
    for (auto& f : cb.centroids) f = r.f32();
    return cb;
}

void save_descriptors(std::span<const LocalDescriptorSet> sets, const std::filesystem::path& path) {
    std::size_t dim = 0;
    for (const auto& s : sets)
        if (s.count() > 0) {
            dim = s.dim;
            break;
        }
    binary_writer w(path);
    w.magic("PDSC");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(dim));
    w.u64(sets.size());
    for (const auto& s : sets) {
        require(s.count() == 0 || s.dim == dim, errc::invalid_argument,
                "save_descriptors: mixed descriptor dimensions");
        w.str(s.image_id);
        w.u32(static_cast<std::uint32_t>(s.count()));
        for (float f : s.data) w.f32(f);
    }
    w.close();
}

std::vector<LocalDescriptorSet> load_descriptors(const std::filesystem::path& path) {
    binary_reader r(path);
    r.expect_magic("PDSC", "descriptor");
    std::uint32_t version = r.u32();
    require(version == 1, errc::format, "unsupported descriptor file version");
    std::uint32_t dim = r.u32();
    std::uint64_t count = r.u64();
    std::vector<LocalDescriptorSet> sets;
    sets.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        LocalDescriptorSet s;
        s.image_id = r.str();
        std::uint32_t n = r.u32();
        s.dim = dim;
        s.data.resize(static_cast<std::size_t>(n) * dim);
        for (auto& f : s.data) f = r.f32();
        sets.push_back(std::move(s));
    }
    return sets;
}

std::vector<VladVector> encode_vlads(std::span<const LocalDescriptorSet> images, const Codebook& codebook) {
    std::vector<VladVector> out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(normalize(aggregate(img, codebook)));
    return out;
}

} // namespace vstr
