#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include <dccc/synthetic.hpp>

using namespace dccc;

static DatasetSpec tiny_spec() {
    DatasetSpec s;
    s.num_ids = 2;
    s.images_per_id = 3;
    s.input_dim = 8;
    s.num_cameras = 2;
    s.seed = 5;
    return s;
}

TEST_CASE("generate_dataset counts samples and labels id-major") {
    const auto ds = generate_dataset(tiny_spec());
    REQUIRE(ds.size() == 6);
    REQUIRE(ds.samples.cols() == 8);
    REQUIRE(ds.true_ids == std::vector<int>{0, 0, 0, 1, 1, 1});
    for (int cam : ds.cam_ids) {
        REQUIRE(cam >= 0);
        REQUIRE(cam < 2);
    }
}

TEST_CASE("every identity spans all cameras when images_per_id >= num_cameras") {
    DatasetSpec s;
    s.num_ids = 3;
    s.images_per_id = 8;
    s.input_dim = 4;
    s.num_cameras = 4;
    const auto ds = generate_dataset(s);
    for (std::size_t id = 0; id < s.num_ids; ++id) {
        std::set<int> cams;
        for (std::size_t img = 0; img < s.images_per_id; ++img)
            cams.insert(ds.cam_ids[id * s.images_per_id + img]);
        REQUIRE(cams.size() == 4);
    }
}

TEST_CASE("zero intra noise and zero camera shift collapse each identity") {
    DatasetSpec s = tiny_spec();
    s.intra_noise = 0.0;
    s.camera_shift = 0.0;
    const auto ds = generate_dataset(s);
    for (std::size_t id = 0; id < s.num_ids; ++id) {
        const auto first = ds.samples.row(id * s.images_per_id);
        for (std::size_t img = 1; img < s.images_per_id; ++img) {
            const auto other = ds.samples.row(id * s.images_per_id + img);
            REQUIRE(std::equal(first.begin(), first.end(), other.begin()));
        }
    }
}

TEST_CASE("generate_dataset is bit-identical across reruns") {
    DatasetSpec s;
    s.num_ids = 32;
    s.images_per_id = 16;
    s.seed = 7;
    const auto a = generate_dataset(s);
    const auto b = generate_dataset(s);
    REQUIRE(a.samples == b.samples);
    REQUIRE(a.true_ids == b.true_ids);
    REQUIRE(a.cam_ids == b.cam_ids);
}

TEST_CASE("invalid dataset specs name the offending field") {
    DatasetSpec s = tiny_spec();
    s.num_ids = 1;
    REQUIRE_THROWS_MATCHES(generate_dataset(s), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("num_ids")));
    s = tiny_spec();
    s.intra_noise = -0.1;
    REQUIRE_THROWS_MATCHES(generate_dataset(s), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("intra_noise")));
}

TEST_CASE("separable data classifies by nearest neighbor on raw features") {
    DatasetSpec s;
    s.num_ids = 16;
    s.images_per_id = 8;
    s.input_dim = 32;
    s.id_spread = 1.0;
    s.intra_noise = 0.02;
    s.camera_shift = 0.05;
    s.seed = 11;
    const auto ds = generate_dataset(s);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double best = 1e300;
        std::size_t best_j = i;
        for (std::size_t j = 0; j < ds.size(); ++j) {
            if (j == i) continue;
            const double d = squared_distance(ds.samples.row(i), ds.samples.row(j));
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        if (ds.true_ids[best_j] == ds.true_ids[i]) ++correct;
    }
    REQUIRE(static_cast<double>(correct) / static_cast<double>(ds.size()) > 0.95);
}

TEST_CASE("split produces disjoint per-id query and gallery sets") {
    DatasetSpec s = tiny_spec();
    s.images_per_id = 4;
    const auto ds = generate_dataset(s);
    const auto split = split_query_gallery(ds, 1, 9);

    REQUIRE(split.query.size() == 2);
    REQUIRE(split.gallery.size() == 6);

    std::set<std::size_t> q(split.query.begin(), split.query.end());
    for (std::size_t g : split.gallery) REQUIRE(q.count(g) == 0);

    // every id holds exactly query_per_id queries and at least one gallery row
    for (std::size_t id = 0; id < s.num_ids; ++id) {
        const auto count_id = [&](const std::vector<std::size_t>& rows) {
            return std::count_if(rows.begin(), rows.end(), [&](std::size_t r) {
                return ds.true_ids[r] == static_cast<int>(id);
            });
        };
        REQUIRE(count_id(split.query) == 1);
        REQUIRE(count_id(split.gallery) >= 1);
    }
}

TEST_CASE("split is deterministic and rejects query_per_id >= images_per_id") {
    const auto ds = generate_dataset(tiny_spec());
    const auto a = split_query_gallery(ds, 1, 3);
    const auto b = split_query_gallery(ds, 1, 3);
    REQUIRE(a.query == b.query);
    REQUIRE(a.gallery == b.gallery);
    REQUIRE_THROWS_AS(split_query_gallery(ds, 3, 3), ConfigError);
}

TEST_CASE("augment with zeroed parameters is the identity") {
    Rng rng(1);
    const std::vector<double> x = {1.0, -2.0, 0.5, 0.0};
    AugmentParams p;
    p.noise_std = 0.0;
    p.dropout_prob = 0.0;
    REQUIRE(augment(x, p, rng) == x);
}

TEST_CASE("augment rejects dropout probability one") {
    Rng rng(1);
    AugmentParams p;
    p.dropout_prob = 1.0;
    REQUIRE_THROWS_AS(augment(std::vector<double>{1.0}, p, rng), ConfigError);
}

TEST_CASE("augment is reproducible from the rng state and perturbs views apart") {
    const std::vector<double> x = {1.0, -2.0, 0.5, 0.0, 3.0, -1.0};
    AugmentParams p;
    Rng rng1(77), rng2(77);
    const auto a = augment(x, p, rng1);
    const auto b = augment(x, p, rng2);
    REQUIRE(a == b);

    const auto c = augment(x, p, rng1); // same stream, next draw
    REQUIRE(a != c);
    REQUIRE(a != x);
}
