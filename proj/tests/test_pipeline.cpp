#include "craft/evaluation.hpp"
#include "craft/feature_table.hpp"
#include "craft/model_io.hpp"
#include "craft/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace craft;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name)
    {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

FeatureTable small_table()
{
    FeatureTable t;
    t.data.resize(3, 4);
    t.data << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12.5f;
    t.records = {{0, 10, 0, "a.png"}, {1, 10, 1, "b.png"}, {2, 11, 0, "c,d.png"}, {3, 11, 1, ""}};
    return t;
}

std::string message_of(auto&& fn)
{
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

TrainConfig small_config(Baseline b)
{
    TrainConfig c;
    c.baseline = b;
    c.r = 5;
    c.k1 = 1;
    c.k2 = 20;
    c.dim = 6;
    return c;
}

}  // namespace

TEST_CASE("FTB1 and manifest round trip")
{
    const auto t = small_table();
    const std::string bytes = encode_ftb1(t.data);
    CHECK(bytes.size() == 12 + 4 * 12);
    CHECK(decode_ftb1(bytes, "mem") == t.data);
    CHECK(encode_ftb1(decode_ftb1(bytes, "mem")) == bytes);

    const std::string manifest = encode_manifest(t.records);
    CHECK(manifest.rfind("index,person,camera,path\n", 0) == 0);
    const auto records = decode_manifest(manifest, "mem");
    REQUIRE(records.size() == 4);
    CHECK(records[2].path == "c,d.png");
    CHECK(encode_manifest(records) == manifest);

    TempDir dir("craft_pipeline_roundtrip");
    save_feature_dir(t, dir.path);
    const auto back = load_feature_dir(dir.path);
    CHECK(back.data == t.data);
    CHECK(back.records.size() == 4);
    CHECK(read_file(dir.path / "features.ftb") == bytes);
    CHECK(read_file(dir.path / "manifest.csv") == manifest);
}

TEST_CASE("FTB1 errors")
{
    const std::string bytes = encode_ftb1(small_table().data);
    const auto msg = message_of([&] { (void)decode_ftb1(bytes.substr(0, bytes.size() - 3), "x.ftb"); });
    CHECK(msg.find("x.ftb") != std::string::npos);
    CHECK(msg.find("expected 60") != std::string::npos);
    CHECK(msg.find("found 57") != std::string::npos);
    CHECK_THROWS_AS(decode_ftb1(bytes + "!", "x"), ParseError);
    CHECK_THROWS_AS(decode_ftb1("FTB", "x"), ParseError);
    CHECK_THROWS_AS(decode_ftb1("XTB1" + bytes.substr(4), "x"), ParseError);
}

TEST_CASE("manifest errors carry line numbers")
{
    CHECK_THROWS_AS(decode_manifest("", "m"), ParseError);
    CHECK_THROWS_AS(decode_manifest("idx,person\n", "m"), ParseError);

    const std::string text = "index,person,camera,path\n0,1,0,a\nzero,1,0,b\n0,2,1,c\n2,2,-1,d\n3,3\n";
    const auto msg = message_of([&] { (void)decode_manifest(text, "m.csv"); });
    CHECK(msg.find("4 malformed") != std::string::npos);
    CHECK(msg.find("line 3: malformed row") != std::string::npos);
    CHECK(msg.find("line 4: duplicate sample index 0 (first at line 2)") != std::string::npos);
    CHECK(msg.find("line 5: malformed row") != std::string::npos);
    CHECK(msg.find("line 6: malformed row") != std::string::npos);

    // CRLF endings and a trailing blank line are accepted; rows may come in any order.
    const auto recs = decode_manifest("index,person,camera,path\r\n1,5,1,b\r\n0,4,0,a\r\n\r\n", "m");
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].person == 4);
    CHECK(recs[1].path == "b");
}

TEST_CASE("table validation")
{
    auto t = small_table();
    CHECK_NOTHROW(validate(t));
    CHECK(t.camera_count() == 2);

    auto gap = t;
    gap.records[1].camera = 2;
    gap.records[3].camera = 2;
    const auto msg = message_of([&] { validate(gap); });
    CHECK(msg.find("not contiguous") != std::string::npos);
    CHECK_NOTHROW(validate(gap, CameraIds::any));

    auto short_records = t;
    short_records.records.pop_back();
    CHECK_THROWS_AS(validate(short_records, CameraIds::any), std::invalid_argument);

    auto nan = t;
    nan.data(0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(validate(nan), std::invalid_argument);

    TempDir dir("craft_pipeline_validate");
    save_feature_dir(gap, dir.path, CameraIds::any);
    CHECK_THROWS_AS(load_feature_dir(dir.path), ParseError);
    CHECK(load_feature_dir(dir.path, CameraIds::any).size() == 4);
    CHECK_THROWS_AS(save_feature_dir(gap, dir.path / "other"), std::invalid_argument);
}

TEST_CASE("manifest and payload must agree on sample count")
{
    TempDir dir("craft_pipeline_mismatch");
    auto t = small_table();
    save_feature_dir(t, dir.path);
    auto fewer = t.records;
    fewer.pop_back();
    write_file_atomic(dir.path / "manifest.csv", encode_manifest(fewer));
    CHECK_THROWS_AS(load_feature_dir(dir.path), ParseError);
}

TEST_CASE("split_views groups by camera in sample order")
{
    const auto views = split_views(small_table());
    REQUIRE(views.size() == 2);
    CHECK(views[0].persons == std::vector<PersonId>{10, 11});
    CHECK(views[1].features(2, 1) == doctest::Approx(12.5));
}

TEST_CASE("synthetic generator")
{
    SyntheticSpec spec{.persons = 12, .per_view = 3, .views = 3, .latent = 4, .dim = 6};

    SUBCASE("layout and determinism")
    {
        const auto a = generate_synthetic(spec);
        const auto b = generate_synthetic(spec);
        CHECK(a.data == b.data);
        CHECK(a.size() == 12 * 3 * 3);
        CHECK(a.dim() == 6);
        CHECK(a.records[0].camera == 0);
        CHECK(a.records[3].person == 1);
        CHECK(a.records[36].camera == 1);
        CHECK_NOTHROW(validate(a));

        spec.seed = 8;
        CHECK(generate_synthetic(spec).data != a.data);
    }
    SUBCASE("no distortion and no noise gives identical views")
    {
        spec.distortion = 0.0;
        spec.noise = 0.0;
        const auto t = generate_synthetic(spec);
        for (std::size_t k = 0; k < t.size(); ++k) {
            const auto& rec = t.records[k];
            const auto ref = static_cast<Eigen::Index>(rec.person * 3);  // camera 0, image 0
            CHECK(t.data.col(static_cast<Eigen::Index>(k)) == t.data.col(ref));
        }
    }
    SUBCASE("split is identity-disjoint")
    {
        const auto t = generate_synthetic(spec);
        const auto split = split_synthetic(t, spec);
        std::set<PersonId> train, probe, gallery;
        for (const auto& r : split.train.records) train.insert(r.person);
        for (const auto& r : split.probe.records) {
            probe.insert(r.person);
            CHECK(r.camera == 0);
        }
        for (const auto& r : split.gallery.records) {
            gallery.insert(r.person);
            CHECK(r.camera != 0);
        }
        CHECK(train.size() == 6);
        CHECK(probe == gallery);
        for (auto p : probe) CHECK(train.count(p) == 0);
        CHECK(split.train.size() + split.probe.size() + split.gallery.size() == t.size());
        CHECK(split.train.camera_count() == 3);
        CHECK_NOTHROW(validate(split.train));
    }
    SUBCASE("spec validation")
    {
        spec.views = 1;
        spec.noise = -1.0;
        spec.train_fraction = 1.5;
        const auto issues = validate_spec(spec);
        std::set<std::string> fields;
        for (const auto& i : issues) fields.insert(i.field);
        CHECK(fields.count("views") == 1);
        CHECK(fields.count("noise") == 1);
        CHECK(fields.count("train-fraction") == 1);
        CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
    }
}

TEST_CASE("normal source statistics")
{
    NormalSource src(3);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = src.next();
        sum += v;
        sq += v * v;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("raw-feature matching degrades with camera distortion")
{
    double previous = 2.0;
    for (double distortion : {0.1, 0.5, 1.0}) {
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            SyntheticSpec spec{.persons = 60, .distortion = distortion, .seed = seed};
            const auto split = split_synthetic(generate_synthetic(spec), spec);
            TrainConfig config;
            config.baseline = Baseline::orifeat;
            const auto model = train_craft(split_views(split.train), config);
            total += evaluate(model, split.probe, split.gallery, Protocol::multishot).curve.rank(1);
        }
        const double mean = total / 10.0;
        MESSAGE("distortion " << distortion << " rank-1 " << mean);
        CHECK(mean < previous);
        previous = mean;
    }
}

TEST_CASE("model files")
{
    SyntheticSpec spec{.persons = 30, .views = 3, .latent = 4, .dim = 8};
    const auto split = split_synthetic(generate_synthetic(spec), spec);
    const auto views = split_views(split.train);

    for (Baseline b : {Baseline::craft, Baseline::zeropad, Baseline::daume, Baseline::orifeat}) {
        CAPTURE(to_string(b));
        const auto model = train_craft(views, small_config(b));
        const std::string bytes = encode_model(model);
        const auto back = decode_model(bytes, "mem");
        CHECK(encode_model(back) == bytes);
        CHECK(back.config.baseline == b);
        CHECK(back.view_count == 3);
        CHECK(back.omega == model.omega);
        CHECK(back.plan.has_value() == model.plan.has_value());
        CHECK(back.cvd.has_value() == model.cvd.has_value());
        const double scale = model.projection.cwiseAbs().maxCoeff();
        CHECK((back.projection - model.projection).cwiseAbs().maxCoeff() <= 1e-6 * scale);

        const auto x = views[1].features.col(0).eval();
        CHECK((score(back, x, 1) - score(model, x, 1)).norm() <= 1e-5 * (1.0 + score(model, x, 1).norm()));
    }

    SUBCASE("kernel models keep their references")
    {
        auto config = small_config(Baseline::craft);
        config.kernel = KernelKind::rbf;
        config.rbf_gamma = 0.05;
        const auto model = train_craft(views, config);
        const auto back = decode_model(encode_model(model), "mem");
        REQUIRE(back.kernel.has_value());
        CHECK(back.kernel->reference_count() == model.kernel->reference_count());
        CHECK(back.kernel->view_sizes() == model.kernel->view_sizes());
    }

    SUBCASE("malformed files")
    {
        const std::string bytes = encode_model(train_craft(views, small_config(Baseline::zeropad)));
        const auto newline = bytes.find('\n');
        const std::string header = bytes.substr(0, newline);
        CHECK_THROWS_AS(decode_model("", "m"), ParseError);
        CHECK_THROWS_AS(decode_model(header, "m"), ParseError);
        CHECK_THROWS_AS(decode_model("{not json\n", "m"), ParseError);
        CHECK_THROWS_AS(decode_model(bytes.substr(0, bytes.size() - 4), "m"), ParseError);

        std::string version = bytes;
        const auto at = version.find("\"format_version\":1");
        REQUIRE(at != std::string::npos);
        version.replace(at, 18, "\"format_version\":9");
        const auto msg = message_of([&] { (void)decode_model(version, "v.model"); });
        CHECK(msg.find("v.model") != std::string::npos);
        CHECK(msg.find("version") != std::string::npos);

        std::string learner = bytes;
        learner.replace(learner.find("\"learner\":\"mfa\""), 15, "\"learner\":\"pca\"");
        CHECK_THROWS_AS(decode_model(learner, "m"), ParseError);
    }

    SUBCASE("save and load")
    {
        TempDir dir("craft_pipeline_model");
        const auto model = train_craft(views, small_config(Baseline::craft));
        save_model(model, dir.path / "m.craft");
        CHECK(read_file(dir.path / "m.craft") == encode_model(model));
        CHECK(encode_model(load_model(dir.path / "m.craft")) == encode_model(model));
        CHECK_THROWS(load_model(dir.path / "missing.craft"));
    }
}
