#include "igr/experiments.hpp"
#include "igr/serialization.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace igr;

namespace {

Json load_fixtures()
{
    std::ifstream in(std::string(IGR_FIXTURE_DIR) + "/reference_pmfs.json");
    REQUIRE(in);
    Json j;
    in >> j;
    return j;
}

RunConfig small_config()
{
    RunConfig c;
    c.model = ModelKind::IgrI;
    c.target = TargetSpec::binomial(4, 0.4);
    c.tau = 0.25;
    c.tau_grid = {0.25};
    c.steps = 40;
    c.batch = 16;
    c.recovery_samples = 2000;
    c.seed = 3;
    return c;
}

FitReport fake_report(double tv, double loss)
{
    FitReport r;
    r.metrics.tv = tv;
    r.final_loss = loss;
    return r;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("targets match the high-precision references")
{
    const Json ref = load_fixtures();
    for (const auto& [name, values] : ref.items()) {
        const DiscretePmf pmf = build_target(TargetSpec::parse(name));
        INFO(name);
        REQUIRE(static_cast<std::size_t>(pmf.size()) == values.size());
        double worst = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k)
            worst = std::max(worst, std::abs(pmf.probs[static_cast<Eigen::Index>(k)] -
                                             std::stod(values[k].get<std::string>())));
        CHECK(worst <= 1e-12);
        CHECK(pmf.probs.sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK_NOTHROW(pmf.validate());
    }
}

TEST_CASE("target closed forms")
{
    CHECK(build_target(TargetSpec::poisson(1.0)).probs[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
    const DiscretePmf b = build_target(TargetSpec::binomial(12, 0.3));
    CHECK(b.size() == 13);
    CHECK(b.probs[0] == doctest::Approx(std::pow(0.7, 12)).epsilon(1e-12));
    CHECK(b.support == SupportKind::Finite);
    const DiscretePmf p = build_target(TargetSpec::poisson(50.0));
    CHECK(p.support == SupportKind::TruncatedInfinite);
    CHECK(p.probs[49] == doctest::Approx(p.probs[50]).epsilon(1e-12));
    Eigen::Index mode = 0;
    p.probs.maxCoeff(&mode);
    CHECK((mode == 49 || mode == 50));
    const DiscretePmf nb = build_target(TargetSpec::negbinomial(50, 0.6));
    CHECK(nb.probs[0] == doctest::Approx(std::pow(0.6, 50)).epsilon(1e-10));
    const DiscretePmf c = build_target(TargetSpec::custom({0.25, 0.75}));
    CHECK(c.probs[1] == 0.75);
}

TEST_CASE("target strings")
{
    for (const char* s : {"poisson:50", "binomial:12,0.3", "negbinomial:50,0.6", "custom:0.2,0.3,0.5", "poisson:2.5"})
        CHECK(TargetSpec::parse(s).to_string() == s);
    for (const char* s : {"poisson", "poisson:", "poisson:-1", "poisson:abc", "binomial:12", "binomial:12.5,0.3",
                          "binomial:0,0.3", "binomial:12,1.5", "negbinomial:50,0", "custom:0.5", "custom:0.5,0.6",
                          "custom:-0.5,1.5", "gamma:1", "poisson:1,2"})
        CHECK_THROWS_AS(TargetSpec::parse(s), ConfigError);
}

TEST_CASE("configuration validation")
{
    RunConfig c;
    c.rho = 0.999;
    CHECK_NOTHROW(c.validate());
    c.k = 40;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.rho.reset();
    CHECK_NOTHROW(c.validate());
    c.k.reset();
    CHECK_THROWS_AS(c.validate(), ConfigError);

    RunConfig g;
    g.model = ModelKind::Gs;
    g.rho = 0.9;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    for (auto bad : {+[](RunConfig& r) { r.tau = 0.0; }, +[](RunConfig& r) { r.tau_grid = {}; },
                     +[](RunConfig& r) { r.tau_grid = {0.1, -1.0}; }, +[](RunConfig& r) { r.steps = -1; },
                     +[](RunConfig& r) { r.batch = 0; }, +[](RunConfig& r) { r.lr = 0.0; },
                     +[](RunConfig& r) { r.k = 1; }, +[](RunConfig& r) { r.recovery_samples = 0; }}) {
        RunConfig r = small_config();
        bad(r);
        CHECK_THROWS_AS(r.validate(), ConfigError);
    }
    CHECK_THROWS_AS(model_kind_from_string("igr"), ConfigError);
    CHECK_THROWS_AS(recovery_mode_from_string("median"), ConfigError);
}

TEST_CASE("metrics")
{
    const DiscretePmf p{Eigen::Vector3d(0.2, 0.5, 0.3)};
    const DiscretePmf q{Eigen::Vector2d(0.6, 0.4)};
    const Metrics same = compare_pmfs(p, p);
    CHECK(same.tv == 0.0);
    CHECK(same.kl == 0.0);
    CHECK(same.l2 == 0.0);
    const Metrics pq = compare_pmfs(p, q);
    const Metrics qp = compare_pmfs(q, p);
    CHECK(pq.tv == doctest::Approx(0.5 * (0.4 + 0.1 + 0.3)));
    CHECK(pq.tv == qp.tv);
    CHECK(pq.l2 == doctest::Approx(std::sqrt(0.16 + 0.01 + 0.09)));
    CHECK(pq.kl > 0.0);
    CHECK(std::isfinite(pq.kl));
    // Disjoint supports: tv is 1 and kl stays finite thanks to the smoothing.
    const Metrics far = compare_pmfs(DiscretePmf{Eigen::Vector2d(1.0, 0.0)}, DiscretePmf{Eigen::Vector2d(0.0, 1.0)});
    CHECK(far.tv == 1.0);
    CHECK(std::isfinite(far.kl));
    // Tail mass counts as one more category.
    const DiscretePmf tail{Eigen::Vector2d(0.5, 0.4), SupportKind::TruncatedInfinite, 0.1};
    CHECK(compare_pmfs(tail, DiscretePmf{Eigen::Vector2d(0.5, 0.5)}).tv == doctest::Approx(0.1));
}

TEST_CASE("selection uses tv, not the continuous loss")
{
    std::vector<SweepEntry> entries;
    entries.push_back({0.1, fake_report(0.30, 0.01), {}});
    entries.push_back({0.5, fake_report(0.10, 0.90), {}});
    entries.push_back({1.0, fake_report(0.20, 0.05), {}});
    CHECK(select_best(entries) == 1u);

    entries.push_back({0.05, fake_report(0.10, 0.50), {}});
    CHECK(select_best(entries) == 3u);

    FitReport aborted = fake_report(0.0, 0.0);
    aborted.aborted = true;
    entries.push_back({0.01, aborted, {}});
    entries.push_back({0.02, std::nullopt, "boom"});
    CHECK(select_best(entries) == 3u);

    CHECK_FALSE(select_best({{0.1, std::nullopt, "x"}}).has_value());
}

TEST_CASE("a grid of one is a single fit")
{
    const RunConfig c = small_config();
    const SweepResult s = sweep(c, 1);
    REQUIRE(s.best);
    CHECK(s.best_report() == fit(c));
}

TEST_CASE("sweep results do not depend on the worker count")
{
    RunConfig c = small_config();
    c.tau_grid = {0.1, 0.5, 1.0};
    const SweepResult one = sweep(c, 1);
    const SweepResult three = sweep(c, 3);
    REQUIRE(one.entries.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(*one.entries[i].report == *three.entries[i].report);
    CHECK(one.best == three.best);
}

TEST_CASE("fits are deterministic for every model")
{
    for (auto model : {ModelKind::IgrI, ModelKind::IgrSb, ModelKind::IgrPlanar, ModelKind::Gs}) {
        RunConfig c = small_config();
        c.model = model;
        const FitReport a = fit(c);
        const FitReport b = fit(c);
        INFO(to_string(model));
        CHECK_FALSE(a.aborted);
        CHECK(results_json(a) == results_json(b));
        CHECK(a.trajectory.size() == static_cast<std::size_t>(c.steps));
        CHECK(a.wall_seconds == std::nullopt);
        CHECK(a.metrics.tv >= 0.0);
        CHECK(a.metrics.tv <= 1.0);
        CHECK(a.metrics.kl >= 0.0);
    }
    RunConfig t = small_config();
    t.model = ModelKind::IgrSb;
    t.target = TargetSpec::poisson(3.0);
    t.rho = 0.99;
    CHECK(results_json(fit(t)) == results_json(fit(t)));
}

TEST_CASE("results round-trip through JSON")
{
    RunConfig c = small_config();
    c.recovery = RecoveryMode::Mean;
    c.k = 7;
    const FitReport r = fit(c);
    const FitReport back = Json::parse(results_json(r)).get<FitReport>();
    CHECK(back == r);

    RunConfig t = small_config();
    t.model = ModelKind::IgrSb;
    t.target = TargetSpec::poisson(3.0);
    t.rho = 0.99;
    const FitReport tr = fit(t);
    CHECK(Json::parse(results_json(tr)).get<FitReport>() == tr);

    const Json doc = Json::parse(results_json(r));
    for (const char* key : {"config", "metrics", "recovered", "target", "trajectory", "wall_seconds", "seed"})
        CHECK(doc.contains(key));
    CHECK(doc["wall_seconds"].is_null());
    CHECK_FALSE(doc["config"].contains("out"));
}

TEST_CASE("configuration files")
{
    RunConfig c;
    merge_config(Json::parse(R"({"model": "gs", "target": "binomial:12,0.3", "k": 40, "tau": 0.5})"), c);
    CHECK(c.model == ModelKind::Gs);
    CHECK(c.target == TargetSpec::binomial(12, 0.3));
    CHECK(c.k == 40);
    CHECK(c.tau == 0.5);
    CHECK(c.steps == 1000);
    CHECK_THROWS_AS(merge_config(Json::parse(R"({"temperature": 0.5})"), c), ConfigError);
    CHECK_THROWS_AS(merge_config(Json::parse(R"({"tau": "hot"})"), c), ConfigError);
    CHECK_THROWS_AS(merge_config(Json::parse(R"({"target": 3})"), c), ConfigError);
    CHECK_THROWS_AS(merge_config(Json::parse("[1, 2]"), c), ConfigError);
}

TEST_CASE("emitted files")
{
    const auto dir = std::filesystem::temp_directory_path() / "igr_test_emit";
    std::filesystem::remove_all(dir);

    const FitReport finite = fit(small_config());
    emit(finite, (dir / "finite").string());
    std::istringstream rows(slurp(dir / "finite" / "pmf.csv"));
    std::string line;
    std::getline(rows, line);
    CHECK(line == "category,target_prob,recovered_prob");
    int count = 0;
    while (std::getline(rows, line))
        ++count;
    CHECK(count == 5);
    CHECK(slurp(dir / "finite" / "results.json") == results_json(finite));

    RunConfig t = small_config();
    t.model = ModelKind::IgrSb;
    t.target = TargetSpec::poisson(3.0);
    t.rho = 0.99;
    const FitReport inf = fit(t);
    const std::string csv = pmf_csv(inf);
    const auto lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(lines == 1 + std::max(inf.target.size(), inf.recovered.size()) + 1);
    CHECK(csv.find("\ntail,") != std::string::npos);

    RunConfig s = small_config();
    s.tau_grid = {0.2, 0.6};
    emit(sweep(s, 1), (dir / "sweep").string());
    const Json doc = Json::parse(slurp(dir / "sweep" / "results.json"));
    CHECK(doc["sweep"].size() == 2);
    CHECK(doc.contains("best_tau"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("finite models smaller than the target support")
{
    RunConfig c = small_config();
    c.target = TargetSpec::custom({0.1, 0.2, 0.3, 0.4});
    c.k = 3;
    const FitReport r = fit(c);
    CHECK_FALSE(r.aborted);
    CHECK(r.recovered.size() == 3);
    // The last category cannot be reached and counts fully against tv.
    CHECK(r.metrics.tv >= 0.4 - 1e-12);
}

TEST_CASE("a vertex target is fitted closely")
{
    RunConfig c;
    c.model = ModelKind::IgrI;
    c.target = TargetSpec::custom({0.0, 1.0, 0.0, 0.0});
    c.tau = 0.1;
    c.tau_grid = {0.1};
    c.steps = 500;
    c.recovery_samples = 100000;
    c.seed = 1;
    const FitReport r = fit(c);
    CHECK_FALSE(r.aborted);
    CHECK(r.metrics.tv <= 0.02);
}
