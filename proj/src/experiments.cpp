#include "igr/experiments.hpp"

#include "igr/distributions.hpp"
#include "igr/estimators.hpp"
#include "igr/infinite.hpp"
#include "igr/optimizer.hpp"
#include "igr/serialization.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace igr {

namespace {

constexpr double kTargetCdf = 1.0 - 1e-10;
constexpr std::size_t kMaxTargetSupport = 10'000'000;
constexpr double kKlSmoothing = 1e-12;
constexpr double kInitScale = 0.1;

std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

double parse_double(const std::string& s, std::string_view what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size())
            return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("target: cannot parse " + std::string(what) + " from '" + s + "'");
}

long parse_count(const std::string& s, std::string_view what)
{
    const double v = parse_double(s, what);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ConfigError("target: " + std::string(what) + " must be an integer, got '" + s + "'");
    return static_cast<long>(v);
}

std::string format_number(double v)
{
    // Shortest text that reads back to the same double.
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Accumulates exp(log p_k) from a log-space recurrence until the cdf reaches
// kTargetCdf (or `last` is hit), then renormalizes.
template <class Next>
Vector run_recurrence(double log_p0, Next next, std::size_t last)
{
    std::vector<double> probs;
    double log_p = log_p0;
    double cdf = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double pk = std::exp(log_p);
        probs.push_back(pk);
        cdf += pk;
        if (k == last || cdf >= kTargetCdf)
            break;
        if (probs.size() >= kMaxTargetSupport)
            throw ConfigError("target: support exceeds " + std::to_string(kMaxTargetSupport) + " categories");
        log_p += next(k);
    }
    Vector out = Eigen::Map<Vector>(probs.data(), static_cast<Eigen::Index>(probs.size()));
    return out / out.sum();
}

Vector padded(const Vector& v, Eigen::Index n)
{
    Vector out = Vector::Zero(n);
    const Eigen::Index m = std::min(n, v.size());
    out.head(m) = v.head(m);
    return out;
}

double tail_squares(const Vector& target, Eigen::Index from)
{
    double s = 0.0;
    for (Eigen::Index j = from; j < target.size(); ++j)
        s += target[j] * target[j];
    return s;
}

Eigen::Index finite_categories(const RunConfig& config, const DiscretePmf& target)
{
    return config.k ? static_cast<Eigen::Index>(*config.k) : target.size();
}

// The training loop shared by every model: `step` evaluates the batch loss
// and gradient at theta (and may lengthen theta); `sync` sees theta after
// every accepted update.
template <class Step, class Sync>
void train(const RunConfig& config, Vector& theta, Step step, FitReport& report, Sync sync)
{
    OptimizerState state(AdamConfig{config.lr, 0.9, 0.999, 1e-8}, theta.size());
    report.trajectory.reserve(static_cast<std::size_t>(config.steps));
    for (long s = 0; s < config.steps; ++s) {
        Vector grad;
        const double loss = step(theta, grad);
        if (!std::isfinite(loss)) {
            report.aborted = true;
            report.diagnostic = "non-finite loss at step " + std::to_string(s);
            return;
        }
        report.trajectory.push_back(loss);
        const StepStatus st = adam_step(state, theta, grad);
        if (!st.accepted) {
            report.aborted = true;
            report.diagnostic = st.diagnostic + " at step " + std::to_string(s);
            return;
        }
        sync(theta);
    }
}

template <class Step>
void train(const RunConfig& config, Vector& theta, Step step, FitReport& report)
{
    train(config, theta, step, report, [](const Vector&) {});
}

TransformSpec finite_spec(const RunConfig& config, Eigen::Index dim, Rng& init)
{
    switch (config.model) {
    case ModelKind::IgrI:
        return TransformSpec::softmax_pp();
    case ModelKind::IgrSb:
        return TransformSpec::sb_softmax_pp();
    case ModelKind::IgrPlanar:
        return TransformSpec::planar(dim, config.flow_layers, init);
    case ModelKind::Gs:
        break;
    }
    throw ContractError("finite_spec: GS has no transform");
}

// theta = [mu, log sigma, (w, u, b) per flow layer].
void unpack(const Vector& theta, IgrParams& params)
{
    const Eigen::Index n = params.dim();
    params.mu = theta.head(n);
    params.sigma = theta.segment(n, n).array().exp().matrix();
    Eigen::Index at = 2 * n;
    for (auto& layer : params.spec.flow) {
        layer.w = theta.segment(at, n);
        layer.u = theta.segment(at + n, n);
        layer.b = theta[at + 2 * n];
        at += 2 * n + 1;
    }
}

Vector pack(const IgrParams& params)
{
    const Eigen::Index n = params.dim();
    Vector theta(2 * n + static_cast<Eigen::Index>(params.spec.flow.size()) * (2 * n + 1));
    theta.head(n) = params.mu;
    theta.segment(n, n) = params.sigma.array().log().matrix();
    Eigen::Index at = 2 * n;
    for (const auto& layer : params.spec.flow) {
        theta.segment(at, n) = layer.w;
        theta.segment(at + n, n) = layer.u;
        theta[at + 2 * n] = layer.b;
        at += 2 * n + 1;
    }
    return theta;
}

void fit_finite_igr(const RunConfig& config, FitReport& report)
{
    const Eigen::Index k = finite_categories(config, report.target);
    const Eigen::Index n = k - 1;
    Rng root(config.seed);
    Rng init = root.substream(0);
    Rng noise = root.substream(1);
    Rng recover = root.substream(2);

    IgrParams params{kInitScale * init.normal_vector(n), Vector::Ones(n), config.tau, finite_spec(config, n, init)};
    const Vector target = padded(report.target.probs, k);
    const double offset = tail_squares(report.target.probs, k);
    Vector theta = pack(params);

    train(config, theta, [&](const Vector& th, Vector& grad) {
        unpack(th, params);
        std::vector<Vector> batch;
        for (long b = 0; b < config.batch; ++b)
            batch.push_back(noise.normal_vector(n));
        const MomentMatchGrad g = moment_match_grad(params, target, batch);
        grad.resize(th.size());
        grad.head(n) = g.mu;
        grad.segment(n, n) = g.log_sigma;
        Eigen::Index at = 2 * n;
        for (const auto& lg : g.flow) {
            grad.segment(at, n) = lg.w;
            grad.segment(at + n, n) = lg.u;
            grad[at + 2 * n] = lg.b;
            at += 2 * n + 1;
        }
        return g.loss + offset;
    }, report);
    if (report.aborted)
        return;
    unpack(theta, params);
    const auto samples = static_cast<std::size_t>(config.recovery_samples);
    report.recovered = config.recovery == RecoveryMode::Mean ? recover_pmf_mean(params, samples, recover).pmf
                                                             : recover_pmf_mc(params, samples, recover).pmf;
}

void fit_gs(const RunConfig& config, FitReport& report)
{
    const Eigen::Index k = finite_categories(config, report.target);
    Rng root(config.seed);
    Rng init = root.substream(0);
    Rng noise = root.substream(1);
    Rng recover = root.substream(2);

    const Vector target = padded(report.target.probs, k);
    const double offset = tail_squares(report.target.probs, k);
    Vector theta = kInitScale * init.normal_vector(k); // log alpha

    train(config, theta, [&](const Vector& th, Vector& grad) {
        const GsParams params{th.array().exp().matrix(), config.tau};
        std::vector<Vector> batch;
        for (long b = 0; b < config.batch; ++b)
            batch.push_back(gumbel_noise(k, noise));
        const GsMomentMatchGrad g = gs_moment_match_grad(params, target, batch);
        grad = g.log_alpha;
        return g.loss + offset;
    }, report);
    if (report.aborted)
        return;
    const GsParams params{theta.array().exp().matrix(), config.tau};
    const auto samples = static_cast<std::size_t>(config.recovery_samples);
    report.recovered = config.recovery == RecoveryMode::Mean ? recover_pmf_gs_mean(params, samples, recover).pmf
                                                             : recover_pmf_gs_mc(params, samples, recover).pmf;
}

// Stick-breaking over the countably infinite support. theta interleaves
// (mu_k, log sigma_k) so that growing the stored prefix appends coordinates.
void fit_truncated(const RunConfig& config, FitReport& report)
{
    Rng root(config.seed);
    Rng noise = root.substream(1);
    Rng recover = root.substream(2);
    GrowableIgrParams params(config.tau, *config.rho, TransformSpec::sb_softmax_pp());
    const Vector& target = report.target.probs;
    Vector theta(0);

    try {
        train(config, theta, [&](Vector& th, Vector& grad) {
            std::vector<TruncatedTrace> traces;
            for (long b = 0; b < config.batch; ++b)
                traces.push_back(sample_truncated_and_materialize(params, noise));
            const TruncatedMomentMatchGrad g = truncated_moment_match_grad(params, target, traces);
            const auto stored = static_cast<Eigen::Index>(params.high_water());
            if (th.size() < 2 * stored) {
                const Eigen::Index old = th.size() / 2;
                th.conservativeResize(2 * stored);
                for (Eigen::Index j = old; j < stored; ++j) {
                    th[2 * j] = params.mu(static_cast<std::size_t>(j));
                    th[2 * j + 1] = std::log(params.sigma(static_cast<std::size_t>(j)));
                }
            }
            grad = Vector::Zero(th.size());
            for (std::size_t j = 0; j < g.max_k_used; ++j) {
                grad[2 * static_cast<Eigen::Index>(j)] = g.mu[j];
                grad[2 * static_cast<Eigen::Index>(j) + 1] = g.log_sigma[j];
            }
            return g.loss;
        }, report, [&](const Vector& th) {
            for (Eigen::Index j = 0; 2 * j < th.size(); ++j)
                params.set(static_cast<std::size_t>(j), th[2 * j], std::exp(th[2 * j + 1]));
        });
    } catch (const Error& e) {
        report.aborted = true;
        report.diagnostic = e.what();
        return;
    }
    if (report.aborted)
        return;
    const auto limit = static_cast<std::size_t>(target.size());
    const auto samples = static_cast<std::size_t>(config.recovery_samples);
    DiscretePmf rec = config.recovery == RecoveryMode::Mean
                          ? recover_pmf_truncated_mean(params, samples, recover, limit).pmf
                          : recover_pmf_truncated(params, samples, recover, limit).pmf;
    rec.probs = padded(rec.probs, target.size());
    report.recovered = rec;
}

} // namespace

// ---------------------------------------------------------------- targets

TargetSpec TargetSpec::parse(std::string_view text)
{
    const std::size_t colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ConfigError("target: expected family:parameters, got '" + std::string(text) + "'");
    const std::string family(text.substr(0, colon));
    const std::vector<std::string> args = split(text.substr(colon + 1), ',');
    auto need = [&](std::size_t count) {
        if (args.size() != count)
            throw ConfigError("target: " + family + " takes " + std::to_string(count) + " parameter(s)");
    };
    TargetSpec spec;
    if (family == "poisson") {
        need(1);
        spec = poisson(parse_double(args[0], "lambda"));
    } else if (family == "binomial") {
        need(2);
        spec = binomial(parse_count(args[0], "N"), parse_double(args[1], "p"));
    } else if (family == "negbinomial") {
        need(2);
        spec = negbinomial(parse_count(args[0], "r"), parse_double(args[1], "p"));
    } else if (family == "custom") {
        std::vector<double> probs;
        for (const auto& a : args)
            probs.push_back(parse_double(a, "probability"));
        spec = custom(std::move(probs));
    } else {
        throw ConfigError("target: unknown family '" + family + "'");
    }
    spec.validate();
    return spec;
}

std::string TargetSpec::to_string() const
{
    switch (family) {
    case TargetFamily::Poisson:
        return "poisson:" + format_number(lambda);
    case TargetFamily::Binomial:
        return "binomial:" + std::to_string(trials) + "," + format_number(p);
    case TargetFamily::NegBinomial:
        return "negbinomial:" + std::to_string(trials) + "," + format_number(p);
    case TargetFamily::Custom: {
        std::string s = "custom:";
        for (std::size_t i = 0; i < probs.size(); ++i)
            s += (i ? "," : "") + format_number(probs[i]);
        return s;
    }
    }
    return {};
}

void TargetSpec::validate() const
{
    switch (family) {
    case TargetFamily::Poisson:
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ConfigError("target: poisson needs lambda > 0");
        break;
    case TargetFamily::Binomial:
    case TargetFamily::NegBinomial:
        if (trials < 1)
            throw ConfigError("target: N and r must be positive integers");
        if (!(p > 0.0 && p < 1.0))
            throw ConfigError("target: p must lie in (0, 1)");
        break;
    case TargetFamily::Custom: {
        if (probs.size() < 2)
            throw ConfigError("target: custom pmf needs at least two categories");
        double sum = 0.0;
        for (double v : probs) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ConfigError("target: custom probabilities must be finite and non-negative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ConfigError("target: custom probabilities sum to " + format_number(sum) + ", not 1");
        break;
    }
    }
}

bool operator==(const TargetSpec& a, const TargetSpec& b)
{
    return a.family == b.family && a.lambda == b.lambda && a.trials == b.trials && a.p == b.p && a.probs == b.probs;
}

DiscretePmf build_target(const TargetSpec& spec)
{
    spec.validate();
    DiscretePmf out;
    switch (spec.family) {
    case TargetFamily::Poisson: {
        const double log_lambda = std::log(spec.lambda);
        out.probs = run_recurrence(-spec.lambda, [&](std::size_t k) { return log_lambda - std::log(k + 1.0); },
                                   kMaxTargetSupport);
        out.support = SupportKind::TruncatedInfinite;
        break;
    }
    case TargetFamily::Binomial: {
        const double n = static_cast<double>(spec.trials);
        const double log_odds = std::log(spec.p) - std::log1p(-spec.p);
        out.probs = run_recurrence(n * std::log1p(-spec.p),
                                   [&](std::size_t k) { return std::log((n - k) / (k + 1.0)) + log_odds; },
                                   static_cast<std::size_t>(spec.trials));
        break;
    }
    case TargetFamily::NegBinomial: {
        const double r = static_cast<double>(spec.trials);
        const double log_q = std::log1p(-spec.p);
        out.probs = run_recurrence(r * std::log(spec.p),
                                   [&](std::size_t k) { return std::log((k + r) / (k + 1.0)) + log_q; },
                                   kMaxTargetSupport);
        out.support = SupportKind::TruncatedInfinite;
        break;
    }
    case TargetFamily::Custom: {
        const Vector v = Eigen::Map<const Vector>(spec.probs.data(), static_cast<Eigen::Index>(spec.probs.size()));
        out.probs = v / v.sum();
        break;
    }
    }
    return out;
}

// ---------------------------------------------------------------- configuration

std::string_view to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::IgrI:
        return "igr-i";
    case ModelKind::IgrSb:
        return "igr-sb";
    case ModelKind::IgrPlanar:
        return "igr-planar";
    case ModelKind::Gs:
        return "gs";
    }
    return "?";
}

ModelKind model_kind_from_string(std::string_view name)
{
    for (ModelKind k : {ModelKind::IgrI, ModelKind::IgrSb, ModelKind::IgrPlanar, ModelKind::Gs})
        if (to_string(k) == name)
            return k;
    throw ConfigError("unknown model '" + std::string(name) + "' (expected igr-i, igr-sb, igr-planar or gs)");
}

std::string_view to_string(RecoveryMode mode) { return mode == RecoveryMode::Mean ? "mean" : "discrete"; }

RecoveryMode recovery_mode_from_string(std::string_view name)
{
    if (name == "discrete")
        return RecoveryMode::Discrete;
    if (name == "mean")
        return RecoveryMode::Mean;
    throw ConfigError("unknown recovery mode '" + std::string(name) + "' (expected discrete or mean)");
}

void RunConfig::validate() const
{
    target.validate();
    if (k && *k < 2)
        throw ConfigError("k must be at least 2");
    if (rho) {
        if (model != ModelKind::IgrSb)
            throw ConfigError("rho only applies to igr-sb");
        if (!(*rho > 0.0 && *rho < 1.0))
            throw ConfigError("rho must lie in (0, 1)");
        if (k)
            throw ConfigError("give either k or rho for igr-sb, not both");
    }
    if (model == ModelKind::IgrSb && !rho && !k && target.infinite())
        throw ConfigError("igr-sb on an infinite target needs rho (or an explicit k)");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw ConfigError("tau must be positive");
    if (tau_grid.empty())
        throw ConfigError("temperature grid is empty");
    for (double t : tau_grid)
        if (!(t > 0.0) || !std::isfinite(t))
            throw ConfigError("temperature grid entries must be positive");
    if (steps < 0)
        throw ConfigError("steps must be non-negative");
    if (batch < 1)
        throw ConfigError("batch must be at least 1");
    if (!(lr > 0.0) || !std::isfinite(lr))
        throw ConfigError("learning rate must be positive");
    if (recovery_samples < 1)
        throw ConfigError("recovery sample count must be at least 1");
    if (flow_layers < 1)
        throw ConfigError("flow needs at least one layer");
}

bool operator==(const RunConfig& a, const RunConfig& b)
{
    return a.model == b.model && a.target == b.target && a.k == b.k && a.rho == b.rho && a.tau == b.tau &&
           a.tau_grid == b.tau_grid && a.steps == b.steps && a.batch == b.batch && a.seed == b.seed && a.lr == b.lr &&
           a.recovery_samples == b.recovery_samples && a.recovery == b.recovery && a.flow_layers == b.flow_layers &&
           a.record_wall_time == b.record_wall_time;
}

// ---------------------------------------------------------------- metrics and fitting

Metrics compare_pmfs(const DiscretePmf& target, const DiscretePmf& recovered)
{
    const Eigen::Index n = std::max(target.size(), recovered.size());
    Vector p = padded(target.probs, n + 1);
    Vector q = padded(recovered.probs, n + 1);
    p[n] = target.tail_mass;
    q[n] = recovered.tail_mass;

    Metrics m;
    m.tv = 0.5 * (p - q).cwiseAbs().sum();
    m.l2 = (p - q).norm();
    const double norm = 1.0 + static_cast<double>(n + 1) * kKlSmoothing;
    for (Eigen::Index i = 0; i <= n; ++i) {
        const double ps = (p[i] + kKlSmoothing) / norm;
        const double qs = (q[i] + kKlSmoothing) / norm;
        m.kl += ps * std::log(ps / qs);
    }
    m.kl = std::max(m.kl, 0.0);
    return m;
}

bool operator==(const FitReport& a, const FitReport& b)
{
    auto same_pmf = [](const DiscretePmf& x, const DiscretePmf& y) {
        return x.probs.size() == y.probs.size() && x.probs == y.probs && x.support == y.support &&
               x.tail_mass == y.tail_mass;
    };
    return a.config == b.config && same_pmf(a.target, b.target) && same_pmf(a.recovered, b.recovered) &&
           a.metrics.tv == b.metrics.tv && a.metrics.kl == b.metrics.kl && a.metrics.l2 == b.metrics.l2 &&
           a.final_loss == b.final_loss && a.trajectory == b.trajectory && a.wall_seconds == b.wall_seconds &&
           a.aborted == b.aborted && a.diagnostic == b.diagnostic;
}

FitReport fit(const RunConfig& config)
{
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    FitReport report;
    report.config = config;
    report.config.out.clear();
    report.target = build_target(config.target);
    if (config.model == ModelKind::Gs)
        fit_gs(config, report);
    else if (config.model == ModelKind::IgrSb && config.rho)
        fit_truncated(config, report);
    else
        fit_finite_igr(config, report);

    if (!report.trajectory.empty())
        report.final_loss = report.trajectory.back();
    if (!report.aborted)
        report.metrics = compare_pmfs(report.target, report.recovered);
    if (config.record_wall_time)
        report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

const FitReport& SweepResult::best_report() const
{
    if (!best)
        throw Error("sweep: no run completed");
    return *entries[*best].report;
}

std::optional<std::size_t> select_best(const std::vector<SweepEntry>& entries)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (!e.report || e.report->aborted)
            continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = entries[*best];
        const double tv = e.report->metrics.tv;
        const double btv = b.report->metrics.tv;
        if (tv < btv || (tv == btv && e.tau < b.tau))
            best = i;
    }
    return best;
}

SweepResult sweep(const RunConfig& config, unsigned threads)
{
    config.validate();
    SweepResult result;
    for (double t : config.tau_grid)
        result.entries.push_back({t, std::nullopt, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < result.entries.size(); i = next++) {
            RunConfig c = config;
            c.tau = result.entries[i].tau;
            c.tau_grid = {c.tau};
            try {
                result.entries[i].report = fit(c);
            } catch (const std::exception& e) {
                result.entries[i].error = e.what();
            }
        }
    };
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(result.entries.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    result.best = select_best(result.entries);
    return result;
}

// ---------------------------------------------------------------- output

std::string results_json(const FitReport& report)
{
    return Json(report).dump(2) + "\n";
}

std::string pmf_csv(const FitReport& report)
{
    std::ostringstream out;
    out << "category,target_prob,recovered_prob\n";
    const Eigen::Index n = std::max(report.target.size(), report.recovered.size());
    auto at = [](const Vector& v, Eigen::Index i) { return i < v.size() ? v[i] : 0.0; };
    for (Eigen::Index i = 0; i < n; ++i)
        out << i << ',' << format_number(at(report.target.probs, i)) << ','
            << format_number(at(report.recovered.probs, i)) << '\n';
    if (report.target.support == SupportKind::TruncatedInfinite)
        out << "tail," << format_number(report.target.tail_mass) << ',' << format_number(report.recovered.tail_mass)
            << '\n';
    return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    f << content;
    f.close();
    if (!f)
        throw Error("cannot write " + path.string());
}

std::filesystem::path prepare_dir(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

} // namespace

void emit(const FitReport& report, const std::string& dir)
{
    const auto base = prepare_dir(dir);
    write_file(base / "results.json", results_json(report));
    write_file(base / "pmf.csv", pmf_csv(report));
}

void emit(const SweepResult& result, const std::string& dir)
{
    const auto base = prepare_dir(dir);
    Json table = Json::array();
    for (const auto& e : result.entries) {
        Json row{{"tau", e.tau}};
        if (e.report) {
            row["status"] = e.report->aborted ? "aborted" : "ok";
            row["tv"] = e.report->metrics.tv;
            row["kl"] = e.report->metrics.kl;
            row["l2"] = e.report->metrics.l2;
            row["final_loss"] = e.report->final_loss;
            if (e.report->aborted)
                row["error"] = e.report->diagnostic;
        } else {
            row["status"] = "failed";
            row["error"] = e.error;
        }
        table.push_back(row);
    }
    Json doc = result.best ? Json(result.best_report()) : Json::object();
    doc["sweep"] = table;
    doc["best_tau"] = result.best ? Json(result.entries[*result.best].tau) : Json();
    write_file(base / "results.json", doc.dump(2) + "\n");
    if (result.best)
        write_file(base / "pmf.csv", pmf_csv(result.best_report()));
}

} // namespace igr
