#include "igr/serialization.hpp"

#include <cmath>
#include <vector>

namespace igr {

namespace {

Json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec(const Json& j)
{
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string_view support_name(SupportKind s) { return s == SupportKind::Finite ? "finite" : "truncated-infinite"; }

SupportKind support_from(const std::string& s)
{
    if (s == "finite")
        return SupportKind::Finite;
    if (s == "truncated-infinite")
        return SupportKind::TruncatedInfinite;
    throw InvalidInputError("unknown support kind '" + s + "'");
}

template <class T>
T config_value(const Json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

} // namespace

void to_json(Json& j, const PlanarLayer& layer) { j = {{"w", vec(layer.w)}, {"u", vec(layer.u)}, {"b", layer.b}}; }

void from_json(const Json& j, PlanarLayer& layer)
{
    layer.w = vec(j.at("w"));
    layer.u = vec(j.at("u"));
    layer.b = j.at("b").get<double>();
}

void to_json(Json& j, const TransformSpec& spec)
{
    j = {{"kind", std::string(to_string(spec.kind))}, {"delta", spec.delta}, {"flow", spec.flow}};
}

void from_json(const Json& j, TransformSpec& spec)
{
    spec.kind = transform_kind_from_string(j.at("kind").get<std::string>());
    spec.delta = j.value("delta", 1.0);
    spec.flow = j.value("flow", std::vector<PlanarLayer>{});
}

void to_json(Json& j, const DiscretePmf& pmf)
{
    j = {{"probs", vec(pmf.probs)}, {"tail_mass", pmf.tail_mass}, {"support", support_name(pmf.support)}};
}

void from_json(const Json& j, DiscretePmf& pmf)
{
    pmf.probs = vec(j.at("probs"));
    pmf.tail_mass = j.value("tail_mass", 0.0);
    pmf.support = support_from(j.value("support", std::string("finite")));
}

void to_json(Json& j, const IgrParams& params)
{
    j = {{"mu", vec(params.mu)}, {"sigma", vec(params.sigma)}, {"tau", params.tau}, {"spec", params.spec}};
}

void from_json(const Json& j, IgrParams& params)
{
    params.mu = vec(j.at("mu"));
    params.sigma = vec(j.at("sigma"));
    params.tau = j.at("tau").get<double>();
    params.spec = j.at("spec").get<TransformSpec>();
}

void to_json(Json& j, const GsParams& params) { j = {{"alpha", vec(params.alpha)}, {"tau", params.tau}}; }

void from_json(const Json& j, GsParams& params)
{
    params.alpha = vec(j.at("alpha"));
    params.tau = j.at("tau").get<double>();
}

void to_json(Json& j, const TargetSpec& spec) { j = spec.to_string(); }

void from_json(const Json& j, TargetSpec& spec)
{
    if (!j.is_string())
        throw ConfigError("target must be a string such as \"poisson:50\"");
    spec = TargetSpec::parse(j.get<std::string>());
}

void to_json(Json& j, const RunConfig& c)
{
    j = {{"model", std::string(to_string(c.model))},
         {"target", c.target},
         {"k", c.k ? Json(*c.k) : Json()},
         {"rho", c.rho ? Json(*c.rho) : Json()},
         {"tau", c.tau},
         {"tau_grid", c.tau_grid},
         {"steps", c.steps},
         {"batch", c.batch},
         {"seed", c.seed},
         {"lr", c.lr},
         {"recovery_samples", c.recovery_samples},
         {"recovery", std::string(to_string(c.recovery))},
         {"flow_layers", c.flow_layers},
         {"record_wall_time", c.record_wall_time}};
}

void from_json(const Json& j, RunConfig& c)
{
    c = RunConfig{};
    merge_config(j, c);
}

void merge_config(const Json& j, RunConfig& c)
{
    if (!j.is_object())
        throw ConfigError("config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "model")
            c.model = model_kind_from_string(config_value<std::string>(j, "model"));
        else if (key == "target")
            c.target = value.get<TargetSpec>();
        else if (key == "k")
            c.k = value.is_null() ? std::nullopt : std::optional<long>(config_value<long>(j, "k"));
        else if (key == "rho")
            c.rho = value.is_null() ? std::nullopt : std::optional<double>(config_value<double>(j, "rho"));
        else if (key == "tau")
            c.tau = config_value<double>(j, "tau");
        else if (key == "tau_grid")
            c.tau_grid = config_value<std::vector<double>>(j, "tau_grid");
        else if (key == "steps")
            c.steps = config_value<long>(j, "steps");
        else if (key == "batch")
            c.batch = config_value<long>(j, "batch");
        else if (key == "seed")
            c.seed = config_value<std::uint64_t>(j, "seed");
        else if (key == "lr")
            c.lr = config_value<double>(j, "lr");
        else if (key == "recovery_samples")
            c.recovery_samples = config_value<long>(j, "recovery_samples");
        else if (key == "recovery")
            c.recovery = recovery_mode_from_string(config_value<std::string>(j, "recovery"));
        else if (key == "flow_layers")
            c.flow_layers = config_value<int>(j, "flow_layers");
        else if (key == "record_wall_time")
            c.record_wall_time = config_value<bool>(j, "record_wall_time");
        else if (key == "out")
            c.out = config_value<std::string>(j, "out");
        else
            throw ConfigError("config: unknown key '" + key + "'");
    }
}

void to_json(Json& j, const FitReport& r)
{
    Json metrics = nullptr;
    if (!r.aborted)
        metrics = {{"tv", r.metrics.tv}, {"kl", r.metrics.kl}, {"l2", r.metrics.l2}, {"final_loss", r.final_loss}};
    j = {{"config", r.config},
         {"status", r.aborted ? "aborted" : "ok"},
         {"metrics", metrics},
         {"recovered", r.recovered},
         {"target", r.target},
         {"trajectory", r.trajectory},
         {"wall_seconds", r.wall_seconds ? Json(*r.wall_seconds) : Json()},
         {"seed", r.config.seed}};
    if (r.aborted) {
        j["diagnostic"] = r.diagnostic;
        j["final_loss"] = r.final_loss;
    }
}

void from_json(const Json& j, FitReport& r)
{
    r = FitReport{};
    r.config = j.at("config").get<RunConfig>();
    r.aborted = j.value("status", std::string("ok")) == "aborted";
    const Json& m = j.at("metrics");
    if (!m.is_null()) {
        r.metrics = {m.at("tv").get<double>(), m.at("kl").get<double>(), m.at("l2").get<double>()};
        r.final_loss = m.at("final_loss").get<double>();
    } else {
        r.final_loss = j.value("final_loss", 0.0);
    }
    r.recovered = j.at("recovered").get<DiscretePmf>();
    r.target = j.at("target").get<DiscretePmf>();
    r.trajectory = j.at("trajectory").get<std::vector<double>>();
    if (!j.at("wall_seconds").is_null())
        r.wall_seconds = j.at("wall_seconds").get<double>();
    r.diagnostic = j.value("diagnostic", std::string());
}

Json growable_to_json(const GrowableIgrParams& p)
{
    return {{"tau", p.tau()},         {"rho", p.rho()},           {"spec", p.spec()},
            {"mu", p.mu_prefix()},    {"sigma", p.sigma_prefix()}, {"high_water", p.high_water()},
            {"hard_cap", p.hard_cap()}};
}

GrowableIgrParams growable_from_json(const Json& j)
{
    GrowableIgrParams p(j.at("tau").get<double>(), j.at("rho").get<double>(), j.at("spec").get<TransformSpec>());
    const auto mu = j.at("mu").get<std::vector<double>>();
    const auto sigma = j.at("sigma").get<std::vector<double>>();
    if (mu.size() != sigma.size())
        throw InvalidInputError("truncated IGR: mu and sigma prefixes differ in length");
    for (std::size_t k = 0; k < mu.size(); ++k)
        p.set(k, mu[k], sigma[k]);
    p.set_hard_cap(j.value("hard_cap", GrowableIgrParams::kDefaultHardCap));
    return p;
}

} // namespace igr
