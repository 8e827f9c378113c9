#include "hrp/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace hrp {

namespace {

void require_finite_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
        std::ostringstream os;
        os << name << " must be finite and > 0, got " << v;
        throw ConfigError(os.str());
    }
}

}  // namespace

VolatilityFn VolatilityFn::constant(double sigma) {
    require_finite_positive(sigma, "sigma");
    VolatilityFn f;
    f.kind_ = Kind::Constant;
    f.sigma_ = sigma;
    f.lo_ = sigma;
    f.hi_ = sigma;
    return f;
}

VolatilityFn VolatilityFn::constant_test_mode(double sigma) {
    if (!std::isfinite(sigma) || sigma < 0.0) {
        std::ostringstream os;
        os << "sigma must be finite and >= 0, got " << sigma;
        throw ConfigError(os.str());
    }
    VolatilityFn f;
    f.kind_ = Kind::Constant;
    f.sigma_ = sigma;
    f.lo_ = sigma;
    f.hi_ = sigma;
    return f;
}

VolatilityFn VolatilityFn::hobson_rogers_smile(double eta, double eps, double cap) {
    require_finite_positive(eta, "eta");
    require_finite_positive(cap, "cap");
    if (!std::isfinite(eps) || eps < 0.0) throw ConfigError("eps must be finite and >= 0");
    if (cap < eta) throw ConfigError("cap must be >= eta, otherwise the curve is not bounded below by eta");
    VolatilityFn f;
    f.kind_ = Kind::HobsonRogersSmile;
    f.eta_ = eta;
    f.eps_ = eps;
    f.cap_ = cap;
    f.lo_ = eta;
    // The unbounded branch eta*sqrt(1+eps z^2) exceeds any cap eventually when
    // eps > 0, so the cap is the supremum; with eps = 0 the curve is flat.
    f.hi_ = (eps > 0.0) ? cap : eta;
    return f;
}

double VolatilityFn::operator()(double z) const {
    if (!std::isfinite(z) || z <= 0.0) {
        std::ostringstream os;
        os << "volatility queried outside its domain: z = " << z << " (requires z > 0)";
        throw ConfigError(os.str());
    }
    if (kind_ == Kind::Constant) return sigma_;
    return std::min(eta_ * std::sqrt(1.0 + eps_ * z * z), cap_);
}

std::string VolatilityFn::describe() const {
    std::ostringstream os;
    if (kind_ == Kind::Constant) {
        os << "constant(" << sigma_ << ")";
    } else {
        os << "hobson_rogers_smile(eta=" << eta_ << ", eps=" << eps_ << ", cap=" << cap_ << ")";
    }
    return os.str();
}

void ModelParams::validate() const {
    require_finite_positive(r, "r");
    require_finite_positive(lambda, "lambda");
    require_finite_positive(K, "K");
    require_finite_positive(T, "T");
}

void MarketState::validate() const {
    require_finite_positive(x0, "x0");
    require_finite_positive(z0, "z0");
}

double drift_ln_z(const ModelParams& p, const VolatilityFn& vol, double z) {
    p.validate();
    const double s = vol(z);
    return -p.lambda * (z - (1.0 + p.r / p.lambda - s * s / (2.0 * p.lambda)));
}

ReversionZone reversion_zone(const ModelParams& p, const VolatilityFn& vol) {
    p.validate();
    const double base = 1.0 + p.r / p.lambda;
    ReversionZone zone;
    zone.lo = base - vol.sigma_hi() * vol.sigma_hi() / (2.0 * p.lambda);
    zone.hi = base - vol.sigma_lo() * vol.sigma_lo() / (2.0 * p.lambda);
    if (zone.lo <= 0.0) {
        std::ostringstream os;
        os << "reversion zone lower edge is not positive (" << zone.lo
           << "); the ratio process would be pushed toward 0";
        throw ConfigError(os.str());
    }
    return zone;
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return it.key() == k;
            }) == allowed.end()) {
            std::ostringstream os;
            os << "unknown key \"" << it.key() << "\" in " << where;
            throw ConfigError(os.str());
        }
    }
}

double get_number(const json& obj, const char* key, const char* where) {
    if (!obj.contains(key)) {
        std::ostringstream os;
        os << "missing key \"" << key << "\" in " << where;
        throw ConfigError(os.str());
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        std::ostringstream os;
        os << "key \"" << key << "\" in " << where << " must be a number";
        throw ConfigError(os.str());
    }
    return v.get<double>();
}

}  // namespace

ModelConfig parse_model_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("model config must be a JSON object");

    reject_unknown_keys(doc, {"r", "lambda", "K", "T", "vol", "x0", "z0"}, "model config");

    ModelConfig cfg;
    cfg.params.r = get_number(doc, "r", "model config");
    cfg.params.lambda = get_number(doc, "lambda", "model config");
    cfg.params.K = get_number(doc, "K", "model config");
    cfg.params.T = get_number(doc, "T", "model config");

    if (!doc.contains("vol") || !doc.at("vol").is_object())
        throw ConfigError("model config requires a \"vol\" object");
    const json& vol = doc.at("vol");
    if (!vol.contains("kind") || !vol.at("kind").is_string())
        throw ConfigError("vol requires a string \"kind\"");
    const std::string kind = vol.at("kind").get<std::string>();
    if (kind == "constant") {
        reject_unknown_keys(vol, {"kind", "sigma"}, "vol");
        cfg.vol = VolatilityFn::constant(get_number(vol, "sigma", "vol"));
    } else if (kind == "hobson_rogers_smile") {
        reject_unknown_keys(vol, {"kind", "eta", "eps", "cap"}, "vol");
        cfg.vol = VolatilityFn::hobson_rogers_smile(get_number(vol, "eta", "vol"),
                                                    get_number(vol, "eps", "vol"),
                                                    get_number(vol, "cap", "vol"));
    } else {
        throw ConfigError("vol kind must be \"constant\" or \"hobson_rogers_smile\", got \"" +
                          kind + "\"");
    }

    cfg.state.x0 = get_number(doc, "x0", "model config");
    cfg.state.z0 = get_number(doc, "z0", "model config");

    cfg.params.validate();
    cfg.state.validate();
    return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
    json vol;
    if (cfg.vol.kind() == VolatilityFn::Kind::Constant) {
        vol = {{"kind", "constant"}, {"sigma", cfg.vol.constant_sigma()}};
    } else {
        vol = {{"kind", "hobson_rogers_smile"},
               {"eta", cfg.vol.eta()},
               {"eps", cfg.vol.eps()},
               {"cap", cfg.vol.cap()}};
    }
    json doc = {{"r", cfg.params.r},     {"lambda", cfg.params.lambda},
                {"K", cfg.params.K},     {"T", cfg.params.T},
                {"vol", vol},            {"x0", cfg.state.x0},
                {"z0", cfg.state.z0}};
    return doc.dump(2);
}

}  // namespace hrp
