#include "driftml/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace driftml {

std::string to_string(const ParamValue &value) {
    return std::visit(
        [](const auto &v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else if constexpr (std::is_same_v<T, double>) {
                std::ostringstream os;
                os.precision(6);
                os << v;
                return os.str();
            } else {
                return std::to_string(v);
            }
        },
        value);
}

nlohmann::json to_json(const ParamValue &value) {
    return std::visit([](const auto &v) { return nlohmann::json(v); }, value);
}

ParamValue param_from_json(const nlohmann::json &j) {
    if (j.is_boolean()) {
        return j.get<bool>();
    }
    if (j.is_number_integer()) {
        return j.get<std::int64_t>();
    }
    if (j.is_number_float()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        return j.get<std::string>();
    }
    throw config_error("hyperparameter value must be a boolean, number or string, got " + j.dump());
}

const ParamValue &ParamSet::at(const std::string &name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) {
        throw invalid_argument("missing hyperparameter '" + name + "'");
    }
    return it->second;
}

bool ParamSet::flag(const std::string &name) const {
    const auto &v = at(name);
    if (const auto *b = std::get_if<bool>(&v)) {
        return *b;
    }
    throw invalid_argument("hyperparameter '" + name + "' is not a flag");
}

std::int64_t ParamSet::integer(const std::string &name) const {
    const auto &v = at(name);
    if (const auto *i = std::get_if<std::int64_t>(&v)) {
        return *i;
    }
    if (const auto *d = std::get_if<double>(&v); d != nullptr && std::floor(*d) == *d) {
        return static_cast<std::int64_t>(*d);
    }
    throw invalid_argument("hyperparameter '" + name + "' is not an integer");
}

double ParamSet::real(const std::string &name) const {
    const auto &v = at(name);
    if (const auto *d = std::get_if<double>(&v)) {
        return *d;
    }
    if (const auto *i = std::get_if<std::int64_t>(&v)) {
        return static_cast<double>(*i);
    }
    throw invalid_argument("hyperparameter '" + name + "' is not a real");
}

const std::string &ParamSet::choice(const std::string &name) const {
    const auto &v = at(name);
    if (const auto *s = std::get_if<std::string>(&v)) {
        return *s;
    }
    throw invalid_argument("hyperparameter '" + name + "' is not categorical");
}

nlohmann::json ParamSet::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto &[k, v] : values_) {
        j[k] = driftml::to_json(v);
    }
    return j;
}

ParamSet ParamSet::from_json(const nlohmann::json &j) {
    if (!j.is_object()) {
        throw config_error("hyperparameters must be an object");
    }
    ParamSet p;
    for (const auto &[k, v] : j.items()) {
        p.set(k, param_from_json(v));
    }
    return p;
}

ParamDomain ParamDomain::flag(std::string name, bool default_value) {
    ParamDomain d;
    d.name = std::move(name);
    d.kind = ParamKind::flag;
    d.default_value = default_value;
    return d;
}

ParamDomain ParamDomain::integer(std::string name, std::int64_t low, std::int64_t high, std::int64_t default_value, bool log_scale) {
    ParamDomain d;
    d.name = std::move(name);
    d.kind = ParamKind::integer;
    d.low = static_cast<double>(low);
    d.high = static_cast<double>(high);
    d.log_scale = log_scale;
    d.default_value = default_value;
    return d;
}

ParamDomain ParamDomain::real(std::string name, double low, double high, double default_value, bool log_scale) {
    ParamDomain d;
    d.name = std::move(name);
    d.kind = ParamKind::real;
    d.low = low;
    d.high = high;
    d.log_scale = log_scale;
    d.default_value = default_value;
    return d;
}

ParamDomain ParamDomain::categorical(std::string name, std::vector<std::string> choices, std::string default_value) {
    ParamDomain d;
    d.name = std::move(name);
    d.kind = ParamKind::categorical;
    d.choices = std::move(choices);
    d.default_value = std::move(default_value);
    return d;
}

ParamDomain &ParamDomain::when(std::string parent, std::vector<ParamValue> values) & {
    condition = ParamCondition{ std::move(parent), std::move(values) };
    return *this;
}

ParamDomain &&ParamDomain::when(std::string parent, std::vector<ParamValue> values) && {
    condition = ParamCondition{ std::move(parent), std::move(values) };
    return std::move(*this);
}

bool ParamDomain::admits(const ParamValue &value) const {
    switch (kind) {
        case ParamKind::flag:
            return std::holds_alternative<bool>(value);
        case ParamKind::integer: {
            const auto *i = std::get_if<std::int64_t>(&value);
            return i != nullptr && static_cast<double>(*i) >= low && static_cast<double>(*i) <= high;
        }
        case ParamKind::real: {
            const auto *r = std::get_if<double>(&value);
            return r != nullptr && *r >= low && *r <= high;
        }
        case ParamKind::categorical: {
            const auto *s = std::get_if<std::string>(&value);
            return s != nullptr && std::find(choices.begin(), choices.end(), *s) != choices.end();
        }
    }
    return false;
}

ParamValue ParamDomain::sample(rng_type &rng) const {
    switch (kind) {
        case ParamKind::flag:
            return uniform01(rng) < 0.5;
        case ParamKind::integer: {
            if (log_scale) {
                const double lo = std::log(low);
                const double hi = std::log(high + 1.0);
                const auto v = static_cast<std::int64_t>(std::floor(std::exp(lo + (hi - lo) * uniform01(rng))));
                return std::clamp(v, static_cast<std::int64_t>(low), static_cast<std::int64_t>(high));
            }
            const auto span = static_cast<std::size_t>(high - low) + 1;
            return static_cast<std::int64_t>(low) + static_cast<std::int64_t>(uniform_index(rng, span));
        }
        case ParamKind::real: {
            const double u = uniform01(rng);
            if (log_scale) {
                const double lo = std::log(low);
                const double hi = std::log(high);
                return std::clamp(std::exp(lo + (hi - lo) * u), low, high);
            }
            return low + (high - low) * u;
        }
        case ParamKind::categorical:
            return choices[uniform_index(rng, choices.size())];
    }
    return {};
}

ParamSpace::ParamSpace(std::vector<ParamDomain> domains) : domains_{ std::move(domains) } {
    for (std::size_t i = 0; i < domains_.size(); ++i) {
        const auto &d = domains_[i];
        if (!d.admits(d.default_value)) {
            throw invalid_argument("default of '" + d.name + "' lies outside its domain");
        }
        if (d.kind == ParamKind::categorical && d.choices.empty()) {
            throw invalid_argument("categorical '" + d.name + "' has no choices");
        }
        if (d.condition) {
            const auto parent = std::find_if(domains_.begin(), domains_.begin() + static_cast<std::ptrdiff_t>(i), [&](const ParamDomain &p) { return p.name == d.condition->parent; });
            if (parent == domains_.begin() + static_cast<std::ptrdiff_t>(i)) {
                throw invalid_argument("condition parent '" + d.condition->parent + "' of '" + d.name + "' must be listed before it");
            }
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (domains_[j].name == d.name) {
                throw invalid_argument("duplicate hyperparameter '" + d.name + "'");
            }
        }
    }
}

const ParamDomain *ParamSpace::find(std::string_view name) const {
    const auto it = std::find_if(domains_.begin(), domains_.end(), [&](const ParamDomain &d) { return d.name == name; });
    return it == domains_.end() ? nullptr : &*it;
}

bool ParamSpace::active(const ParamDomain &domain, const ParamSet &assignment) const {
    if (!domain.condition) {
        return true;
    }
    const auto *parent = find(domain.condition->parent);
    if (parent == nullptr || !active(*parent, assignment) || !assignment.contains(parent->name)) {
        return false;
    }
    const auto &value = assignment.at(parent->name);
    return std::find(domain.condition->values.begin(), domain.condition->values.end(), value) != domain.condition->values.end();
}

ParamSet ParamSpace::sample(rng_type &rng) const {
    ParamSet out;
    for (const auto &d : domains_) {
        if (active(d, out)) {
            out.set(d.name, d.sample(rng));
        }
    }
    return out;
}

ParamSet ParamSpace::defaults() const {
    ParamSet out;
    for (const auto &d : domains_) {
        if (active(d, out)) {
            out.set(d.name, d.default_value);
        }
    }
    return out;
}

std::string ParamSpace::violation(const ParamSet &assignment) const {
    for (const auto &[name, value] : assignment) {
        if (find(name) == nullptr) {
            return "unknown hyperparameter '" + name + "'";
        }
    }
    for (const auto &d : domains_) {
        const bool is_active = active(d, assignment);
        if (is_active && !assignment.contains(d.name)) {
            return "missing active hyperparameter '" + d.name + "'";
        }
        if (!is_active && assignment.contains(d.name)) {
            return "hyperparameter '" + d.name + "' is set but inactive";
        }
        if (is_active && !d.admits(assignment.at(d.name))) {
            return "hyperparameter '" + d.name + "' = " + to_string(assignment.at(d.name)) + " lies outside its domain";
        }
    }
    return {};
}

ParamSet ParamSpace::complete(const ParamSet &assignment) const {
    ParamSet out;
    for (const auto &d : domains_) {
        if (!active(d, out)) {
            continue;
        }
        if (assignment.contains(d.name)) {
            ParamValue v = assignment.at(d.name);
            // Integral reals from config files are accepted for integer parameters.
            if (d.kind == ParamKind::integer) {
                if (const auto *r = std::get_if<double>(&v); r != nullptr && std::floor(*r) == *r) {
                    v = static_cast<std::int64_t>(*r);
                }
            } else if (d.kind == ParamKind::real) {
                if (const auto *i = std::get_if<std::int64_t>(&v)) {
                    v = static_cast<double>(*i);
                }
            }
            out.set(d.name, std::move(v));
        } else {
            out.set(d.name, d.default_value);
        }
    }
    return out;
}

}  // namespace driftml
