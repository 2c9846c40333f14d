#ifndef DRIFTML_PARAMS_HPP
#define DRIFTML_PARAMS_HPP

#include "driftml/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace driftml {

/// One hyperparameter value. Integers and reals are distinct so spaces can validate them exactly.
using ParamValue = std::variant<bool, std::int64_t, double, std::string>;

[[nodiscard]] std::string to_string(const ParamValue &value);
[[nodiscard]] nlohmann::json to_json(const ParamValue &value);
[[nodiscard]] ParamValue param_from_json(const nlohmann::json &j);

/// Named hyperparameter assignment with typed accessors.
class ParamSet {
  public:
    ParamSet() = default;
    ParamSet(std::initializer_list<std::pair<const std::string, ParamValue>> values) : values_{ values } {}

    void set(const std::string &name, ParamValue value) { values_[name] = std::move(value); }
    void erase(const std::string &name) { values_.erase(name); }
    [[nodiscard]] bool contains(const std::string &name) const { return values_.contains(name); }
    [[nodiscard]] const ParamValue &at(const std::string &name) const;
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    // Typed reads; integer() also accepts an integral real, real() also accepts an integer.
    [[nodiscard]] bool flag(const std::string &name) const;
    [[nodiscard]] std::int64_t integer(const std::string &name) const;
    [[nodiscard]] double real(const std::string &name) const;
    [[nodiscard]] const std::string &choice(const std::string &name) const;

    [[nodiscard]] auto begin() const { return values_.begin(); }
    [[nodiscard]] auto end() const { return values_.end(); }

    [[nodiscard]] nlohmann::json to_json() const;
    static ParamSet from_json(const nlohmann::json &j);

    friend bool operator==(const ParamSet &, const ParamSet &) = default;

  private:
    std::map<std::string, ParamValue> values_;
};

enum class ParamKind { flag, integer, real, categorical };

/// Active only when `parent` is active and takes one of `values`.
struct ParamCondition {
    std::string parent;
    std::vector<ParamValue> values;
};

struct ParamDomain {
    std::string name;
    ParamKind kind{ ParamKind::real };
    double low{ 0.0 };
    double high{ 1.0 };
    bool log_scale{ false };
    std::vector<std::string> choices;
    ParamValue default_value{ 0.0 };
    std::optional<ParamCondition> condition;

    static ParamDomain flag(std::string name, bool default_value);
    static ParamDomain integer(std::string name, std::int64_t low, std::int64_t high, std::int64_t default_value, bool log_scale = false);
    static ParamDomain real(std::string name, double low, double high, double default_value, bool log_scale = false);
    static ParamDomain categorical(std::string name, std::vector<std::string> choices, std::string default_value);

    ParamDomain &when(std::string parent, std::vector<ParamValue> values) &;
    ParamDomain &&when(std::string parent, std::vector<ParamValue> values) &&;

    /// True iff `value` has the right type and lies in the domain.
    [[nodiscard]] bool admits(const ParamValue &value) const;
    [[nodiscard]] ParamValue sample(rng_type &rng) const;
};

/// Conditional hyperparameter space. Domains are listed parents-first.
class ParamSpace {
  public:
    ParamSpace() = default;
    explicit ParamSpace(std::vector<ParamDomain> domains);

    [[nodiscard]] const std::vector<ParamDomain> &domains() const noexcept { return domains_; }
    [[nodiscard]] const ParamDomain *find(std::string_view name) const;
    [[nodiscard]] bool empty() const noexcept { return domains_.empty(); }

    /// Whether the domain's condition holds under the (partial) assignment.
    [[nodiscard]] bool active(const ParamDomain &domain, const ParamSet &assignment) const;

    /// Draws every active parameter: uniform over categories, (log-)uniform over ranges.
    [[nodiscard]] ParamSet sample(rng_type &rng) const;
    /// Every active parameter at its default.
    [[nodiscard]] ParamSet defaults() const;

    /// Empty string when `assignment` has exactly the active parameters, each inside its domain;
    /// otherwise a description of the first violation.
    [[nodiscard]] std::string violation(const ParamSet &assignment) const;
    [[nodiscard]] bool contains(const ParamSet &assignment) const { return violation(assignment).empty(); }

    /// Fills missing active parameters with defaults and drops inactive ones.
    [[nodiscard]] ParamSet complete(const ParamSet &assignment) const;

  private:
    std::vector<ParamDomain> domains_;
};

}  // namespace driftml

#endif  // DRIFTML_PARAMS_HPP
