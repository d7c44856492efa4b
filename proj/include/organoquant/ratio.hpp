#pragma once

#include <optional>
#include <stdexcept>

namespace organoquant {

/// A ratio that is undefined when its denominator count is zero. Undefined is
/// a first-class value; reports render it as "inf".
class Ratio {
public:
    Ratio() = default;

    static Ratio undefined() { return Ratio{}; }
    static Ratio of(double v) {
        Ratio r;
        r.value_ = v;
        return r;
    }

    bool defined() const { return value_.has_value(); }

    double value() const {
        if (!value_) throw std::logic_error("Ratio: value() on undefined ratio");
        return *value_;
    }

    bool operator==(const Ratio&) const = default;

private:
    std::optional<double> value_;
};

}  // namespace organoquant
