#pragma once

#include <stdexcept>
#include <string>

namespace aoi {

// Invalid configuration; `field()` names the offending key (dotted path).
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace aoi
