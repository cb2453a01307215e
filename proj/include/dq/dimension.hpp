#pragma once

#include <optional>
#include <string_view>

namespace dq {

/// The six quality dimensions covered by detection and correction.
enum class Dimension { Accuracy, Conformity, Completeness, Uniqueness, Consistency, Readability };

inline constexpr Dimension kAllDimensions[] = {
    Dimension::Accuracy,    Dimension::Conformity,  Dimension::Completeness,
    Dimension::Uniqueness,  Dimension::Consistency, Dimension::Readability,
};

constexpr const char* to_string(Dimension d) {
    switch (d) {
        case Dimension::Accuracy: return "accuracy";
        case Dimension::Conformity: return "conformity";
        case Dimension::Completeness: return "completeness";
        case Dimension::Uniqueness: return "uniqueness";
        case Dimension::Consistency: return "consistency";
        case Dimension::Readability: return "readability";
    }
    return "?";
}

inline std::optional<Dimension> dimension_from_name(std::string_view name) {
    for (Dimension d : kAllDimensions)
        if (name == to_string(d)) return d;
    return std::nullopt;
}

}  // namespace dq
