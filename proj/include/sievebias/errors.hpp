#pragma once

#include <stdexcept>
#include <string>

namespace sievebias {

// Singular or numerically rank-deficient operator where an inverse is required.
struct singular_error : std::runtime_error {
    explicit singular_error(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver exhausted its budget; message carries diagnostics.
struct convergence_error : std::runtime_error {
    explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// A sampled contrast ratio came out nonpositive where concavity requires > 0.
struct not_concave_error : std::runtime_error {
    explicit not_concave_error(const std::string& what) : std::runtime_error(what) {}
};

// A closed-form bound was requested outside its region of validity
// (e.g. delta >= 1/2, beta >= 1, nonpositive b).
struct bound_error : std::runtime_error {
    explicit bound_error(const std::string& what) : std::runtime_error(what) {}
};

// Experiment configuration problems (missing/inconsistent fields).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sievebias
